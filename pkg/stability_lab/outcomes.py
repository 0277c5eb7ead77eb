"""Verdict vocabulary shared by the criteria, the oracle and the catalog."""

# boundedness
ALL_BOUNDED = "AllBounded"
ALL_VANISH = "AllVanish"
UNBOUNDED = "UnboundedSolutionExists"

# stability
LIAPUNOV = "LiapunovStable"
ASYMPTOTIC = "AsymptoticallyStable"
UNSTABLE = "Unstable"

UNKNOWN = "Unknown"

# trends
BOUNDED_ABOVE = "BoundedAbove"
TO_MINUS_INF = "DivergesToMinusInf"
TO_PLUS_INF = "DivergesToPlusInf"
INCONCLUSIVE = "Inconclusive"

BOUNDEDNESS = (ALL_BOUNDED, ALL_VANISH, UNBOUNDED, UNKNOWN)
STABILITY = (LIAPUNOV, ASYMPTOTIC, UNSTABLE, UNKNOWN)
TRENDS = (BOUNDED_ABOVE, TO_MINUS_INF, TO_PLUS_INF, INCONCLUSIVE)
