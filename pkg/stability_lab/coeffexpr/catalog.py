"""
Built-in problems.

Three parameterised equations with published verdicts plus two controls:
a constant-coefficient equation (verdict from the characteristic roots)
and a WKB-convergent equation with D(t) = t^4.
"""

import math
from typing import Iterable, Mapping

import numpy as np

from stability_lab.coeffexpr.problem import ClaimRule, IntegralDecomposition, Problem
from stability_lab.outcomes import ALL_BOUNDED, ALL_VANISH, ASYMPTOTIC, LIAPUNOV, UNBOUNDED, UNSTABLE


def _re(params: Mapping[str, complex], name: str) -> float:
    return complex(params[name]).real


def _linear_growth_claim(params):
    if _re(params, "lambda") > 0:
        return {"boundedness": ALL_VANISH, "wkb": "divergent"}
    return {"boundedness": UNBOUNDED, "stability": UNSTABLE, "wkb": "divergent"}


def _quadratic_growth_claim(params):
    if _re(params, "lambda") > 0:
        return {"boundedness": ALL_VANISH, "stability": ASYMPTOTIC, "wkb": "divergent"}
    return {"boundedness": UNBOUNDED, "stability": UNSTABLE, "wkb": "divergent"}


def _periodic_claim(params):
    if _re(params, "lambda") > math.sqrt(max(_re(params, "alpha"), 0.0)):
        return {"boundedness": ALL_VANISH, "stability": ASYMPTOTIC, "wkb": "divergent"}
    return {"boundedness": UNBOUNDED, "stability": UNSTABLE, "wkb": "divergent"}


def _characteristic_claim(params):
    roots = np.roots([1.0, complex(params["a"]), complex(params["b"])])
    top = float(np.max(roots.real))
    if top < -1e-12:
        return {"boundedness": ALL_VANISH, "stability": ASYMPTOTIC}
    repeated = abs(roots[0] - roots[1]) <= 1e-12
    if top > 1e-12 or repeated:
        return {"boundedness": UNBOUNDED, "stability": UNSTABLE}
    return {"boundedness": ALL_BOUNDED, "stability": LIAPUNOV}


def _wkb_control_claim(params):
    return {"boundedness": UNBOUNDED, "stability": UNSTABLE, "wkb": "convergent"}


CATALOG: dict[str, Problem] = {
    problem.id: problem
    for problem in (
        Problem(
            id="ex2.1",
            p="lambda*t",
            q="lambda/2 + lambda^2*t^2/4 - t/4 - cumint(sin(exp(t))^2)/4",
            t0=1.0,
            params={"lambda": 1.0},
            decomposition=(IntegralDecomposition("sin(exp(t))^2", trend=0.5, bound=0.5),),
            claim=ClaimRule(
                "Re lambda > 0 => all solutions vanish; Re lambda <= 0 => unbounded solution exists",
                _linear_growth_claim,
            ),
            horizon=40.0,
            oracle_horizon=30.0,
            description="p = lambda t, D = t + int sin^2 e^s ds",
        ),
        Problem(
            id="ex2.2",
            p="lambda*t^2",
            q="lambda*t + lambda^2*t^4/4 - t^2/4 - cumint(sin(exp(t)))^2/4",
            t0=1.0,
            params={"lambda": 1.0},
            decomposition=(IntegralDecomposition("sin(exp(t))", trend=0.0, bound=1.0),),
            claim=ClaimRule(
                "Re lambda > 0 => asymptotically stable; Re lambda <= 0 => unstable",
                _quadratic_growth_claim,
            ),
            horizon=60.0,
            oracle_horizon=30.0,
            description="p = lambda t^2, D = t^2 + (int sin e^s ds)^2",
        ),
        Problem(
            id="ex2.3",
            p="lambda + mu*sin(t)",
            q="mu*cos(t)/2 + (lambda + mu*sin(t))^2/4"
              " - (alpha + beta*cos(ln(t)) + gamma*cumint(sin(t)^2/t))/4",
            t0=1.0,
            params={"lambda": 3.0, "mu": 1.0, "alpha": 4.0, "beta": 1.0, "gamma": 1.0},
            claim=ClaimRule(
                "Re lambda > sqrt(alpha) => r1 -> -inf (asymptotically stable); otherwise r1 -> +inf",
                _periodic_claim,
            ),
            horizon=200.0,
            oracle_horizon=200.0,
            description="p = lambda + mu sin t, D = alpha + beta cos ln t + gamma int sin^2 s / s ds",
        ),
        Problem(
            id="const-coeff",
            p="a",
            q="b",
            t0=0.0,
            params={"a": 3.0, "b": 2.0},
            claim=ClaimRule("characteristic roots of s^2 + a s + b", _characteristic_claim),
            horizon=40.0,
            description="constant coefficients, D = a^2 - 4b",
        ),
        Problem(
            id="wkb-ok",
            p="0",
            q="-t^4/4",
            t0=1.0,
            claim=ClaimRule("D = t^4: WKB integral converges; solutions grow like exp(t^3/6)",
                            _wkb_control_claim),
            horizon=40.0,
            description="control with D = t^4",
        ),
    )
}


def catalog() -> list[Problem]:
    """All built-in problems in a fixed order."""
    return list(CATALOG.values())


def get_problem(problem_id: str) -> Problem:
    try:
        return CATALOG[problem_id]
    except KeyError:
        raise KeyError(f"unknown problem {problem_id!r}; known: {', '.join(CATALOG)}") from None


def export_catalog(problems: Iterable[Problem] | None = None) -> dict:
    return {"schema": 1, "problems": [p.to_json() for p in (problems or catalog())]}


def import_catalog(doc: Mapping) -> list[Problem]:
    """Restore problems; known ids get their claim rule back."""
    restored = []
    for entry in doc.get("problems", []):
        known = CATALOG.get(entry.get("id"))
        claim = known.claim if known is not None and entry.get("paper_verdict") == known.claim.rule else None
        restored.append(Problem.from_json(entry, claim=claim))
    return restored
