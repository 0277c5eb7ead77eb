"""
Equation instances phi'' + p phi' + q phi = 0.

A Problem keeps its coefficients as expression strings (what users write
and what JSON stores) and parses them on first use. Catalog entries also
carry a ClaimRule: the published verdict as a function of the parameters.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Mapping, Optional

from stability_lab.coeffexpr.evaluator import DEFAULT_T_OSC, DEFAULT_TOL, Decomposition, Evaluator
from stability_lab.coeffexpr.nodes import Const, Expr, differentiate, free_params, mul, power
from stability_lab.coeffexpr.parser import parse
from stability_lab.errors import UnboundParameter

Expected = Callable[[Mapping[str, complex]], dict[str, str]]


@dataclass(frozen=True)
class IntegralDecomposition:
    """cumint(integrand) = trend * (t - t0) + remainder with |remainder| <= bound."""

    integrand: str
    trend: float
    bound: float

    def to_json(self) -> dict:
        return {"integrand": self.integrand, "trend": self.trend, "bound": self.bound}


@dataclass(frozen=True)
class ClaimRule:
    """Recorded verdict: ``rule`` is the readable form, ``expect`` evaluates it.

    ``expect(params)`` returns a subset of the keys boundedness, stability
    and wkb with the claimed value for each.
    """

    rule: str
    expect: Expected

    def expected(self, params: Mapping[str, complex]) -> dict[str, str]:
        return dict(self.expect(params))


@dataclass(frozen=True)
class Problem:
    id: str
    p: str
    q: str
    t0: float = 0.0
    params: Mapping[str, complex] = field(default_factory=dict)
    decomposition: tuple[IntegralDecomposition, ...] = ()
    claim: Optional[ClaimRule] = field(default=None, compare=False)
    horizon: Optional[float] = None
    oracle_horizon: Optional[float] = None
    description: str = ""

    # -- parsed views ------------------------------------------------------

    @cached_property
    def p_expr(self) -> Expr:
        return parse(self.p, self.t0)

    @cached_property
    def q_expr(self) -> Expr:
        return parse(self.q, self.t0)

    @cached_property
    def discriminant_expr(self) -> Expr:
        """D = 2p' + p^2 - 4q."""
        p = self.p_expr
        return mul(Const(2), differentiate(p)) + power(p, 2) - mul(Const(4), self.q_expr)

    @cached_property
    def decompositions(self) -> dict[Expr, Decomposition]:
        return {parse(d.integrand, self.t0): Decomposition(d.trend, d.bound) for d in self.decomposition}

    @property
    def has_oscillatory_integrals(self) -> bool:
        return bool(self.decomposition)

    @property
    def param_slots(self) -> list[str]:
        return sorted(free_params(self.p_expr) | free_params(self.q_expr))

    # -- parameters --------------------------------------------------------

    def with_params(self, overrides: Optional[Mapping[str, complex]] = None, **more) -> "Problem":
        merged = dict(self.params)
        merged.update({k: complex(v) for k, v in (overrides or {}).items()})
        merged.update({k: complex(v) for k, v in more.items()})
        return replace(self, params=merged)

    def check_bound(self) -> None:
        for name in self.param_slots:
            if name not in self.params:
                raise UnboundParameter(name)

    def evaluator(self, tol: float = DEFAULT_TOL, t_osc: float = DEFAULT_T_OSC) -> Evaluator:
        self.check_bound()
        return Evaluator(self.params, tol=tol, t_osc=t_osc, decompositions=self.decompositions)

    def expected_verdict(self) -> Optional[dict[str, str]]:
        if self.claim is None:
            return None
        return self.claim.expected(self.params)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        doc = {
            "id": self.id,
            "p": self.p,
            "q": self.q,
            "t0": self.t0,
            "params": {name: [complex(v).real, complex(v).imag] for name, v in sorted(self.params.items())},
        }
        if self.decomposition:
            doc["integral_decomposition"] = [d.to_json() for d in self.decomposition]
        if self.horizon is not None:
            doc["horizon"] = self.horizon
        if self.oracle_horizon is not None:
            doc["oracle_horizon"] = self.oracle_horizon
        if self.claim is not None:
            doc["paper_verdict"] = self.claim.rule
        if self.description:
            doc["description"] = self.description
        return doc

    @classmethod
    def from_json(cls, doc: Mapping, claim: Optional[ClaimRule] = None) -> "Problem":
        missing = [key for key in ("id", "p", "q") if key not in doc]
        if missing:
            raise ValueError(f"problem document lacks {', '.join(missing)}")
        params = {}
        for name, value in (doc.get("params") or {}).items():
            if isinstance(value, (list, tuple)):
                re, im = (list(value) + [0.0])[:2]
                params[name] = complex(float(re), float(im))
            else:
                params[name] = complex(value)
        return cls(
            id=str(doc["id"]),
            p=str(doc["p"]),
            q=str(doc["q"]),
            t0=float(doc.get("t0", 0.0)),
            params=params,
            decomposition=tuple(
                IntegralDecomposition(str(d["integrand"]), float(d["trend"]), float(d["bound"]))
                for d in doc.get("integral_decomposition") or ()
            ),
            claim=claim,
            horizon=_optional_float(doc.get("horizon")),
            oracle_horizon=_optional_float(doc.get("oracle_horizon")),
            description=str(doc.get("description", "")),
        )


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)
