"""Result records and their JSON forms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional


def jsonable(x):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def dumps(obj, **kw) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, **kw)


@dataclass(frozen=True)
class Witness:
    eta: Optional[float]
    eta_hat: float
    margin: float


@dataclass(frozen=True)
class CertificationReport:
    """Outcome of one grid certification.

    ``property`` is one of proper, strictly_proper, strongly_proper, regular.
    """

    property: str
    verdict: bool
    grid_step: float
    witness: Optional[Witness] = None
    lam: Optional[float] = None
    min_margin: Optional[float] = None
    notes: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.verdict

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "property": self.property,
            "verdict": "pass" if self.verdict else "fail",
            "grid_step": self.grid_step,
        }
        if self.lam is not None:
            d["lambda"] = self.lam
        if self.witness is not None:
            d["witness"] = {
                "eta": self.witness.eta,
                "eta_hat": self.witness.eta_hat,
                "margin": self.witness.margin,
            }
        if self.min_margin is not None:
            d["min_margin"] = self.min_margin
        if self.notes:
            d["notes"] = list(self.notes)
        return jsonable(d)

    def to_json(self) -> str:
        return dumps(self.to_dict())


@dataclass(frozen=True)
class RegretReport:
    risk: float
    optimal_risk: float
    regret: float
    method: str = "direct"

    def __post_init__(self):
        if self.method not in ("direct", "clemencon_identity", "pairwise"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.regret >= -1e-12):
            raise ValueError(f"negative regret {self.regret!r}")

    def to_dict(self) -> dict:
        return jsonable(dict(risk=self.risk, optimal_risk=self.optimal_risk,
                             regret=self.regret, method=self.method))


@dataclass(frozen=True)
class BoundReport:
    """lhs <= rhs check; ``holds`` iff slack = rhs - lhs >= -tol."""

    bound_name: str
    lhs: float
    rhs: float
    tol: float = 1e-9
    context: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        if math.isinf(self.rhs) and self.rhs > 0:
            return math.inf
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= -self.tol

    def to_dict(self) -> dict:
        return jsonable(dict(bound_name=self.bound_name, lhs=self.lhs, rhs=self.rhs,
                             slack=self.slack, holds=self.holds, context=self.context))
