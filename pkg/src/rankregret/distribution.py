"""Finite distributions on X x {-1, +1} and the pairs they induce."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

SUM_TOL = 1e-12


class DistributionError(ValueError):
    """Invalid distribution; ``field`` names the offending input."""

    def __init__(self, msg: str, field: Optional[str] = None):
        super().__init__(msg if field is None else f"{field}: {msg}")
        self.field = field


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """Instances with marginal weights mu_i > 0 and posteriors eta_i in [0, 1]."""

    ids: tuple[str, ...]
    weights: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        e = np.array(self.eta, dtype=float)
        w.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "eta", e)
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        n = len(self.ids)
        if n == 0:
            raise DistributionError("at least one instance required", "instances")
        if w.shape != (n,) or e.shape != (n,):
            raise DistributionError("ids, weights and eta must have equal length", "instances")
        if len(set(self.ids)) != n:
            raise DistributionError("duplicate instance id", "id")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            k = int(np.argmax(~(np.isfinite(w) & (w > 0))))
            raise DistributionError(f"weight of {self.ids[k]!r} must be > 0, got {w[k]!r}", "weight")
        if not np.all((e >= 0) & (e <= 1)):
            k = int(np.argmax(~((e >= 0) & (e <= 1))))
            raise DistributionError(f"eta of {self.ids[k]!r} must be in [0, 1], got {e[k]!r}", "eta")
        if abs(math.fsum(w) - 1.0) > SUM_TOL:
            raise DistributionError(f"weights sum to {math.fsum(w)!r}, not 1", "weight")
        p = float(w @ e)
        if not 0 < p < 1:
            raise DistributionError(f"positive rate p = {p!r} must lie strictly in (0, 1)", "eta")

    @classmethod
    def from_arrays(cls, weights, eta, ids: Optional[Sequence[str]] = None):
        weights = np.asarray(weights, dtype=float)
        if ids is None:
            ids = [f"x{i}" for i in range(len(weights))]
        return cls(tuple(ids), weights, np.asarray(eta, dtype=float))

    @classmethod
    def from_dict(cls, data: dict):
        if not isinstance(data, dict) or "instances" not in data:
            raise DistributionError("expected an object with an 'instances' list", "instances")
        inst = data["instances"]
        if not isinstance(inst, list):
            raise DistributionError("must be a list", "instances")
        ids, w, e = [], [], []
        for k, item in enumerate(inst):
            if not isinstance(item, dict):
                raise DistributionError(f"entry {k} is not an object", "instances")
            for key in ("id", "weight", "eta"):
                if key not in item:
                    raise DistributionError(f"entry {k} lacks '{key}'", key)
            if not isinstance(item["id"], str):
                raise DistributionError(f"entry {k}: id must be a string", "id")
            for key in ("weight", "eta"):
                if isinstance(item[key], bool) or not isinstance(item[key], (int, float)):
                    raise DistributionError(f"entry {k}: must be a number", key)
            ids.append(item["id"])
            w.append(float(item["weight"]))
            e.append(float(item["eta"]))
        return cls(tuple(ids), np.array(w), np.array(e))

    def to_dict(self) -> dict:
        return {"instances": [{"id": i, "weight": float(w), "eta": float(e)}
                              for i, w, e in zip(self.ids, self.weights, self.eta)]}

    def __len__(self):
        return len(self.ids)

    @property
    def p(self) -> float:
        return positive_rate(self)


def load_distribution(path) -> FiniteDistribution:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DistributionError(f"not valid JSON: {exc}", "file") from None
    return FiniteDistribution.from_dict(data)


def demo_distribution() -> FiniteDistribution:
    """Ten instances with well separated posteriors 0.05, 0.15, ..., 0.95."""
    return load_distribution(Path(__file__).parent / "data" / "demo.json")


def positive_rate(D: FiniteDistribution) -> float:
    return float(D.weights @ D.eta)


def pair_masses(D: FiniteDistribution) -> tuple[np.ndarray, np.ndarray]:
    """(mu_i mu_j, eta_i (1 - eta_j)) over ordered pairs."""
    mm = np.outer(D.weights, D.weights)
    a = np.outer(D.eta, 1 - D.eta)
    return mm, a


def bayes_ranking_risk(D: FiniteDistribution) -> float:
    p = positive_rate(D)
    mm, a = pair_masses(D)
    return float(np.sum(mm * np.minimum(a, a.T)) / (2 * p * (1 - p)))


@dataclass(frozen=True, eq=False)
class PairwiseDistribution:
    """Distribution over ordered instance pairs with label sign(Y - Y')."""

    first: np.ndarray
    second: np.ndarray
    weights: np.ndarray
    eta: np.ndarray

    @property
    def p(self) -> float:
        return float(self.weights @ self.eta)

    def __len__(self):
        return len(self.weights)


def induce_pairwise(D: FiniteDistribution) -> PairwiseDistribution:
    p = positive_rate(D)
    mm, a = pair_masses(D)
    cross = a + a.T
    keep = (mm * cross) > 0
    i, j = np.nonzero(keep)
    w = (mm * cross)[i, j] / (2 * p * (1 - p))
    eta = a[i, j] / cross[i, j]
    return PairwiseDistribution(i, j, w, eta)


def sample_indices(D: FiniteDistribution, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """(instance indices, labels in {-1, +1}) for n i.i.d. draws."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(rng)
    idx = rng.choice(len(D), size=n, p=D.weights / D.weights.sum())
    labels = np.where(rng.random(n) < D.eta[idx], 1, -1)
    return idx, labels


def sample(D: FiniteDistribution, n: int, seed) -> list[tuple[str, int]]:
    idx, labels = sample_indices(D, n, seed)
    return [(D.ids[i], int(y)) for i, y in zip(idx, labels)]


def noise_certificate(D: FiniteDistribution, alpha: float, t_grid) -> float:
    """Smallest C with P_X(|eta(X) - eta_i| <= t) <= C t^alpha for all atoms i, t in t_grid.

    Only the listed t values are certified.  Atoms put a floor under the
    left side as t -> 0, so no finite C works for alpha > 0 on all of (0, 1].
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any(t <= 0):
        raise ValueError("t_grid must be nonempty with all t > 0")
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    gap = np.abs(D.eta[:, None] - D.eta[None, :])            # (i, j)
    within = gap[:, :, None] <= t[None, None, :]              # (i, j, t)
    prob = np.einsum("j,ijt->it", D.weights, within)
    return float(np.max(prob / t[None, :] ** alpha))


def random_distribution(rng, size: Optional[int] = None, n_min: int = 2, n_max: int = 20,
                        eta_low: float = 0.02, eta_high: float = 0.98) -> FiniteDistribution:
    """|X| uniform on {n_min..n_max}, mu ~ Dirichlet(1), eta i.i.d. uniform."""
    rng = np.random.default_rng(rng)
    n = int(rng.integers(n_min, n_max + 1)) if size is None else size
    w = rng.dirichlet(np.ones(n))
    w = np.maximum(w, 1e-300)
    w = w / w.sum()
    eta = rng.uniform(eta_low, eta_high, size=n)
    return FiniteDistribution.from_arrays(w, eta)
