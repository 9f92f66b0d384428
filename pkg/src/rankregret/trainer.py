"""Tabular gradient descent on surrogate risks, one free score per instance."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .bounds import check_main_bound
from .distribution import FiniteDistribution, sample_indices
from .losses import CompositeLoss, conditional_risk, loss_gradient
from .regret import surrogate_regret

MAX_HALVINGS = 30


class TrainingDiverged(RuntimeError):
    def __init__(self, msg, trajectory):
        super().__init__(msg)
        self.trajectory = trajectory


@dataclass
class TrainConfig:
    loss: str = "sq"
    steps: int = 500
    learning_rate: float = 0.1
    mode: str = "exact"            # "exact" or "sampled"
    n: int = 1000                  # sample size in sampled mode
    seed: int = 0
    init: Union[str, list] = "zeros"   # "zeros", "link_of_half", or explicit scores
    record_every: int = 10

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


@dataclass
class Checkpoint:
    step: int
    scores: np.ndarray
    surrogate_regret: float
    ranking_regret: float = float("nan")
    bound_rhs: float = float("nan")
    bound_holds: bool = True
    extra: dict = field(default_factory=dict)


def _raw_gradient(ell: CompositeLoss, y, f):
    """Derivative of l(y, .) including at range endpoints (one-sided there)."""
    lo, hi = ell.link.lo, ell.link.hi
    inner = np.clip(f, np.nextafter(lo, hi) if np.isfinite(lo) else lo,
                    np.nextafter(hi, lo) if np.isfinite(hi) else hi)
    return loss_gradient(ell, y, inner)


def _initial_scores(D, ell, cfg):
    if isinstance(cfg.init, str):
        if cfg.init == "zeros":
            f = np.zeros(len(D))
        elif cfg.init == "link_of_half":
            f = np.full(len(D), float(ell.link(0.5)))
        else:
            raise ValueError(f"unknown init {cfg.init!r}")
    else:
        f = np.asarray(cfg.init, dtype=float)
        if f.shape != (len(D),):
            raise ValueError("custom init must give one score per instance")
    return ell.link.check(f).astype(float)


def _targets(D, cfg):
    """(per-instance weights, per-instance label frequency) the objective uses."""
    if cfg.mode == "exact":
        return D.weights, D.eta
    idx, labels = sample_indices(D, cfg.n, cfg.seed)
    counts = np.bincount(idx, minlength=len(D)).astype(float)
    pos = np.bincount(idx, weights=(labels == 1), minlength=len(D))
    freq = np.divide(pos, counts, out=np.full(len(D), 0.5), where=counts > 0)
    return counts / cfg.n, freq


def fit_scores(D: FiniteDistribution, ell: CompositeLoss, cfg: TrainConfig) -> list[Checkpoint]:
    """Minimise sum_i w_i L(t_i, f_i) over free scores f.

    In exact mode (w, t) = (mu, eta); in sampled mode they are the empirical
    instance frequencies and label frequencies of n draws.  Each coordinate
    moves along its own conditional-risk gradient (the 1/w_i preconditioned
    gradient), the step is halved until the objective strictly decreases, and scores are
    clamped back into the prediction range.
    """
    w, t = _targets(D, cfg)
    active = w > 0
    f = _initial_scores(D, ell, cfg)
    lo, hi = ell.link.lo, ell.link.hi

    def objective(g):
        return float(w[active] @ conditional_risk(ell, t[active], g[active]))

    def record(step):
        rep = check_main_bound(D, ell, f)
        return Checkpoint(step, f.copy(), rep.context["regret_surrogate"], rep.lhs, rep.rhs,
                          rep.holds)

    traj = [record(0)]
    initial = traj[0].surrogate_regret
    obj = objective(f)
    stalled = False
    for step in range(1, cfg.steps + 1):
        if stalled:
            # no step size decreased the objective; nothing left to do
            if step % cfg.record_every == 0 or step == cfg.steps:
                traj.append(record(step))
            continue
        grad = np.zeros(len(D))
        grad[active] = (t[active] * _raw_gradient(ell, 1, f[active])
                        + (1 - t[active]) * _raw_gradient(ell, -1, f[active]))
        lr = cfg.learning_rate
        for _ in range(MAX_HALVINGS + 1):
            cand = np.clip(f - lr * grad, lo, hi)
            new = objective(cand)
            # strict: an equal objective can be a 2-cycle around the optimum
            if new < obj:
                break
            lr /= 2
        else:
            cand, new, stalled = f, obj, True
        f, obj = cand, new
        if step % cfg.record_every == 0 or step == cfg.steps:
            traj.append(record(step))
            cur = traj[-1].surrogate_regret
            if np.isfinite(initial) and cur > 10 * max(initial, 1e-300):
                raise TrainingDiverged(f"surrogate regret grew from {initial:g} to {cur:g}", traj)
    return traj


def plugin_from_scores(ell: CompositeLoss, f) -> np.ndarray:
    """psi^{-1}(f) per instance."""
    return ell.link.inv(f)


def gradient_check(ell: CompositeLoss, points, h: float = 1e-5) -> float:
    """Max error of the analytic gradient against central differences.

    Errors are relative with the denominator floored at 1, so gradients
    near zero are compared absolutely.  Points within 10h of a finite range
    endpoint are skipped.
    """
    ys = np.array([p[0] for p in points])
    fs = np.array([p[1] for p in points], dtype=float)
    lo, hi = ell.link.lo, ell.link.hi
    keep = (fs - 10 * h > lo) & (fs + 10 * h < hi)
    ys, fs = ys[keep], fs[keep]
    if len(fs) == 0:
        return 0.0
    analytic = loss_gradient(ell, ys, fs)
    numeric = (ell(ys, fs + h) - ell(ys, fs - h)) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / denom))


def trajectory_rows(traj: list[Checkpoint]) -> list[dict]:
    return [{"step": c.step, "surrogate_regret": c.surrogate_regret,
             "ranking_regret": c.ranking_regret, "bound_rhs": c.bound_rhs} for c in traj]
