"""Surrogate regret bounds for bipartite ranking, checked on finite distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .distribution import FiniteDistribution, noise_certificate, positive_rate, random_distribution
from .losses import CompositeLoss, get_loss
from .regret import (
    balanced_surrogate_regret,
    is_tie_free,
    pair_triangle_violations,
    pairwise_surrogate_regret,
    pairwise_zero_one_regret,
    plugin_bound,
    ranking_regret,
    surrogate_regret,
)
from .reports import BoundReport

SLACK_TOL = 1e-9

KOTLOWSKI = {
    # pairwise surrogate <= k * balanced regret;  rank regret <= m * sqrt(balanced regret)
    "exp": (9 / 4, 3 / math.sqrt(2)),
    "log": (2.0, 2.0),
}


class CertificationMissing(ValueError):
    pass


def main_bound_rhs(lam: float, p: float, regret: float) -> float:
    """sqrt(2) / (p (1-p) sqrt(lam)) * sqrt(regret)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return math.sqrt(2) / (p * (1 - p) * math.sqrt(lam)) * math.sqrt(max(regret, 0.0))


def check_main_bound(D: FiniteDistribution, ell: CompositeLoss, f,
                     lam: Optional[float] = None, context: Optional[dict] = None) -> BoundReport:
    """Ranking regret of f against the strongly proper surrogate bound.

    ``lam`` defaults to the loss's certified constant; passing a different
    value is how negative controls inject a wrong one.
    """
    lam = ell.strong_properness if lam is None else lam
    if lam is None:
        raise CertificationMissing(f"{ell.name} carries no strong properness constant")
    p = positive_rate(D)
    reg = surrogate_regret(D, ell, f).regret
    ctx = {"p": p, "lambda": lam, "loss": ell.name, "regret_surrogate": reg}
    ctx.update(context or {})
    return BoundReport("main", ranking_regret(D, f), main_bound_rhs(lam, p, reg),
                       tol=SLACK_TOL, context=ctx)


def bartlett_sqrt_bound_check(D: FiniteDistribution, phi: CompositeLoss, f,
                              context: Optional[dict] = None) -> BoundReport:
    """Pairwise 0-1 regret of sign(f_diff) against sqrt(2 * pairwise phi-regret)."""
    if phi.name not in ("exp", "log"):
        raise ValueError("only the exponential and logistic margin losses are covered")
    z = pairwise_surrogate_regret(D, phi, f)
    ctx = {"p": positive_rate(D), "loss": phi.name, "tie_free": is_tie_free(f)}
    ctx.update(context or {})
    return BoundReport("bartlett", pairwise_zero_one_regret(D, f),
                       math.sqrt(2 * max(z, 0.0)), tol=SLACK_TOL, context=ctx)


def kotlowski_check(D: FiniteDistribution, loss_tag: str, f,
                    context: Optional[dict] = None) -> tuple[BoundReport, BoundReport]:
    """(pairwise surrogate vs balanced regret, ranking regret vs sqrt balanced regret)."""
    if loss_tag not in KOTLOWSKI:
        raise ValueError("loss_tag must be 'exp' or 'log'")
    phi = get_loss(loss_tag)
    k, m = KOTLOWSKI[loss_tag]
    bal = balanced_surrogate_regret(D, phi, f).regret
    ctx = {"p": positive_rate(D), "loss": loss_tag, "regret_balanced": bal}
    ctx.update(context or {})
    pair = BoundReport("kotlowski_pairwise", pairwise_surrogate_regret(D, phi, f),
                       k * bal, tol=SLACK_TOL, context=ctx)
    rank = BoundReport("kotlowski_rank", ranking_regret(D, f),
                       m * math.sqrt(max(bal, 0.0)), tol=SLACK_TOL, context=dict(ctx))
    return pair, rank


# --- random trials ---------------------------------------------------------


def random_scores(ell: CompositeLoss, n: int, rng, tie_prob: float = 0.0) -> np.ndarray:
    """Standard normal draws, pushed through psi(Phi(z)) when the range is bounded.

    With probability ``tie_prob`` a random subset of scores is collapsed to
    one value, so tied scorers are exercised too.
    """
    rng = np.random.default_rng(rng)
    z = rng.standard_normal(n)
    if np.isinf(ell.link.lo) and np.isinf(ell.link.hi):
        f = z
    else:
        f = np.clip(ell.link(ndtr(z)), ell.link.lo, ell.link.hi)
    if tie_prob > 0 and n > 1 and rng.random() < tie_prob:
        k = int(rng.integers(2, n + 1))
        idx = rng.choice(n, size=k, replace=False)
        f[idx] = f[idx[0]]
    return f


def trial_rng(root_seed: int, *keys: int) -> np.random.Generator:
    """Independent stream per (root seed, keys), stable across scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), *map(int, keys)]))


def random_trial(ell: CompositeLoss, rng, D: Optional[FiniteDistribution] = None,
                 tie_prob: float = 0.0) -> tuple[FiniteDistribution, np.ndarray]:
    rng = np.random.default_rng(rng)
    if D is None:
        D = random_distribution(rng)
    return D, random_scores(ell, len(D), rng, tie_prob=tie_prob)


# --- directed search for lambda tightness ---------------------------------


def three_cluster_case(ell: CompositeLoss, center: float, spread: float,
                       side_mass: float = 1 / 3, nudge: float = 1e-6):
    """Clusters at center - spread, center, center + spread whose plug-in
    estimates collapse onto ``center`` in reversed order.

    This is where the chain plug-in / Jensen / strong properness is close
    to tight, so an overstated lambda shows up as a violated bound.
    """
    eta = np.array([center - spread, center, center + spread])
    w = np.array([side_mass, 1 - 2 * side_mass, side_mass])
    q = np.array([center + nudge, center, center - nudge])
    D = FiniteDistribution.from_arrays(w, eta, ids=["low", "mid", "high"])
    f = np.clip(ell.link(q), ell.link.lo, ell.link.hi)
    return D, f


def directed_lambda_search(ell: CompositeLoss, lam: float,
                           centers: Sequence[float] = (0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.98),
                           spreads: Sequence[float] = (1e-3, 3e-3, 1e-2, 3e-2),
                           side_masses: Sequence[float] = (0.25, 1 / 3, 0.4)) -> list[BoundReport]:
    reports = []
    for m in centers:
        for s in spreads:
            if not (0 < m - s and m + s < 1):
                continue
            for x in side_masses:
                D, f = three_cluster_case(ell, m, s, x, nudge=s * 1e-3)
                reports.append(check_main_bound(
                    D, ell, f, lam=lam,
                    context={"search": "three_cluster", "center": m, "spread": s, "side_mass": x}))
    return reports


# --- low noise diagnostics --------------------------------------------------


@dataclass
class LowNoiseDiagnostic:
    alpha: float
    certificate: float
    t_grid: list
    target_exponent: float
    fitted_slope: Optional[float]
    table: list = field(default_factory=list)
    excluded: list = field(default_factory=list)

    @property
    def all_main_bounds_hold(self) -> bool:
        return all(row["main_bound_holds"] for row in self.table)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "certificate_C": self.certificate,
            "certificate_scope": {"t_min": min(self.t_grid), "t_max": max(self.t_grid),
                                  "t_grid": list(self.t_grid)},
            "target_exponent": self.target_exponent,
            "fitted_slope": self.fitted_slope,
            "points": self.table,
            "excluded": self.excluded,
            "all_main_bounds_hold": self.all_main_bounds_hold,
        }


def low_noise_bound_diagnostic(D: FiniteDistribution, ell: CompositeLoss, family,
                               alpha: float, t_grid, labels=None) -> LowNoiseDiagnostic:
    """Regret pairs over a family of scorers, their log-log slope, and NA(alpha).

    The constant of the low-noise bound is not known, so nothing is asserted
    about it; only the alpha = 0 bound is checked, pointwise.
    """
    family = list(family)
    if not family:
        raise ValueError("empty scoring function family")
    labels = list(range(len(family))) if labels is None else list(labels)
    C = noise_certificate(D, alpha, t_grid)
    table, excluded = [], []
    for lab, f in zip(labels, family):
        rep = check_main_bound(D, ell, f)
        row = {"label": lab, "regret_surrogate": rep.context["regret_surrogate"],
               "regret_rank": rep.lhs, "bound_rhs": rep.rhs, "main_bound_holds": rep.holds}
        table.append(row)
        if not (0 < row["regret_surrogate"] < math.inf and 0 < row["regret_rank"] < math.inf):
            excluded.append(lab)
    used = [r for r in table if r["label"] not in excluded]
    slope = None
    if len(used) >= 2:
        x = np.log([r["regret_surrogate"] for r in used])
        y = np.log([r["regret_rank"] for r in used])
        if np.ptp(x) > 0:
            slope = float(np.polyfit(x, y, 1)[0])
    return LowNoiseDiagnostic(alpha, C, list(map(float, t_grid)), (1 + alpha) / (2 + alpha),
                              slope, table, excluded)


def shrinkage_family(D: FiniteDistribution, ell: CompositeLoss, ts: Sequence[float]):
    """psi((1 - t) eta + t/2): order preserving, so ranking regret stays 0."""
    return [ell.link((1 - t) * D.eta + t / 2) for t in ts]


def perturbation_family(D: FiniteDistribution, ell: CompositeLoss, scales: Sequence[float],
                        seed: int = 0):
    """psi((1 - s) eta + s r) for one fixed target r ~ U(0, 1)^n, s in [0, 1].

    Estimates stay inside (0, 1) whenever eta does, so unbounded links give
    finite scores; s -> 0 recovers the Bayes scorer.
    """
    r = np.random.default_rng(seed).uniform(0, 1, size=len(D))
    out = []
    for sc in scales:
        if not 0 <= sc <= 1:
            raise ValueError("perturbation scales must lie in [0, 1]")
        q = (1 - sc) * D.eta + sc * r
        out.append(np.clip(ell.link(q), ell.link.lo, ell.link.hi))
    return out


# --- suites used by the batch runner ---------------------------------------


SUITES = ("main", "directed", "plugin", "pairwise_identity", "bartlett", "kotlowski")


def run_bound_suite(trials: int, seed: int, losses: Sequence[str],
                    D: Optional[FiniteDistribution] = None,
                    lambda_override: Optional[dict] = None,
                    tol: float = SLACK_TOL,
                    suites: Sequence[str] = SUITES) -> list[dict]:
    """Randomized checks for the selected suites; one row per report."""
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}")
    lambda_override = lambda_override or {}
    rows = []

    def add(rep: BoundReport, trial: int, suite_seed: int, row_tol: Optional[float] = None):
        ctx = rep.context
        row_tol = tol if row_tol is None else row_tol
        rows.append({
            "bound_name": rep.bound_name, "trial": trial, "seed": suite_seed,
            "loss": ctx.get("loss", ""), "p": ctx.get("p", math.nan),
            "lambda": ctx.get("lambda", math.nan), "lhs": rep.lhs, "rhs": rep.rhs,
            "slack": rep.slack, "holds": rep.slack >= -row_tol,
            "regret_surrogate": ctx.get("regret_surrogate", math.nan),
        })

    for li, name in enumerate(losses):
        ell = get_loss(name)
        lam = lambda_override.get(name)
        if "main" in suites:
            for t in range(trials):
                Dt, f = random_trial(ell, trial_rng(seed, 1, li, t), D, tie_prob=0.2)
                add(check_main_bound(Dt, ell, f, lam=lam), t, seed)
        if "directed" in suites:
            lam_d = lam if lam is not None else ell.strong_properness
            for rep in directed_lambda_search(ell, lam_d):
                add(rep, -1, seed)

    for t in range(trials if "plugin" in suites else 0):
        rng = trial_rng(seed, 2, t)
        Dt = D if D is not None else random_distribution(rng)
        q = np.clip(Dt.eta + rng.uniform(-0.5, 0.5, len(Dt)), 0, 1)
        add(plugin_bound(Dt, q), t, seed, 1e-12)
        if pair_triangle_violations(Dt, q):
            rows.append({"bound_name": "pair_triangle", "trial": t, "seed": seed, "loss": "",
                         "p": Dt.p, "lambda": math.nan, "lhs": 1.0, "rhs": 0.0, "slack": -1.0,
                         "holds": False, "regret_surrogate": math.nan})

    for t in range(trials if "pairwise_identity" in suites else 0):
        rng = trial_rng(seed, 3, t)
        Dt = D if D is not None else random_distribution(rng)
        f = rng.standard_normal(len(Dt))
        lhs = ranking_regret(Dt, f)
        rhs = pairwise_zero_one_regret(Dt, f)
        # equality checked as two one-sided reports at the identity tolerance
        add(BoundReport("pairwise_identity", lhs, rhs, context={"p": Dt.p}), t, seed, 1e-12)
        add(BoundReport("pairwise_identity_rev", rhs, lhs, context={"p": Dt.p}), t, seed, 1e-12)

    margin = [s for s in ("bartlett", "kotlowski") if s in suites]
    for li, name in enumerate(("exp", "log") if margin else ()):
        phi = get_loss(name)
        for t in range(trials):
            Dt, f = random_trial(phi, trial_rng(seed, 4, li, t), D)
            if "bartlett" in suites:
                add(bartlett_sqrt_bound_check(Dt, phi, f), t, seed)
            if "kotlowski" in suites:
                for rep in kotlowski_check(Dt, name, f):
                    add(rep, t, seed)
    return rows
