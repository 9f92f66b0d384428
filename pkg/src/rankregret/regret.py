"""Exact ranking and surrogate regrets on finite distributions.

A scoring function is an array of extended reals aligned with
``D.ids``; use :func:`scores_from_mapping` to build one from a dict.
Ties are exact float equality.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize

from .distribution import (FiniteDistribution, bayes_ranking_risk, induce_pairwise,
                           pair_masses, positive_rate)
from .losses import CompositeLoss, bayes_risk, conditional_risk, xmul
from .reports import BoundReport, RegretReport

IDENTITY_TOL = 1e-12


class InvariantViolation(AssertionError):
    """Two independent routes to the same quantity disagree."""


def scores_from_mapping(D: FiniteDistribution, scores: dict) -> np.ndarray:
    missing = [i for i in D.ids if i not in scores]
    if missing:
        raise KeyError(f"no score for instance {missing[0]!r}")
    return np.array([float(scores[i]) for i in D.ids])


def _scores(D: FiniteDistribution, f) -> np.ndarray:
    if isinstance(f, dict):
        return scores_from_mapping(D, f)
    f = np.asarray(f, dtype=float)
    if f.shape != (len(D),):
        raise ValueError(f"expected {len(D)} scores, got shape {f.shape}")
    if np.any(np.isnan(f)):
        raise ValueError("undefined (NaN) score for a support point")
    return f


def _order(f):
    """sign(f_i - f_j) by comparison, so equal infinities tie."""
    return (f[:, None] > f[None, :]).astype(float) - (f[:, None] < f[None, :])


def ranking_error(D: FiniteDistribution, f) -> float:
    f = _scores(D, f)
    p = positive_rate(D)
    mm, a = pair_masses(D)
    s = _order(f)
    terms = a * (s < 0) + a.T * (s > 0) + 0.5 * (a + a.T) * (s == 0)
    return float(np.sum(mm * terms) / (2 * p * (1 - p)))


def direct_ranking_regret(D: FiniteDistribution, f) -> float:
    return ranking_error(D, f) - bayes_ranking_risk(D)


def clemencon_regret(D: FiniteDistribution, f) -> float:
    """Regret as E|eta - eta'| (1(misordered) + 1/2 1(tie)) / (2p(1-p))."""
    f = _scores(D, f)
    p = positive_rate(D)
    mm = np.outer(D.weights, D.weights)
    de = D.eta[:, None] - D.eta[None, :]
    s = _order(f)
    terms = np.abs(de) * ((s * np.sign(de) < 0) + 0.5 * (s == 0))
    return float(np.sum(mm * terms) / (2 * p * (1 - p)))


def ranking_regret(D: FiniteDistribution, f) -> float:
    """Ranking regret, computed two ways and cross-checked to 1e-12."""
    direct = direct_ranking_regret(D, f)
    ident = clemencon_regret(D, f)
    if abs(direct - ident) > IDENTITY_TOL:
        raise InvariantViolation(f"ranking regret routes disagree: {direct!r} vs {ident!r}")
    return ident


def surrogate_regret(D: FiniteDistribution, ell: CompositeLoss, f) -> RegretReport:
    f = _scores(D, f)
    risk = float(D.weights @ conditional_risk(ell, D.eta, f))
    opt = float(D.weights @ bayes_risk(ell, D.eta))
    return RegretReport(risk, opt, risk - opt if np.isfinite(risk) else np.inf, "direct")


def pairwise_zero_one_report(D: FiniteDistribution, f) -> RegretReport:
    """0-1 regret of sign(f(x) - f(x')) under the induced pair distribution."""
    f = _scores(D, f)
    P = induce_pairwise(D)
    h = np.where(f[P.first] > f[P.second], 1, -1)
    err = float(P.weights @ np.where(h == 1, 1 - P.eta, P.eta))
    opt = float(P.weights @ np.minimum(P.eta, 1 - P.eta))
    return RegretReport(err, opt, err - opt, "pairwise")


def pairwise_zero_one_regret(D: FiniteDistribution, f) -> float:
    return pairwise_zero_one_report(D, f).regret


def is_tie_free(f) -> bool:
    f = np.asarray(f, dtype=float)
    return len(np.unique(f)) == len(f)


def pairwise_surrogate_regret(D: FiniteDistribution, phi: CompositeLoss, f) -> float:
    """Regret of the margin loss phi on f(x) - f(x') under the induced pairs."""
    if phi.link.lo != -np.inf or phi.link.hi != np.inf:
        raise ValueError(f"{phi.name} is not a margin loss on the extended reals")
    f = _scores(D, f)
    P = induce_pairwise(D)
    with np.errstate(invalid="ignore"):
        diff = f[P.first] - f[P.second]
    if np.any(np.isnan(diff)):
        raise ValueError("score difference inf - inf is undefined")
    L = conditional_risk(phi, P.eta, diff)
    H = bayes_risk(phi, P.eta)
    if np.any(np.isinf(L)):
        return float("inf")
    return float(P.weights @ (L - H))


# --- balanced losses ------------------------------------------------------


def _balanced_coefficients(D: FiniteDistribution):
    p = positive_rate(D)
    return D.eta / (2 * p), (1 - D.eta) / (2 * (1 - p))


def balanced_optimum(ell: CompositeLoss, a, b):
    """min over predictions of a l(1, .) + b l(-1, .), a, b >= 0.

    Equals (a + b) L_c(a/(a+b), .), minimised by properness at q = a/(a+b),
    so the value is (a + b) H(a/(a+b)) whenever the link's range reaches q.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = a + b
    return s * bayes_risk(ell, a / s)


def _search_one(g, q_lo, q_hi, n_grid):
    qs = np.linspace(q_lo, q_hi, n_grid)
    vals = g(qs)
    k = int(np.argmin(vals))
    if 0 < k < n_grid - 1:
        q = optimize.golden(lambda t: float(g(np.array([t]))[0]),
                            brack=(qs[k - 1], qs[k], qs[k + 1]), tol=1e-12)
        return min(float(g(np.array([q]))[0]), float(vals[k]))
    return float(vals[k])


def balanced_optimum_search(ell: CompositeLoss, a, b, n_grid: int = 1025, eps: float = 1e-12):
    """Same minimum found numerically: grid scan then golden-section refinement.

    Independent of properness; used to cross-check :func:`balanced_optimum`.
    """
    c = ell.proper
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    q_lo = max(float(ell.link.inv(ell.link.lo)), eps)
    q_hi = min(float(ell.link.inv(ell.link.hi)), 1 - eps)
    out = []
    for ai, bi in zip(a, b):
        def g(q, ai=ai, bi=bi):
            pos, neg = c.partials(q)
            return xmul(ai, pos) + xmul(bi, neg)
        out.append(_search_one(g, q_lo, q_hi, n_grid))
    return np.array(out)


def balanced_surrogate_regret(D: FiniteDistribution, ell: CompositeLoss, f,
                              method: str = "closed_form") -> RegretReport:
    f = _scores(D, f)
    a, b = _balanced_coefficients(D)
    q = ell.link.inv(f)
    pos, neg = ell.proper.partials(q)
    risk = float(D.weights @ (xmul(a, pos) + xmul(b, neg)))
    if method == "closed_form":
        per = balanced_optimum(ell, a, b)
    elif method == "search":
        per = balanced_optimum_search(ell, a, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    opt = float(D.weights @ per)
    return RegretReport(risk, opt, risk - opt if np.isfinite(risk) else np.inf, "direct")


def balanced_optimal_scores(D: FiniteDistribution, ell: CompositeLoss) -> np.ndarray:
    a, b = _balanced_coefficients(D)
    return ell.link(a / (a + b))


# --- plug-in bound ---------------------------------------------------------


def plugin_bound(D: FiniteDistribution, eta_hat, tol: float = 1e-12) -> BoundReport:
    """Ranking regret of eta_hat against E|eta_hat - eta| / (p(1-p))."""
    q = _scores(D, eta_hat)
    if np.any((q < 0) | (q > 1)):
        raise ValueError("eta_hat must lie in [0, 1]")
    p = positive_rate(D)
    lhs = ranking_regret(D, q)
    rhs = float(D.weights @ np.abs(q - D.eta)) / (p * (1 - p))
    return BoundReport("plugin", lhs, rhs, tol=tol, context={"p": p})


def pair_triangle_violations(D: FiniteDistribution, eta_hat) -> int:
    """Count pairs with (q_i - q_j)(eta_i - eta_j) <= 0 but
    |eta_i - eta_j| > |q_i - eta_i| + |q_j - eta_j|; always zero in exact arithmetic."""
    q = _scores(D, eta_hat)
    e = D.eta
    mis = (q[:, None] - q[None, :]) * (e[:, None] - e[None, :]) <= 0
    err = np.abs(q - e)
    bad = mis & (np.abs(e[:, None] - e[None, :]) > err[:, None] + err[None, :])
    return int(np.sum(bad))
