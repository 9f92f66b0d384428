"""Proper losses from concave Bayes risks, canonical links, and grid certifiers.

All certifiers work on the uniform grid {0, h, 2h, ..., 1} and report the
worst violation they find rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .losses import CompositeLoss, Link, ProperLoss, xmul
from .reports import CertificationReport, Witness

GRID_STEP = 1 / 256
TOL = 1e-9
STRICT_TOL = 1e-12


class NotConcaveError(ValueError):
    def __init__(self, msg, eta=None, second_difference=None):
        super().__init__(msg)
        self.eta = eta
        self.second_difference = second_difference


class NotMonotoneError(ValueError):
    pass


def grid(step: float = GRID_STEP) -> np.ndarray:
    n = int(round(1 / step))
    if n < 2 or abs(n * step - 1) > 1e-9:
        raise ValueError(f"grid step must divide 1, got {step!r}")
    return np.linspace(0.0, 1.0, n + 1)


@dataclass(frozen=True)
class ConcaveRiskSpec:
    """A concave H on [0, 1], a fixed superderivative, and an optional claimed lambda."""

    H: Callable[[np.ndarray], np.ndarray]
    H_prime: Callable[[np.ndarray], np.ndarray]
    claimed_lambda: Optional[float] = None
    name: str = "H"


def _eval(fn, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.asarray(fn(np.asarray(x, dtype=float)), dtype=float) * np.ones_like(x, dtype=float)


def second_differences(H, step: float = GRID_STEP) -> tuple[np.ndarray, np.ndarray]:
    """(interior grid points, H(x-h) - 2 H(x) + H(x+h))."""
    g = grid(step)
    v = _eval(H, g)
    return g[1:-1], v[:-2] - 2 * v[1:-1] + v[2:]


def from_concave_risk(spec: ConcaveRiskSpec, grid_step: float = GRID_STEP) -> ProperLoss:
    """Savage construction: c(1,q) = H(q) + (1-q) H'(q), c(-1,q) = H(q) - q H'(q)."""
    pts, d2 = second_differences(spec.H, grid_step)
    worst = int(np.argmax(d2))
    if d2[worst] > TOL:
        raise NotConcaveError(
            f"{spec.name} is not concave at eta={pts[worst]:.6g} "
            f"(second difference {d2[worst]:.3g})",
            eta=float(pts[worst]), second_difference=float(d2[worst]))

    H, Hp = spec.H, spec.H_prime

    def pos(q):
        return _eval(H, q) + xmul(1 - np.asarray(q, dtype=float), _eval(Hp, q))

    def neg(q):
        return _eval(H, q) - xmul(q, _eval(Hp, q))

    return ProperLoss(
        name=spec.name,
        partial_pos=pos,
        partial_neg=neg,
        bayes_risk=lambda e: _eval(H, e),
        superderivative=lambda e: _eval(Hp, e),
        strong_properness=spec.claimed_lambda,
    )


def _bisect_inverse(forward, lo_q=0.0, hi_q=1.0, iters=200):
    def inverse(y):
        y = np.asarray(y, dtype=float)
        a = np.full(y.shape, lo_q)
        b = np.full(y.shape, hi_q)
        for _ in range(iters):
            m = 0.5 * (a + b)
            below = _eval(forward, m) < y
            a = np.where(below, m, a)
            b = np.where(below, b, m)
            if np.all(b - a <= 0):
                break
        return 0.5 * (a + b)
    return inverse


def canonical_link(c: ProperLoss, grid_step: float = GRID_STEP) -> Link:
    """psi(q) = c(-1, q) - c(1, q); inverted numerically by bisection."""

    def forward(q):
        pos, neg = c.partials(q)
        with np.errstate(invalid="ignore"):
            return neg - pos

    g = grid(grid_step)
    v = _eval(forward, g)
    if np.any(np.isnan(v)) or np.any(np.diff(v) <= 0):
        bad = int(np.argmax(~(np.diff(v) > 0)))
        raise NotMonotoneError(
            f"canonical link of {c.name} is not strictly increasing near q={g[bad]:.6g}; "
            "the loss is not strictly proper")
    return Link(f"psi_can[{c.name}]", forward, _bisect_inverse(forward), float(v[0]), float(v[-1]))


def canonical_composite(c: ProperLoss, grid_step: float = GRID_STEP) -> CompositeLoss:
    return CompositeLoss(f"{c.name}-can", c, canonical_link(c, grid_step))


def _risk_matrix(c: ProperLoss, g: np.ndarray) -> np.ndarray:
    """L[i, j] = L_c(g[i], g[j])."""
    pos, neg = c.partials(g)
    eta = g[:, None]
    return xmul(eta, pos[None, :]) + xmul(1 - eta, neg[None, :])


def _witness(g, margin) -> tuple[Witness, float]:
    i, j = np.unravel_index(int(np.argmin(margin)), margin.shape)
    m = float(margin[i, j])
    return Witness(eta=float(g[i]), eta_hat=float(g[j]), margin=m), m


def _monotone_partials(c: ProperLoss, g: np.ndarray, step: float, tol: float = TOL):
    inner = g[(g >= step) & (g <= 1 - step)]
    pos, neg = c.partials(inner)
    notes = []
    if np.any(np.diff(pos) > tol):
        k = int(np.argmax(np.diff(pos)))
        notes.append(f"c(1,.) increases between {inner[k]:.6g} and {inner[k + 1]:.6g}")
    if np.any(np.diff(neg) < -tol):
        k = int(np.argmin(np.diff(neg)))
        notes.append(f"c(-1,.) decreases between {inner[k]:.6g} and {inner[k + 1]:.6g}")
    return notes


def certify_proper(c: ProperLoss, grid_step: float = GRID_STEP,
                   tol: float = TOL) -> CertificationReport:
    """L(eta, eta) <= L(eta, q) + tol on all grid pairs, and monotone partials."""
    g = grid(grid_step)
    L = _risk_matrix(c, g)
    with np.errstate(invalid="ignore"):
        margin = L - np.diag(L)[:, None]
    margin = np.where(np.isnan(margin), -np.inf, margin)
    w, m = _witness(g, margin)
    notes = _monotone_partials(c, g, grid_step, tol)
    ok = m >= -tol and not notes
    return CertificationReport("proper", ok, grid_step, witness=None if ok else w,
                               min_margin=m, notes=tuple(notes))


def certify_strictly_proper(c: ProperLoss, grid_step: float = GRID_STEP,
                            tol: float = TOL) -> CertificationReport:
    """Proper, and L(eta, q) - L(eta, eta) > 0 for every grid pair with q != eta."""
    base = certify_proper(c, grid_step, tol)
    g = grid(grid_step)
    L = _risk_matrix(c, g)
    with np.errstate(invalid="ignore"):
        margin = L - np.diag(L)[:, None]
    margin = np.where(np.isnan(margin), -np.inf, margin)
    np.fill_diagonal(margin, np.inf)
    w, m = _witness(g, margin)
    ok = base.verdict and m > STRICT_TOL
    if not base.verdict:
        w = base.witness
    return CertificationReport("strictly_proper", ok, grid_step, witness=None if ok else w,
                               min_margin=m, notes=base.notes)


def strong_properness_margin(c: ProperLoss, lam: float, eta, eta_hat):
    """L(eta, q) - H(eta) - (lam/2)(eta - q)^2."""
    eta = np.asarray(eta, dtype=float)
    q = np.asarray(eta_hat, dtype=float)
    pos, neg = c.partials(q)
    L = xmul(eta, pos) + xmul(1 - eta, neg)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = c.bayes_risk(eta)
    return L - H - 0.5 * lam * (eta - q) ** 2


def certify_strongly_proper(c: ProperLoss, lam: float,
                            grid_step: float = GRID_STEP, tol: float = TOL) -> CertificationReport:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    g = grid(grid_step)
    margin = strong_properness_margin(c, lam, g[:, None], g[None, :])
    margin = np.where(np.isnan(margin), -np.inf, margin)
    w, m = _witness(g, margin)
    ok = m >= -tol
    return CertificationReport("strongly_proper", ok, grid_step, witness=None if ok else w,
                               lam=lam, min_margin=m)


def certify_regular(c: ProperLoss, grid_step: float = GRID_STEP) -> CertificationReport:
    """Partials finite and nonnegative everywhere except c(1, 0) and c(-1, 1)."""
    g = grid(grid_step)
    pos, neg = c.partials(g)
    notes = []
    if not np.isfinite(pos[0]):
        notes.append(f"c(1,0) = {pos[0]}")
    if not np.isfinite(neg[-1]):
        notes.append(f"c(-1,1) = {neg[-1]}")
    bad_pos = ~(np.isfinite(pos[1:]) & (pos[1:] >= 0))
    bad_neg = ~(np.isfinite(neg[:-1]) & (neg[:-1] >= 0))
    witness = None
    if np.any(bad_pos):
        k = int(np.argmax(bad_pos)) + 1
        witness = Witness(eta=None, eta_hat=float(g[k]), margin=-np.inf)
        notes.append(f"c(1,{g[k]:.6g}) = {pos[k]}")
    elif np.any(bad_neg):
        k = int(np.argmax(bad_neg))
        witness = Witness(eta=None, eta_hat=float(g[k]), margin=-np.inf)
        notes.append(f"c(-1,{g[k]:.6g}) = {neg[k]}")
    return CertificationReport("regular", witness is None, grid_step, witness=witness,
                               notes=tuple(notes))


def strong_concavity_modulus(H, grid_step: float = GRID_STEP) -> float:
    """Largest lambda with H lambda-strongly concave over all grid triples.

    On a uniform grid this equals min over interior points of
    -(H(x-h) - 2H(x) + H(x+h)) / h^2: H + (lambda/2) x^2 is concave on the
    grid iff its consecutive second differences are nonpositive.
    """
    _, d2 = second_differences(H, grid_step)
    return max(0.0, float(np.min(-d2) / grid_step ** 2))


def is_strictly_concave(H, grid_step: float = GRID_STEP) -> bool:
    _, d2 = second_differences(H, grid_step)
    return bool(np.all(d2 < -STRICT_TOL))


def certify_all(c: ProperLoss, lam: Optional[float] = None,
                grid_step: float = GRID_STEP, tol: float = TOL) -> list[CertificationReport]:
    lam = c.strong_properness if lam is None else lam
    reports = [certify_proper(c, grid_step, tol), certify_strictly_proper(c, grid_step, tol)]
    if lam is not None:
        reports.append(certify_strongly_proper(c, lam, grid_step, tol))
    reports.append(certify_regular(c, grid_step))
    return reports
