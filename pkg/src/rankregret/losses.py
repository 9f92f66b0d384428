"""Binary CPE losses, link functions and proper composite losses.

Extended reals are plain IEEE floats with ``inf``/``-inf``.  The one
convention IEEE does not give us is ``0 * inf == 0``, which the conditional
risk needs whenever an infinite partial loss carries zero weight; use
:func:`xmul` for those products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, logit

ArrayFn = Callable[[np.ndarray], np.ndarray]

# inverse links are clamped to [EPS, 1 - EPS] for derivative work only
EPS = 1e-15


class DomainError(ValueError):
    """A prediction lies outside the prediction range of a loss."""


def xmul(a, b):
    """Elementwise product with the measure-theoretic rule 0 * inf = 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        out = a * b
    return np.where((a == 0) | (b == 0), 0.0, out)


@dataclass(frozen=True)
class ProperLoss:
    """A binary CPE loss c(y, q) on q in [0, 1] with its Bayes risk.

    ``superderivative`` is one fixed choice of superderivative of the Bayes
    risk; at 0 and 1 it is the one-sided derivative (possibly infinite).
    ``strong_properness`` is the claimed lambda, or None.
    """

    name: str
    partial_pos: ArrayFn
    partial_neg: ArrayFn
    bayes_risk: ArrayFn
    superderivative: Optional[ArrayFn] = None
    strong_properness: Optional[float] = None

    def partials(self, q):
        q = np.asarray(q, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self.partial_pos(q), self.partial_neg(q)


@dataclass(frozen=True)
class Link:
    """Strictly increasing link psi: [0, 1] -> [lo, hi]."""

    name: str
    forward: ArrayFn
    inverse: ArrayFn
    lo: float
    hi: float

    def contains(self, yhat) -> np.ndarray:
        yhat = np.asarray(yhat, dtype=float)
        return (yhat >= self.lo) & (yhat <= self.hi)

    def check(self, yhat) -> np.ndarray:
        yhat = np.asarray(yhat, dtype=float)
        bad = ~self.contains(yhat)
        if np.any(bad):
            first = np.ravel(yhat)[np.argmax(np.ravel(bad))]
            raise DomainError(
                f"prediction {first!r} outside range [{self.lo}, {self.hi}] "
                f"of link {self.name!r}")
        return yhat

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.forward(q)

    def inv(self, yhat):
        yhat = self.check(yhat)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self.inverse(yhat)


@dataclass(frozen=True)
class CompositeLoss:
    """l(y, yhat) = c(y, psi^{-1}(yhat)).

    ``gradient(y, yhat)`` is the analytic derivative in yhat, when known.
    """

    name: str
    proper: ProperLoss
    link: Link
    gradient: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    @property
    def strong_properness(self) -> Optional[float]:
        return self.proper.strong_properness

    @property
    def prediction_range(self) -> tuple[float, float]:
        return self.link.lo, self.link.hi

    def __call__(self, y, yhat):
        return evaluate_composite(self, y, yhat)


def _split(loss, prediction):
    """Return (proper loss, class-probability estimate) for either loss kind."""
    if isinstance(loss, CompositeLoss):
        return loss.proper, loss.link.inv(prediction)
    q = np.asarray(prediction, dtype=float)
    if np.any(~((q >= 0) & (q <= 1))):
        raise DomainError(f"class probability estimate outside [0, 1]: {q!r}")
    return loss, q


def _check_eta(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(~((eta >= 0) & (eta <= 1))):
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    return eta


def conditional_risk(loss, eta, prediction):
    """eta * l(1, yhat) + (1 - eta) * l(-1, yhat), with 0 * inf = 0."""
    eta = _check_eta(eta)
    proper, q = _split(loss, prediction)
    pos, neg = proper.partials(q)
    return xmul(eta, pos) + xmul(1.0 - eta, neg)


def bayes_risk(loss, eta):
    eta = _check_eta(eta)
    proper = loss.proper if isinstance(loss, CompositeLoss) else loss
    with np.errstate(divide="ignore", invalid="ignore"):
        return proper.bayes_risk(eta)


def conditional_regret(loss, eta, prediction):
    return conditional_risk(loss, eta, prediction) - bayes_risk(loss, eta)


def evaluate_composite(ell: CompositeLoss, label, prediction):
    """l(y, yhat) for labels in {-1, +1}."""
    y = np.asarray(label)
    if np.any((y != 1) & (y != -1)):
        raise ValueError("labels must be +1 or -1")
    q = ell.link.inv(prediction)
    pos, neg = ell.proper.partials(q)
    return np.where(y == 1, pos, neg)


def loss_gradient(ell: CompositeLoss, label, prediction):
    """Analytic d l(y, yhat) / d yhat at interior points of the range."""
    if ell.gradient is None:
        raise NotImplementedError(f"no analytic gradient for loss {ell.name!r}")
    y = np.asarray(label)
    yhat = ell.link.check(prediction)
    if np.any((y != 1) & (y != -1)):
        raise ValueError("labels must be +1 or -1")
    if np.any((yhat <= ell.link.lo) | (yhat >= ell.link.hi)):
        raise DomainError("gradient requested at the boundary of the prediction range")
    return ell.gradient(y, yhat)


def truncate_scores(scores, lo: float, hi: float) -> np.ndarray:
    """Clamp scores into [lo, hi]."""
    if lo > hi:
        raise ValueError("empty range")
    return np.clip(np.asarray(scores, dtype=float), lo, hi)


# --- catalog --------------------------------------------------------------


def _sph_norm(q):
    return np.sqrt(q ** 2 + (1 - q) ** 2)


C_EXP = ProperLoss(
    name="c_exp",
    partial_pos=lambda q: np.sqrt((1 - q) / q),
    partial_neg=lambda q: np.sqrt(q / (1 - q)),
    bayes_risk=lambda e: 2 * np.sqrt(e * (1 - e)),
    superderivative=lambda e: (1 - 2 * e) / np.sqrt(e * (1 - e)),
    strong_properness=4.0,
)

C_LOG = ProperLoss(
    name="c_log",
    partial_pos=lambda q: -np.log(q),
    partial_neg=lambda q: -np.log1p(-q),
    bayes_risk=lambda e: -xmul(e, np.log(e)) - xmul(1 - e, np.log1p(-e)),
    superderivative=lambda e: np.log1p(-e) - np.log(e),
    strong_properness=4.0,
)

C_SQ = ProperLoss(
    name="c_sq",
    partial_pos=lambda q: 4 * (1 - q) ** 2,
    partial_neg=lambda q: 4 * q ** 2,
    bayes_risk=lambda e: 4 * e * (1 - e),
    superderivative=lambda e: 4 * (1 - 2 * e),
    strong_properness=8.0,
)

C_SQ_SCALED = ProperLoss(
    name="c_sq'",
    partial_pos=lambda q: (1 - q) ** 2,
    partial_neg=lambda q: q ** 2,
    bayes_risk=lambda e: e * (1 - e),
    superderivative=lambda e: 1 - 2 * e,
    strong_properness=2.0,
)

C_SPHER = ProperLoss(
    name="c_spher",
    partial_pos=lambda q: 1 - q / _sph_norm(q),
    partial_neg=lambda q: 1 - (1 - q) / _sph_norm(q),
    bayes_risk=lambda e: 1 - _sph_norm(e),
    superderivative=lambda e: -(2 * e - 1) / _sph_norm(e),
    strong_properness=1.0,
)


def _exp_can_inverse(yhat):
    a = yhat / 2
    u = np.where(np.isinf(a), np.sign(a), a / np.hypot(1.0, np.where(np.isinf(a), 0.0, a)))
    return (1 + u) / 2


def _spher_can_inverse(yhat):
    u = yhat / np.sqrt(2 - yhat ** 2)
    return (1 + u) / 2


LINK_EXP = Link("psi_exp", lambda q: 0.5 * logit(q), lambda f: expit(2 * f), -np.inf, np.inf)
LINK_LOG = Link("psi_log", logit, expit, -np.inf, np.inf)
LINK_SQ = Link("psi_sq", lambda q: 2 * q - 1, lambda f: (f + 1) / 2, -1.0, 1.0)
LINK_ID = Link("identity", lambda q: q, lambda f: f, 0.0, 1.0)
LINK_EXP_CAN = Link(
    "psi_exp_can",
    lambda q: (2 * q - 1) / np.sqrt(q * (1 - q)),
    _exp_can_inverse,
    -np.inf,
    np.inf,
)
LINK_SQ_CAN_WIDE = Link("psi_sq_can", lambda q: 4 * (2 * q - 1), lambda f: (f / 4 + 1) / 2, -4.0, 4.0)
LINK_SPHER_CAN = Link(
    "psi_spher_can",
    lambda q: (2 * q - 1) / _sph_norm(q),
    _spher_can_inverse,
    -1.0,
    1.0,
)


def _grad_spher(y, f):
    n3 = _sph_norm(f) ** 3
    return np.where(y == 1, -(1 - f) / n3, f / n3)


def _grad_exp_can(y, f):
    a = f / 2
    return a / (2 * np.hypot(1.0, a)) - y / 2


LOSS_NAMES = ("exp", "log", "sq", "spher", "exp-can", "sq-can", "spher-can")


def catalog() -> list[CompositeLoss]:
    """The seven strongly proper composite losses, in table order."""
    return [
        CompositeLoss("exp", C_EXP, LINK_EXP, lambda y, f: -y * np.exp(-y * f)),
        CompositeLoss("log", C_LOG, LINK_LOG, lambda y, f: -y * expit(-y * f)),
        CompositeLoss("sq", C_SQ, LINK_SQ, lambda y, f: -2 * y * (1 - y * f)),
        CompositeLoss("spher", C_SPHER, LINK_ID, _grad_spher),
        CompositeLoss("exp-can", C_EXP, LINK_EXP_CAN, _grad_exp_can),
        CompositeLoss("sq-can", C_SQ_SCALED, LINK_SQ, lambda y, f: -y * (1 - y * f) / 2),
        CompositeLoss(
            "spher-can", C_SPHER, LINK_SPHER_CAN,
            lambda y, f: 0.5 * (f / np.sqrt(2 - f ** 2) - y),
        ),
    ]


def canonical_squared_wide() -> CompositeLoss:
    """(1 - y*yhat/4)^2 on [-4, 4]: c_sq with its canonical link 4(2q - 1)."""
    return CompositeLoss(
        "sq-can-wide", C_SQ, LINK_SQ_CAN_WIDE,
        lambda y, f: -y * (1 - y * f / 4) / 2,
    )


_BY_NAME = {ell.name: ell for ell in catalog()}


def get_loss(name: str) -> CompositeLoss:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown loss {name!r}, try: " + ", ".join(LOSS_NAMES)) from None


# --- losses that are not strongly proper, for negative controls ------------


def zero_one_loss() -> ProperLoss:
    """Thresholded 0-1 CPE loss; the threshold point 1/2 costs 1/2 either way.

    Proper but not strictly proper.
    """
    return ProperLoss(
        name="zero-one",
        partial_pos=lambda q: np.where(q < 0.5, 1.0, np.where(q == 0.5, 0.5, 0.0)),
        partial_neg=lambda q: np.where(q > 0.5, 1.0, np.where(q == 0.5, 0.5, 0.0)),
        bayes_risk=lambda e: np.minimum(e, 1 - e),
    )


def linear_loss() -> ProperLoss:
    """c(1, q) = 1 - q, c(-1, q) = q.  Not proper."""
    return ProperLoss(
        name="linear",
        partial_pos=lambda q: 1 - q,
        partial_neg=lambda q: q,
        bayes_risk=lambda e: np.minimum(e, 1 - e),
    )


def hinge_cpe_loss() -> ProperLoss:
    """Hinge loss on [-1, 1] read through q = (yhat + 1)/2; twice the linear loss."""
    return ProperLoss(
        name="hinge",
        partial_pos=lambda q: 2 * (1 - q),
        partial_neg=lambda q: 2 * q,
        bayes_risk=lambda e: 2 * np.minimum(e, 1 - e),
    )
