"""Loss definitions read from JSON, with formulas written as expressions in q.

Two shapes are accepted::

    {"name": "linear", "partial_pos": "1 - q", "partial_neg": "q"}
    {"name": "spherical", "H": "1 - sqrt(q**2 + (1 - q)**2)", "lambda": 1}

The second goes through the Savage construction; ``H_prime`` may be given,
otherwise it is the symbolic derivative of ``H``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import sympy

from .construct import ConcaveRiskSpec, from_concave_risk
from .losses import ProperLoss, xmul

Q = sympy.Symbol("q", real=True)
_KEYS = {"name", "partial_pos", "partial_neg", "H", "H_prime", "lambda"}


class SpecError(ValueError):
    pass


def _expr(text, key):
    if not isinstance(text, str):
        raise SpecError(f"{key}: expected an expression string")
    try:
        e = sympy.sympify(text, locals={"q": Q})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise SpecError(f"{key}: cannot parse {text!r} ({exc})") from None
    extra = e.free_symbols - {Q}
    if extra:
        raise SpecError(f"{key}: unknown symbols {sorted(map(str, extra))}")
    return e


def _one_sided(e, at, direction):
    try:
        v = complex(sympy.limit(e, Q, at, direction))
    except (TypeError, ValueError, NotImplementedError):
        return np.nan
    return v.real if v.imag == 0 else np.nan


def _numeric(e):
    """Vectorised e(q); values at 0 and 1 are one-sided limits, so 0/0 forms resolve."""
    fn = sympy.lambdify(Q, e, modules="numpy")
    at0, at1 = _one_sided(e, 0, "+"), _one_sided(e, 1, "-")

    def f(q):
        q = np.asarray(q, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.asarray(fn(q), dtype=float) * np.ones_like(q)
        return np.where(q == 0, at0, np.where(q == 1, at1, out))
    return f


def loss_from_spec(data: dict, grid_step: float) -> ProperLoss:
    """Build a ProperLoss; a non-concave H raises NotConcaveError."""
    if not isinstance(data, dict):
        raise SpecError("spec must be a JSON object")
    unknown = set(data) - _KEYS
    if unknown:
        raise SpecError(f"unknown keys {sorted(unknown)}")
    name = str(data.get("name", "spec"))
    lam = data.get("lambda")
    if lam is not None and (isinstance(lam, bool) or not isinstance(lam, (int, float)) or lam <= 0):
        raise SpecError("lambda must be a positive number")
    lam = None if lam is None else float(lam)

    if "H" in data:
        if "partial_pos" in data or "partial_neg" in data:
            raise SpecError("give either H or the two partial losses, not both")
        H = _expr(data["H"], "H")
        Hp = _expr(data["H_prime"], "H_prime") if "H_prime" in data else sympy.diff(H, Q)
        return from_concave_risk(ConcaveRiskSpec(_numeric(H), _numeric(Hp), lam, name), grid_step)

    if "partial_pos" not in data or "partial_neg" not in data:
        raise SpecError("need 'H' or both 'partial_pos' and 'partial_neg'")
    c1 = _expr(data["partial_pos"], "partial_pos")
    c0 = _expr(data["partial_neg"], "partial_neg")
    pos, neg = _numeric(c1), _numeric(c0)

    def H(q):
        q = np.asarray(q, dtype=float)
        return xmul(q, pos(q)) + xmul(1 - q, neg(q))

    return ProperLoss(name, pos, neg, H, _numeric(c1 - c0), lam)


def load_spec(path, grid_step: float) -> ProperLoss:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"not valid JSON: {exc}") from None
    return loss_from_spec(data, grid_step)
