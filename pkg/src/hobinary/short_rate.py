"""Affine short-rate analytics and the effective volatility of V/Z.

Only the Vasicek closed form is shipped.  Bond pricing uses the model
through :class:`AffineShortRate`, so another affine model (Ho-Lee,
Hull-White, CIR) only has to supply ``B``, ``A``, the rate volatility and
the integrals of ``B`` and ``B**2`` used by the volatility projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import ArgumentError
from .term_structure import CoefficientCurve, grid_curve

SERIES_CUTOFF = 0.5   # switch on z = a2 (T - t)
_SERIES_TERMS = 30


def _b_factors(z: float, branch: str | None = None) -> tuple[float, float, float]:
    """``(f0, f1, f2)`` with ``B = tau f0``, ``int B = tau^2 f1``, ``int B^2 = tau^3 f2``.

    The closed forms cancel catastrophically for small ``z``; there the
    Taylor series (entire functions, rapidly convergent) are used.
    """
    if branch is None:
        branch = "series" if z < SERIES_CUTOFF else "closed"
    if branch == "closed":
        e1 = -math.expm1(-z)
        e2 = -math.expm1(-2.0 * z)
        return e1 / z, (z - e1) / z**2, (z - 2.0 * e1 + 0.5 * e2) / z**3
    # f0 = sum_{k>=1} (-z)^(k-1) / k!
    # f1 = sum_{k>=2} (-z)^(k-2) / k!
    # f2 = sum_{k>=3} (2^(k-1) - 2) (-z)^(k-3) / k!
    f0 = f1 = f2 = 0.0
    fact = 1.0
    for k in range(1, _SERIES_TERMS + 3):
        fact *= k
        if k <= _SERIES_TERMS:
            f0 += (-z) ** (k - 1) / fact
        if 2 <= k <= _SERIES_TERMS + 1:
            f1 += (-z) ** (k - 2) / fact
        if k >= 3:
            f2 += (2.0 ** (k - 1) - 2.0) * (-z) ** (k - 3) / fact
    return f0, f1, f2


def _check_order(t, T):
    if t > T:
        raise ArgumentError(f"need t <= T, got t={t}, T={T}")


@dataclass(frozen=True)
class VasicekParams:
    """``dr = (a1 - a2 r) dt + s_r dW1``.

    ``a2 = 0`` is accepted and served by the series branch (Merton/Ho-Lee
    limit with constant drift).
    """

    a1: float = 0.379 * 0.098
    a2: float = 0.379
    s_r: float = 0.077

    def __post_init__(self):
        if self.a2 < 0:
            raise ArgumentError("mean-reversion speed a2 must be >= 0")
        if self.s_r < 0:
            raise ArgumentError("rate volatility s_r must be >= 0")

    def rate_vol(self, t: float) -> float:
        return self.s_r

    def affine_B(self, t: float, T: float) -> float:
        _check_order(t, T)
        tau = T - t
        return tau * _b_factors(self.a2 * tau)[0]

    def int_B(self, t: float, T: float) -> float:
        """Integral of ``B(u, T)`` for ``u`` in ``[t, T]``."""
        _check_order(t, T)
        tau = T - t
        return tau**2 * _b_factors(self.a2 * tau)[1]

    def int_B2(self, t: float, T: float) -> float:
        """Integral of ``B(u, T)**2`` for ``u`` in ``[t, T]``."""
        _check_order(t, T)
        tau = T - t
        return tau**3 * _b_factors(self.a2 * tau)[2]

    def affine_A(self, t: float, T: float) -> float:
        # standard affine solution: A = -int [a1 B - s_r^2 B^2 / 2] du
        return -self.a1 * self.int_B(t, T) + 0.5 * self.s_r**2 * self.int_B2(t, T)


def zcb_price(model: AffineShortRate, r: float, t: float, T: float) -> float:
    """Default-free zero-coupon bond ``exp(A(t,T) - B(t,T) r)``."""
    _check_order(t, T)
    if t == T:
        return 1.0
    return math.exp(model.affine_A(t, T) - model.affine_B(t, T) * r)


@dataclass(frozen=True)
class FirmParams:
    """``dV = (r - b) V dt + s_V V dW2`` with ``d<W1, W2> = rho dt``."""

    b: float = 0.05
    s_V: CoefficientCurve = CoefficientCurve.constant(1.0, kind="volatility")
    rho: float = 0.5

    def __post_init__(self):
        if isinstance(self.s_V, (int, float)):
            object.__setattr__(self, "s_V", CoefficientCurve.constant(float(self.s_V), kind="volatility"))
        if not -1.0 <= self.rho <= 1.0:
            raise ArgumentError(f"correlation rho = {self.rho} outside [-1, 1]")
        if min(self.s_V.values) <= 0:
            raise ArgumentError("firm volatility must be > 0")


def effective_vol_squared(model: AffineShortRate, firm: FirmParams, t, T: float):
    """``S_X(t)^2 = s_V^2 + 2 rho s_V s_r B + (s_r B)^2`` (vectorised in ``t``)."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(ts)
    for k, tk in enumerate(ts):
        sv = firm.s_V(tk)
        sb = model.rate_vol(tk) * model.affine_B(tk, T)
        out[k] = max(0.0, sv * sv + 2.0 * firm.rho * sv * sb + sb * sb)
    return float(out[0]) if np.ndim(t) == 0 else out


def effective_vol(model: AffineShortRate, firm: FirmParams, t: float, T: float) -> float:
    """Volatility of ``x = V / Z(r, t; T)`` at time ``t``."""
    _check_order(t, T)
    return math.sqrt(effective_vol_squared(model, firm, t, T))


def effective_vol_curve(
    model: AffineShortRate,
    firm: FirmParams,
    T: float,
    steps_per_year: int = 250,
    start: float = 0.0,
    knots: Sequence[float] = (),
) -> CoefficientCurve:
    """Piecewise-constant projection of ``S_X`` on ``[start, T]``.

    Each cell carries the root of the cell average of ``S_X^2`` computed in
    closed form, so the squared integral of the curve is exact at every grid
    node.  ``knots`` (e.g. announcing dates) and the breakpoints of ``s_V``
    are always grid nodes.
    """
    if steps_per_year < 1:
        raise ArgumentError("steps_per_year must be >= 1")
    if not start < T:
        raise ArgumentError("need start < T")
    n = max(1, math.ceil((T - start) * steps_per_year - 1e-9))
    nodes = set(np.linspace(start, T, n + 1).tolist())
    nodes.update(float(k) for k in knots if start < k < T)
    nodes.update(b for b in firm.s_V.breakpoints if start < b < T)
    pts = sorted(nodes)
    # merge nodes closer than rounding noise
    cleaned = [pts[0]]
    for p in pts[1:]:
        if p - cleaned[-1] > 1e-12 * max(1.0, T):
            cleaned.append(p)
    cleaned[-1] = T
    for k in knots:
        if start < k < T:
            j = int(np.argmin(np.abs(np.asarray(cleaned) - k)))
            cleaned[j] = float(k)
    levels = []
    for lo, hi in zip(cleaned[:-1], cleaned[1:]):
        mid = 0.5 * (lo + hi)
        sv = firm.s_V(mid)
        sr = model.rate_vol(mid)
        ib = model.int_B(lo, T) - model.int_B(hi, T)
        ib2 = model.int_B2(lo, T) - model.int_B2(hi, T)
        total = sv * sv * (hi - lo) + 2.0 * firm.rho * sv * sr * ib + sr * sr * ib2
        levels.append(math.sqrt(max(total, 1e-300) / (hi - lo)))
    return grid_curve(cleaned, levels, kind="volatility")
