"""Finite-difference oracle for the one-factor problems.

Solves, in ``y = ln x``,

    u_t + 0.5 var(t) u_yy + mu(t) u_y - k(t) u + f(y, t) = 0

backwards in time with Crank-Nicolson (Rannacher start-up after every
terminal discontinuity).  Two drivers are provided:

* :func:`fd_price_binary` - the Black-Scholes equation with curves
  ``r, q, sigma`` and a binary payoff cascade;
* :func:`fd_solve_cascade` - the bond problems after the change of
  numeraire: rate 0, dividend ``b``, volatility ``S_X`` evaluated from the
  affine model directly, kill rate ``lambda_i`` and the recovery source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded

from ..binary_engine import BinarySpec
from ..bond_pricer import BondContract, Endogenous, Exogenous
from ..errors import ArgumentError, ConfigError
from ..short_rate import effective_vol_squared

MIN_NODES_BETWEEN_STRIKES = 10


@dataclass(frozen=True)
class FdGrid:
    nodes: int = 800
    width_sd: float = 8.0
    steps_per_year: int = 1000
    scheme: str = "cn"
    rannacher_steps: int = 2

    def __post_init__(self):
        if self.scheme not in ("cn", "implicit"):
            raise ConfigError("scheme must be 'cn' or 'implicit'")
        if self.nodes < 5 or self.steps_per_year < 1:
            raise ConfigError("FD grid needs >= 5 nodes and >= 1 step per year")

    def refined(self, factor: int = 2) -> "FdGrid":
        return FdGrid(
            (self.nodes - 1) * factor + 1,
            self.width_sd,
            self.steps_per_year * factor,
            self.scheme,
            self.rannacher_steps,
        )


def _space_grid(grid: FdGrid, center: float, half_width: float, anchor: float | None,
                must_cover: Sequence[float]) -> np.ndarray:
    lo = min([center - half_width, *[c - 1.0 for c in must_cover]])
    hi = max([center + half_width, *[c + 1.0 for c in must_cover]])
    dy = (hi - lo) / (grid.nodes - 1)
    if anchor is not None:
        # put a node exactly on the first barrier
        shift = anchor - (lo + round((anchor - lo) / dy) * dy)
        lo += shift
    return lo + dy * np.arange(grid.nodes)


def _check_separation(y: np.ndarray, strikes: Sequence[float]) -> None:
    logs = sorted({math.log(k) for k in strikes if 0 < k < math.inf})
    dy = y[1] - y[0]
    for a, b in zip(logs, logs[1:]):
        if b - a < MIN_NODES_BETWEEN_STRIKES * dy:
            raise ConfigError(
                f"FD grid too coarse: {(b - a) / dy:.1f} nodes between strikes "
                f"{math.exp(a):.6g} and {math.exp(b):.6g} (need {MIN_NODES_BETWEEN_STRIKES})"
            )


def _fraction_above(y: np.ndarray, level: float) -> np.ndarray:
    """Share of each node's cell lying strictly above ``level`` (cell-averaged indicator)."""
    if level <= 0:
        return np.ones_like(y)
    if math.isinf(level):
        return np.zeros_like(y)
    dy = y[1] - y[0]
    return np.clip((y + 0.5 * dy - math.log(level)) / dy, 0.0, 1.0)


Coefficients = Callable[[float, float], tuple[float, float, float]]
Source = Callable[[np.ndarray, float], np.ndarray]


def _step_times(lo: float, hi: float, steps_per_year: int, stops: Sequence[float]) -> list[float]:
    cuts = sorted({lo, hi, *[s for s in stops if lo < s < hi]})
    times = [cuts[0]]
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((b - a) * steps_per_year - 1e-9))
        times.extend(np.linspace(a, b, n + 1)[1:].tolist())
        times[-1] = b
    return times


def solve_backward(
    y: np.ndarray,
    terminal: np.ndarray,
    times: Sequence[float],
    coefficients: Coefficients,
    source: Source | None = None,
    scheme: str = "cn",
    rannacher_steps: int = 2,
    save: Sequence[float] = (),
) -> tuple[np.ndarray, dict[float, np.ndarray]]:
    """March ``terminal`` (given at ``times[-1]``) back to ``times[0]``.

    ``coefficients(lo, hi)`` returns the step averages ``(var, mu, k)``,
    each a scalar or an array over the nodes.
    Boundary nodes follow ``u_t - k u + f = 0``.
    """
    n = len(y)
    dy = y[1] - y[0]
    u = terminal.astype(float).copy()
    saved = {}
    save_set = set(save)
    if times[-1] in save_set:
        saved[times[-1]] = u.copy()
    zero = np.zeros(n)
    taken = 0
    for j in range(len(times) - 1, 0, -1):
        s_lo, s_hi = times[j - 1], times[j]
        if taken < rannacher_steps or scheme == "implicit":
            substeps = [(0.5 * (s_lo + s_hi), s_hi), (s_lo, 0.5 * (s_lo + s_hi))] if scheme == "cn" else [(s_lo, s_hi)]
            theta = 1.0
        else:
            substeps = [(s_lo, s_hi)]
            theta = 0.5
        for a, b in substeps:
            h = b - a
            var, mu, k = (np.broadcast_to(np.asarray(c, dtype=float), (n,)) for c in coefficients(a, b))
            alpha = 0.5 * var[1:-1] / dy**2
            beta = mu[1:-1] / (2.0 * dy)
            lower = alpha - beta
            diag = -2.0 * alpha - k[1:-1]
            upper = alpha + beta
            f_hi = source(y, b) if source is not None else zero
            f_lo = source(y, a) if source is not None else zero
            forcing = h * (theta * f_lo + (1.0 - theta) * f_hi)
            rhs = u + forcing
            rhs[1:-1] += h * (1.0 - theta) * (lower * u[:-2] + diag * u[1:-1] + upper * u[2:])
            # boundary nodes: u_t - k u + f = 0 with the same theta
            for idx in (0, n - 1):
                rhs[idx] = (u[idx] * (1.0 - h * (1.0 - theta) * k[idx]) + forcing[idx]) / (1.0 + h * theta * k[idx])
            ab = np.zeros((3, n))
            ab[0, 2:] = -h * theta * upper
            ab[1, 1:-1] = 1.0 - h * theta * diag
            ab[2, :-2] = -h * theta * lower
            ab[1, 0] = ab[1, -1] = 1.0
            u = solve_banded((1, 1), ab, rhs, overwrite_ab=True, overwrite_b=True, check_finite=False)
        taken += 1
        if s_lo in save_set:
            saved[s_lo] = u.copy()
    return u, saved


@dataclass
class FdSurface:
    """Solution snapshots ``u(y, t)`` per interval, interpolable in ``x`` and ``t``."""

    y: np.ndarray
    intervals: list[tuple[float, float]]
    snapshots: list[dict[float, np.ndarray]] = field(default_factory=list)

    def _interval(self, t: float) -> int:
        for i, (lo, hi) in enumerate(self.intervals):
            if lo <= t < hi:
                return i
        raise ArgumentError(f"time {t} outside the solved horizon")

    def _at(self, snap: np.ndarray, x):
        return CubicSpline(self.y, snap)(np.log(x))

    def value(self, x, t: float):
        i = self._interval(t)
        snaps = self.snapshots[i]
        times = sorted(snaps)
        close = [s for s in times if abs(s - t) < 1e-12]
        if close:
            out = self._at(snaps[close[0]], x)
        else:
            hi = next((s for s in times if s > t), None)
            lo = next((s for s in reversed(times) if s < t), None)
            if hi is None or lo is None:
                raise ArgumentError(f"time {t} not bracketed by saved snapshots")
            w = (t - lo) / (hi - lo)
            out = (1 - w) * self._at(snaps[lo], x) + w * self._at(snaps[hi], x)
        return float(out) if np.ndim(out) == 0 else out


def fd_price_binary(
    spec: BinarySpec, x: float, t: float, grid: FdGrid = FdGrid()
) -> float:
    """Black-Scholes PDE solution for the binary ``spec`` at ``(x, t)``."""
    T = spec.expiries
    sd = math.sqrt(spec.sigma.integrate(t, T[-1], squared=True))
    drift = spec.r.integrate(t, T[-1]) - spec.q.integrate(t, T[-1])
    center = math.log(x) + drift
    positive = [k for k in spec.strikes if k > 0]
    y = _space_grid(grid, center, grid.width_sd * sd, math.log(positive[0]) if positive else None,
                    [math.log(k) for k in positive] + [math.log(x)])
    _check_separation(y, spec.strikes)

    def coefficients(a, b):
        h = b - a
        var = spec.sigma.integrate(a, b, squared=True) / h
        r = spec.r.integrate(a, b) / h
        q = spec.q.integrate(a, b) / h
        return var, r - q - 0.5 * var, r

    u = np.exp(y) if spec.kind == "asset" else np.ones_like(y)
    stops = [t, *T]
    for j in range(spec.order - 1, -1, -1):
        frac = _fraction_above(y, spec.strikes[j])
        u = u * (frac if spec.signs[j] > 0 else 1.0 - frac)
        lo = T[j - 1] if j > 0 else t
        times = _step_times(lo, T[j], grid.steps_per_year, stops)
        u, _ = solve_backward(y, u, times, coefficients, None, grid.scheme, grid.rannacher_steps)
    return float(CubicSpline(y, u)(math.log(x)))


def fd_solve_cascade(
    contract: BondContract,
    mode: str | None = None,
    grid: FdGrid = FdGrid(),
    center_x: float | None = None,
    save_times: Sequence[float] = (),
) -> FdSurface:
    """Relative price surface ``u(x, t) = C / Z`` on ``[t_0, T)``.

    ``mode`` defaults to the contract's recovery type.  The announcing
    dates (as interval starts) and ``save_times`` are stored.
    """
    rec = contract.recovery
    if mode is None:
        mode = "exogenous" if isinstance(rec, Exogenous) else "endogenous"
    if mode == "exogenous" and not isinstance(rec, Exogenous):
        raise ArgumentError("exogenous mode needs an exogenous recovery")
    if mode == "endogenous" and not isinstance(rec, Endogenous):
        raise ArgumentError("endogenous mode needs an endogenous recovery")
    dates, lam, K = contract.announce_dates, contract.intensities, contract.barriers
    T = contract.maturity
    model, firm = contract.rate_model, contract.firm
    b = firm.b

    # total variance for the grid width (fine midpoint rule)
    probe = np.linspace(dates[0], T, 2001)
    var_total = float(trapezoid(effective_vol_squared(model, firm, probe, T), probe))
    strikes = [k for k in K if k > 0]
    if mode == "endogenous" and math.isfinite(rec.cap_strike):
        strikes.append(rec.cap_strike)
    if center_x is None:
        center_x = math.exp(np.mean(np.log(strikes))) if strikes else 1.0
    anchor = next((math.log(k) for k in K if k > 0), None)
    y = _space_grid(grid, math.log(center_x), grid.width_sd * math.sqrt(var_total), anchor,
                    [math.log(k) for k in strikes] + [math.log(center_x)])
    _check_separation(y, strikes)
    x = np.exp(y)

    def coefficients_for(k_rate):
        def coefficients(a, c):
            var = float(effective_vol_squared(model, firm, 0.5 * (a + c), T))
            return var, -b - 0.5 * var, k_rate
        return coefficients

    surface = FdSurface(y, [(dates[i], dates[i + 1]) for i in range(contract.n_intervals)],
                        [dict() for _ in range(contract.n_intervals)])
    u = np.ones_like(y)
    for i in range(contract.n_intervals - 1, -1, -1):
        frac = _fraction_above(y, K[i])
        if mode == "exogenous":
            default_value = rec.R_e
            src_level = lam[i] * rec.R_u

            def source(yy, s, c=src_level):
                return np.full_like(yy, c)
        else:
            default_value = rec.R_e * rec.alpha * x
            ua = rec.R_u * rec.alpha
            capped = lam[i] * np.minimum(1.0, ua * x)

            def source(yy, s, c=capped):
                return c
        u = frac * u + (1.0 - frac) * default_value
        lo, hi = dates[i], dates[i + 1]
        stops = [s for s in save_times if lo <= s < hi]
        times = _step_times(lo, hi, grid.steps_per_year, stops)
        u, saved = solve_backward(y, u, times, coefficients_for(lam[i]), source,
                                  grid.scheme, grid.rannacher_steps, save=[lo, *stops])
        surface.snapshots[i] = saved
    return surface


def fd_zcb(model, r: float, t: float, T: float, grid: FdGrid = FdGrid()) -> float:
    """Zero-coupon bond from the short-rate PDE ``Z_t + s_r^2/2 Z_rr + (a1 - a2 r) Z_r - r Z = 0``."""
    if t == T:
        return 1.0
    a = max(model.a2, 1e-12)
    sd = model.s_r * math.sqrt(-math.expm1(-2.0 * a * (T - t)) / (2.0 * a))
    half = grid.width_sd * max(sd, 1e-3) + abs(r - model.a1 / a if model.a2 > 0 else 0.0)
    y = r - half + 2.0 * half * np.arange(grid.nodes) / (grid.nodes - 1)
    times = _step_times(t, T, grid.steps_per_year, ())

    def coefficients(lo, hi):
        return model.s_r**2, model.a1 - model.a2 * y, y

    u, _ = solve_backward(y, np.ones_like(y), times, coefficients, None, grid.scheme, grid.rannacher_steps)
    return float(CubicSpline(y, u)(r))
