"""Higher-order asset and bond binaries with time-dependent coefficients.

An m-th order binary with signs ``s_i``, strikes ``K_i`` and expiries
``T_1 < ... < T_m`` pays, at ``T_m``, the underlying (asset kind) or one
unit of cash (bond kind) provided ``s_i x(T_i) > s_i K_i`` held at every
expiry.  Under Black-Scholes dynamics with curves ``r, q, sigma`` its value
is a discounted m-variate normal CDF whose inverse covariance is
tridiagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ArgumentError,
    ContractViolationError,
    DegenerateVarianceError,
    ExpiryError,
)
from .mvn import DEFAULT_SEED, DEFAULT_TOL, InverseCovariance, _gauss_legendre, mvn_cdf
from .term_structure import CoefficientCurve

VARIANCE_FLOOR = 1e-14
KINDS = ("asset", "bond")


def parse_signs(signs) -> tuple[int, ...]:
    """Accept ``"+-+"``, ``["+", "-"]`` or ``[1, -1]``."""
    if isinstance(signs, str):
        signs = list(signs.replace(",", "").replace(" ", ""))
    out = []
    for s in signs:
        if s in ("+", 1, "1", "+1"):
            out.append(1)
        elif s in ("-", -1, "-1"):
            out.append(-1)
        else:
            raise ArgumentError(f"sign must be '+' or '-', got {s!r}")
    if not out:
        raise ArgumentError("at least one sign is required")
    return tuple(out)


def format_signs(signs: Sequence[int]) -> str:
    return "".join("+" if s > 0 else "-" for s in signs)


@dataclass(frozen=True)
class BinarySpec:
    kind: str
    signs: tuple[int, ...]
    strikes: tuple[float, ...]
    expiries: tuple[float, ...]
    r: CoefficientCurve
    q: CoefficientCurve
    sigma: CoefficientCurve

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"kind must be 'asset' or 'bond', got {self.kind!r}")
        object.__setattr__(self, "signs", parse_signs(self.signs))
        object.__setattr__(self, "strikes", tuple(float(k) for k in self.strikes))
        object.__setattr__(self, "expiries", tuple(float(T) for T in self.expiries))
        m = len(self.signs)
        if len(self.strikes) != m or len(self.expiries) != m:
            raise ArgumentError("signs, strikes and expiries must have equal length")
        if any(k < 0 or math.isnan(k) for k in self.strikes):
            raise ArgumentError("strikes must be >= 0 (0 is the vacuous-indicator limit)")
        if any(b <= a for a, b in zip(self.expiries, self.expiries[1:])):
            raise ArgumentError("expiries must be strictly ascending")

    @property
    def order(self) -> int:
        return len(self.signs)


@dataclass(frozen=True)
class BinaryQuote:
    value: float
    d_vector: tuple[float, ...]
    d_prime_vector: tuple[float, ...]
    inv_cov: InverseCovariance | None
    discount_r: float
    discount_q: float
    error: float = 0.0


def tridiagonal_inverse_covariance(total: Sequence[float], increments: Sequence[float]) -> np.ndarray:
    """The ``a_ij`` matrix from accumulated variances.

    ``total[i]`` is the variance from valuation to expiry ``i`` and
    ``increments[i]`` (``i >= 1``) the variance between expiries ``i-1`` and
    ``i``; ``increments[0]`` is ignored.
    """
    v = np.asarray(total, dtype=float)
    inc = np.asarray(increments, dtype=float)
    m = len(v)
    A = np.zeros((m, m))
    if m == 1:
        A[0, 0] = 1.0
        return A
    A[0, 0] = v[1] / inc[1]
    A[m - 1, m - 1] = v[m - 1] / inc[m - 1]
    for i in range(1, m - 1):
        A[i, i] = v[i] / inc[i] + v[i] / inc[i + 1]
    for i in range(m - 1):
        A[i, i + 1] = A[i + 1, i] = -math.sqrt(v[i] * v[i + 1]) / inc[i + 1]
    return A


def correlation_from_variances(total: Sequence[float]) -> np.ndarray:
    """``r_ij = sqrt(v_i / v_j)`` for ``i <= j``: the inverse of the ``a_ij`` matrix."""
    v = np.asarray(total, dtype=float)
    lo = np.minimum.outer(v, v)
    hi = np.maximum.outer(v, v)
    return np.sqrt(lo / hi)


def _log_moneyness(x: float, K: float) -> float:
    return math.inf if K == 0.0 else math.log(x / K)


def _price(
    kind: str,
    signs: Sequence[int],
    strikes: Sequence[float],
    expiries: Sequence[float],
    r: CoefficientCurve,
    q: CoefficientCurve,
    sigma: CoefficientCurve,
    x: float,
    t: float,
    tol: float,
    seed,
) -> BinaryQuote:
    if not x > 0 or not math.isfinite(x):
        raise ArgumentError(f"spot must be positive and finite, got {x}")
    if not t < expiries[0]:
        raise ExpiryError(f"valuation time {t} is not before the first expiry {expiries[0]}")
    m = len(signs)
    T = np.asarray(expiries)
    v = sigma.integrate(t, T, squared=True)
    rb = r.integrate(t, T)
    qb = q.integrate(t, T)
    disc_r = math.exp(-rb[-1])
    disc_q = math.exp(-qb[-1])
    d = np.empty(m)
    dp = np.empty(m)
    live = []
    for i in range(m):
        drift = _log_moneyness(x, strikes[i]) + rb[i] - qb[i]
        if v[i] < VARIANCE_FLOOR:
            # no diffusion up to this expiry: the indicator is deterministic
            d[i] = dp[i] = math.copysign(math.inf, drift) if drift != 0 else -math.inf
            if not signs[i] * drift > 0:
                return BinaryQuote(0.0, tuple(d.tolist()), tuple(dp.tolist()), None, disc_r, disc_q)
            continue
        sv = math.sqrt(v[i])
        d[i] = (drift + 0.5 * v[i]) / sv
        dp[i] = d[i] - sv
        live.append(i)
    if not live:
        value = x * disc_q if kind == "asset" else disc_r
        return BinaryQuote(value, tuple(d.tolist()), tuple(dp.tolist()), None, disc_r, disc_q)
    inc = [0.0] + [
        sigma.integrate(expiries[i - 1], expiries[i], squared=True) for i in live[1:]
    ]
    if any(w < VARIANCE_FLOOR for w in inc[1:]):
        raise DegenerateVarianceError("accumulated variance between consecutive expiries vanishes")
    s = np.array([signs[i] for i in live], dtype=float)
    A = tridiagonal_inverse_covariance([v[i] for i in live], inc) * np.outer(s, s)
    inv_cov = InverseCovariance(A)
    thresholds = s * (d[live] if kind == "asset" else dp[live])
    res = mvn_cdf(thresholds, inv_cov, tol=tol, seed=seed)
    scale = x * disc_q if kind == "asset" else disc_r
    return BinaryQuote(
        float(scale * res.value), tuple(d.tolist()), tuple(dp.tolist()), inv_cov, disc_r, disc_q,
        float(scale * res.error),
    )


def price_binary(
    spec: BinarySpec, x: float, t: float, tol: float = DEFAULT_TOL, seed: int | None = DEFAULT_SEED
) -> BinaryQuote:
    """Closed-form value of the binary described by ``spec`` at spot ``x``, time ``t``."""
    return _price(
        spec.kind, spec.signs, spec.strikes, spec.expiries, spec.r, spec.q, spec.sigma, x, t, tol, seed
    )


def constant_offset(q: CoefficientCurve, r: CoefficientCurve, t: float, T: float) -> float:
    """Return ``b`` if ``q - r == b`` on ``[t, T]``, else raise."""
    diff = q.combine(r, lambda a, c: a - c)
    levels = diff.levels_on(t, T)
    b = levels[0]
    if any(abs(lv - b) > 1e-13 * max(1.0, abs(b)) for lv in levels):
        raise ContractViolationError("q - r is not constant on the pricing horizon")
    return b


def shift_rate_equivalence(
    spec: BinarySpec,
    r2: CoefficientCurve,
    x: float,
    t: float,
    tol: float = DEFAULT_TOL,
    seed: int | None = DEFAULT_SEED,
) -> BinaryQuote:
    """Price ``spec`` by moving to rate curve ``r2`` with the same ``q - r``.

    Requires ``q = r + b`` for a constant ``b``; the price under
    ``(r2, r2 + b, sigma)`` is multiplied by ``exp(-int (r - r2))``.
    """
    T = spec.expiries[-1]
    b = constant_offset(spec.q, spec.r, t, T)
    moved = replace(spec, r=r2, q=r2.shifted(b))
    quote = price_binary(moved, x, t, tol=tol, seed=seed)
    factor = math.exp(-(spec.r.integrate(t, T) - r2.integrate(t, T)))
    return replace(
        quote,
        value=factor * quote.value,
        error=factor * quote.error,
        discount_r=factor * quote.discount_r,
        discount_q=factor * quote.discount_q,
    )


def integral_of_binary(
    kind: str,
    head_signs: Sequence[int],
    head_strikes: Sequence[float],
    head_expiries: Sequence[float],
    last_sign: int,
    last_strike: float,
    weight: Callable[[float], float],
    interval: tuple[float, float],
    r: CoefficientCurve,
    q: CoefficientCurve,
    sigma: CoefficientCurve,
    x: float,
    t: float,
    nodes: int = 64,
    graded: bool = True,
    tol: float = DEFAULT_TOL,
    seed: int | None = DEFAULT_SEED,
    split_at: Sequence[float] = (),
) -> float:
    """``int weight(tau) F(x, t; T_1..T_k, tau) dtau`` over ``interval``.

    ``F`` is the binary with the given head slots and a final slot
    ``(last_sign, last_strike)`` expiring at ``tau``.  Gauss-Legendre with
    ``nodes`` points per panel; panels are cut at ``split_at`` (coefficient
    jumps put kinks in the integrand).  ``graded`` uses
    ``tau = lo + (hi - lo) u^2`` on the first panel, which removes the
    square-root behaviour where ``tau`` meets the previous expiry.
    """
    lo, hi = float(interval[0]), float(interval[1])
    head_signs = parse_signs(head_signs) if len(head_signs) else ()
    if lo > hi:
        raise ArgumentError("integration interval must satisfy lo <= hi")
    floor = head_expiries[-1] if len(head_expiries) else t
    if lo < floor or t > lo:
        raise ArgumentError("integration interval must start after the last head expiry and t")
    if lo == hi:
        return 0.0
    u, w = _gauss_legendre(nodes)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    signs = tuple(head_signs) + parse_signs([last_sign])
    strikes = tuple(head_strikes) + (float(last_strike),)
    edges = [lo, *sorted(c for c in set(split_at) if lo < c < hi), hi]
    total = 0.0
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if graded and k == 0:
            taus = a + (b - a) * u * u
            jac = 2.0 * u * (b - a)
        else:
            taus = a + (b - a) * u
            jac = np.full_like(u, b - a)
        for tau, wk, jk in zip(taus, w, jac):
            g = weight(tau)
            if g == 0.0:
                continue
            quote = _price(kind, signs, strikes, tuple(head_expiries) + (tau,), r, q, sigma, x, t, tol, seed)
            total += wk * jk * g * quote.value
    return total
