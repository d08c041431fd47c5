"""Normal CDFs in one, two and m dimensions.

The m-variate CDF is parameterised the way the binary pricing formulas
produce it: by the *inverse* covariance matrix ``A``.  Internally the
routine works with the unit-diagonal covariance ``R = A^-1``.

* ``m = 1`` uses ``scipy.special.ndtr``.
* ``m = 2`` uses Genz's refinement of the Drezner-Wesolowsky method
  (Gauss-Legendre in the arcsine variable), accurate to ~1e-15 absolute.
  Orthants far smaller than their marginals are recomputed by adaptive
  quadrature of a positive integrand, which keeps relative accuracy.
* ``m >= 3`` uses randomised quasi-Monte-Carlo on Genz's separation of
  variables transform with Genz-Bretz variable reordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .errors import ArgumentError, NumericError

TWO_PI = 2.0 * math.pi
SINGULAR_CONDITION = 1e12
DEFAULT_TOL = 1e-7
DEFAULT_SEED = 20130620
# below this fraction of the smaller marginal the Genz sum has cancelled
TAIL_RATIO = 1e-6


def norm_cdf(x):
    """Standard normal CDF.  ``+-inf`` are accepted, NaN is rejected."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise ArgumentError("norm_cdf argument is NaN")
    out = ndtr(arr)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _bvn_upper(h: float, k: float, r: float) -> float:
    """P(X > h, Y > k) for standard normals with correlation ``r``, |r| < 1."""
    if abs(r) < 0.3:
        n = 6
    elif abs(r) < 0.75:
        n = 12
    else:
        n = 20
    x, w = _gauss_legendre(n)
    hk = h * k
    if abs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = math.asin(r)
        sn = np.sin(0.5 * asr * (1.0 + x))
        bvn = 0.5 * asr * float(np.dot(w, np.exp((sn * hk - hs) / (1.0 - sn * sn))))
        return bvn / TWO_PI + ndtr(-h) * ndtr(-k)

    if r < 0:
        k = -k
        hk = -hk
    bvn = 0.0
    if abs(r) < 1:
        a_s = (1.0 - r) * (1.0 + r)
        a = math.sqrt(a_s)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        bvn = a * math.exp(-0.5 * (bs / a_s + hk)) * (
            1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_s * a_s / 5.0
        )
        if hk > -160.0:
            b = math.sqrt(bs)
            bvn -= (
                math.exp(-0.5 * hk)
                * math.sqrt(TWO_PI)
                * ndtr(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
            )
        a *= 0.5
        xs = (a * (1.0 + x)) ** 2
        rs = np.sqrt(1.0 - xs)
        terms = np.exp(-0.5 * bs / xs - hk / (1.0 + rs)) / rs - np.exp(-0.5 * (bs / xs + hk)) * (
            1.0 + c * xs * (1.0 + d * xs)
        )
        bvn += a * float(np.dot(w, terms))
        bvn = -bvn / TWO_PI
    if r > 0:
        bvn += ndtr(-max(h, k))
    elif h >= k:
        bvn = -bvn
    else:
        if h < 0:
            bvn = ndtr(k) - ndtr(h) - bvn
        else:
            bvn = ndtr(-h) - ndtr(-k) - bvn
    return bvn


def bivariate_cdf(a: float, b: float, rho: float) -> float:
    """P(X <= a, Y <= b) for standard normals with correlation ``rho``."""
    if any(math.isnan(v) for v in (a, b, rho)):
        raise ArgumentError("bivariate_cdf argument is NaN")
    if abs(rho) > 1.0:
        raise ArgumentError(f"correlation {rho} outside [-1, 1]")
    if a == -math.inf or b == -math.inf:
        return 0.0
    if a == math.inf:
        return float(ndtr(b))
    if b == math.inf:
        return float(ndtr(a))
    if rho == 1.0:
        return float(ndtr(min(a, b)))
    if rho == -1.0:
        return max(0.0, float(ndtr(a) - ndtr(-b)))
    value = _bvn_upper(-a, -b, rho)
    if value < TAIL_RATIO * min(ndtr(a), ndtr(b)):
        value = _bvn_tail(a, b, rho)
    return min(1.0, max(0.0, value))


def _bvn_tail(a: float, b: float, rho: float) -> float:
    """``int_{-inf}^a phi(x) Phi((b - rho x) / sqrt(1 - rho^2)) dx``; no cancellation."""
    if b < a:
        a, b = b, a
    s = math.sqrt((1.0 - rho) * (1.0 + rho))

    def integrand(x):
        return math.exp(-0.5 * x * x) * float(ndtr((b - rho * x) / s))

    lo = min(a, 0.0) - 12.0
    value, _ = integrate.quad(integrand, lo, a, epsabs=0.0, epsrel=1e-13, limit=200)
    return value / math.sqrt(TWO_PI)


@dataclass(frozen=True)
class InverseCovariance:
    """Symmetric positive-definite inverse covariance ``A`` of order ``m``."""

    matrix: np.ndarray
    _cov: np.ndarray = field(init=False, repr=False, compare=False)
    _cond: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ArgumentError("inverse covariance must be a square matrix")
        if not np.allclose(A, A.T, rtol=1e-12, atol=1e-14):
            raise NumericError("inverse covariance is not symmetric")
        A = 0.5 * (A + A.T)
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            eig = np.linalg.eigvalsh(A)
            raise NumericError(
                f"inverse covariance is not positive definite (min eigenvalue {eig.min():.3e})"
            ) from None
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        cov = np.linalg.inv(A)
        scale = 1.0 / np.sqrt(np.diag(cov))
        cov = cov * np.outer(scale, scale)
        np.fill_diagonal(cov, 1.0)
        cov = 0.5 * (cov + cov.T)
        cov.setflags(write=False)
        object.__setattr__(self, "_cov", cov)
        object.__setattr__(self, "_cond", float(np.linalg.cond(A)))

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    @property
    def condition(self) -> float:
        return self._cond

    def covariance(self) -> np.ndarray:
        """Unit-diagonal covariance (correlation) matrix ``R``."""
        return self._cov


@dataclass(frozen=True)
class MvnResult:
    value: float
    error: float


def mvn_cdf(
    a, inv_cov: InverseCovariance, tol: float = DEFAULT_TOL, seed: int | None = DEFAULT_SEED
) -> MvnResult:
    """P(Y_1 <= a_1, ..., Y_m <= a_m) where ``Y ~ N(0, A^-1)`` (``A^-1`` normalised)."""
    a = np.asarray(a, dtype=float).ravel()
    if not isinstance(inv_cov, InverseCovariance):
        inv_cov = InverseCovariance(np.asarray(inv_cov))
    if a.shape[0] != inv_cov.order:
        raise ArgumentError(f"threshold vector has length {a.shape[0]}, matrix order {inv_cov.order}")
    R = np.array(inv_cov.covariance())
    if inv_cov.condition > SINGULAR_CONDITION:
        return _collapse_and_evaluate(a, R, tol, seed)
    return mvn_cdf_correlation(a, R, tol=tol, seed=seed)


def _collapse_and_evaluate(a: np.ndarray, R: np.ndarray, tol: float, seed) -> MvnResult:
    # nearly singular: merge the pair closest to perfect correlation
    m = len(a)
    off = np.abs(R - np.eye(m))
    i, j = np.unravel_index(np.argmax(off), off.shape)
    i, j = min(i, j), max(i, j)
    keep = [k for k in range(m) if k != j]
    Rk = R[np.ix_(keep, keep)]
    if R[i, j] > 0:
        ak = a[keep].copy()
        ak[keep.index(i)] = min(a[i], a[j])
        return mvn_cdf_correlation(ak, Rk, tol=tol, seed=seed)
    # Y_j = -Y_i:  {Y_i <= a_i, Y_i >= -a_j}
    hi = a[keep].copy()
    lo = a[keep].copy()
    lo[keep.index(i)] = min(a[i], -a[j])
    first = mvn_cdf_correlation(hi, Rk, tol=tol / 2, seed=seed)
    second = mvn_cdf_correlation(lo, Rk, tol=tol / 2, seed=seed)
    return MvnResult(max(0.0, first.value - second.value), first.error + second.error)


def mvn_cdf_correlation(
    a, R, tol: float = DEFAULT_TOL, seed: int | None = DEFAULT_SEED, max_points: int = 2**23
) -> MvnResult:
    """Same as :func:`mvn_cdf` but parameterised by the correlation matrix."""
    a = np.asarray(a, dtype=float).ravel()
    R = np.asarray(R, dtype=float)
    if np.any(np.isnan(a)):
        raise ArgumentError("threshold is NaN")
    if np.any(a == -np.inf):
        return MvnResult(0.0, 0.0)
    finite = np.isfinite(a)
    a = a[finite]
    R = R[np.ix_(finite, finite)]
    m = len(a)
    if m == 0:
        return MvnResult(1.0, 0.0)
    if m == 1:
        return MvnResult(float(ndtr(a[0])), 0.0)
    if m == 2:
        rho = float(np.clip(R[0, 1], -1.0, 1.0))
        return MvnResult(bivariate_cdf(a[0], a[1], rho), 1e-15)
    return _sov_qmc(a, R, tol, seed, max_points)


def _reordered_cholesky(a: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factor with Genz-Bretz prioritisation of the tightest limits."""
    m = len(a)
    C = R.copy()
    b = a.copy()
    L = np.zeros((m, m))
    y = np.zeros(m)
    for i in range(m):
        best, best_p = i, math.inf
        for j in range(i, m):
            s2 = C[j, j] - L[j, :i] @ L[j, :i]
            if s2 <= 0:
                raise NumericError("correlation matrix is not positive definite")
            z = (b[j] - L[j, :i] @ y[:i]) / math.sqrt(s2)
            p = ndtr(z)
            if p < best_p:
                best, best_p = j, p
        if best != i:
            C[[i, best]] = C[[best, i]]
            C[:, [i, best]] = C[:, [best, i]]
            L[[i, best]] = L[[best, i]]
            b[[i, best]] = b[[best, i]]
        s2 = C[i, i] - L[i, :i] @ L[i, :i]
        if s2 <= 0:
            raise NumericError("correlation matrix is not positive definite")
        L[i, i] = math.sqrt(s2)
        for j in range(i + 1, m):
            L[j, i] = (C[j, i] - L[j, :i] @ L[i, :i]) / L[i, i]
        z = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
        pz = max(ndtr(z), 1e-300)
        y[i] = -math.exp(-0.5 * z * z) / math.sqrt(TWO_PI) / pz
    return b, L


def _sov_integrand(w: np.ndarray, b: np.ndarray, L: np.ndarray) -> np.ndarray:
    m = len(b)
    n = w.shape[0]
    y = np.empty((n, m - 1))
    e = np.full(n, ndtr(b[0] / L[0, 0]))
    f = e.copy()
    for i in range(1, m):
        u = np.clip(w[:, i - 1] * e, 1e-300, 1.0 - 1e-16)
        y[:, i - 1] = ndtri(u)
        e = ndtr((b[i] - y[:, :i] @ L[i, :i]) / L[i, i])
        f *= e
    return f


def _sov_qmc(a: np.ndarray, R: np.ndarray, tol: float, seed, max_points: int) -> MvnResult:
    b, L = _reordered_cholesky(a, R)
    m = len(b)
    shifts = 16
    rng = np.random.default_rng(seed)
    engines = [qmc.Sobol(d=m - 1, scramble=True, seed=rng) for _ in range(shifts)]
    log_n = 9
    sums = np.zeros(shifts)
    count = 0
    while True:
        target = 2**log_n
        for s, eng in enumerate(engines):
            pts = eng.random(target - count)
            sums[s] += _sov_integrand(pts, b, L).sum()
        count = target
        means = sums / count
        value = float(means.mean())
        error = 3.0 * float(means.std(ddof=1)) / math.sqrt(shifts)
        if error <= tol or count * shifts >= max_points:
            break
        log_n += 1
    return MvnResult(min(1.0, max(0.0, value)), error)
