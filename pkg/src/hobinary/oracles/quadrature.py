"""Adaptive-quadrature oracles.

``kernel_value`` applies the time-dependent Black-Scholes transition
kernel to an arbitrary payoff; chaining it with a lower-order price gives
an independent route to every higher-order binary.  ``tensor_mvn_cdf``
integrates a trivariate (or bivariate) normal density directly.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate

from ..binary_engine import BinarySpec, price_binary
from ..term_structure import CoefficientCurve

SQRT_2PI = math.sqrt(2.0 * math.pi)


def kernel_value(
    payoff: Callable[[float], float],
    x: float,
    t: float,
    T: float,
    r: CoefficientCurve,
    q: CoefficientCurve,
    sigma: CoefficientCurve,
    lower: float = 0.0,
    upper: float = math.inf,
    width: float = 12.0,
) -> float:
    """``e^{-rbar} int p(z) f(z) dz`` restricted to ``lower < z < upper``.

    ``p`` is the lognormal transition density from ``(x, t)`` to ``T``.
    """
    v = sigma.integrate(t, T, squared=True)
    sd = math.sqrt(v)
    rb = r.integrate(t, T)
    mu = math.log(x) + rb - q.integrate(t, T) - 0.5 * v
    lo = mu - width * sd if lower <= 0 else max(math.log(lower), mu - width * sd)
    hi = mu + width * sd if math.isinf(upper) else min(math.log(upper), mu + width * sd)
    if lo >= hi:
        return 0.0

    def integrand(y):
        return math.exp(-0.5 * ((y - mu) / sd) ** 2) / (SQRT_2PI * sd) * payoff(math.exp(y))

    value, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=400)
    return math.exp(-rb) * value


def induction_value(spec: BinarySpec, x: float, t: float, tol: float = 1e-9) -> float:
    """Price of ``spec`` from the kernel applied to its order-(m-1) tail at ``T_1``."""
    if spec.order == 1:
        payoff = (lambda z: z) if spec.kind == "asset" else (lambda z: 1.0)
    else:
        tail = BinarySpec(spec.kind, spec.signs[1:], spec.strikes[1:], spec.expiries[1:],
                          spec.r, spec.q, spec.sigma)

        def payoff(z):
            return price_binary(tail, z, spec.expiries[0], tol=tol).value

    K = spec.strikes[0]
    if spec.signs[0] > 0:
        return kernel_value(payoff, x, t, spec.expiries[0], spec.r, spec.q, spec.sigma, lower=K)
    return kernel_value(payoff, x, t, spec.expiries[0], spec.r, spec.q, spec.sigma, upper=K)


def tensor_mvn_cdf(a, R, floor: float = -9.0, tol: float = 1e-11) -> float:
    """Direct adaptive integration of the normal density of order 2 or 3."""
    a = np.asarray(a, dtype=float)
    R = np.asarray(R, dtype=float)
    m = len(a)
    P = np.linalg.inv(R)
    norm = 1.0 / math.sqrt((2.0 * math.pi) ** m * np.linalg.det(R))

    def density(*y):
        v = np.asarray(y)
        return norm * math.exp(-0.5 * v @ P @ v)

    ranges = [(floor, min(ai, -floor)) for ai in a][::-1]
    value, _ = integrate.nquad(density, ranges, opts={"epsabs": tol, "epsrel": tol, "limit": 200})
    return value
