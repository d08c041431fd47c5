import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from hobinary.errors import ArgumentError
from hobinary.oracles.fd import FdGrid, fd_zcb
from hobinary.short_rate import (
    FirmParams,
    VasicekParams,
    _b_factors,
    effective_vol,
    effective_vol_curve,
    effective_vol_squared,
    zcb_price,
)
from hobinary.term_structure import CoefficientCurve

BASE = VasicekParams()


def test_base_parameters():
    assert BASE.a1 == pytest.approx(0.379 * 0.098)
    assert (BASE.a2, BASE.s_r) == (0.379, 0.077)


def test_B_values():
    assert BASE.affine_B(2.0, 2.0) == 0.0
    assert BASE.affine_B(0.0, 6.0) == pytest.approx((1 - math.exp(-2.274)) / 0.379, rel=1e-15)
    assert VasicekParams(a2=0.0).affine_B(1.0, 4.0) == 3.0


@pytest.mark.parametrize("tau", [0.5, 6.0, 30.0])
def test_series_branch_matches_closed_form_at_small_speed(tau):
    z = 1e-6 * tau
    series, closed = _b_factors(z, "series"), _b_factors(z, "closed")
    assert series[0] == pytest.approx(closed[0], rel=1e-9)


@pytest.mark.parametrize("z", [0.05, 0.3, 0.49, 0.7])
def test_series_and_closed_agree_where_both_are_accurate(z):
    for a, b in zip(_b_factors(z, "series"), _b_factors(z, "closed")):
        assert a == pytest.approx(b, rel=1e-12)


def test_zero_speed_limits():
    m = VasicekParams(a1=0.0, a2=0.0, s_r=0.0)
    assert m.int_B(0.0, 2.0) == 2.0
    assert m.int_B2(0.0, 3.0) == pytest.approx(9.0, rel=1e-15)
    assert m.affine_A(0.0, 5.0) == 0.0


@pytest.mark.parametrize("a2", [0.379, 0.02, 1e-4, 0.0])
def test_integrals_against_quadrature(a2):
    m = VasicekParams(a1=0.03, a2=a2, s_r=0.077)
    T = 6.0
    ib, _ = integrate.quad(lambda u: m.affine_B(u, T), 0.0, T, epsabs=1e-14, epsrel=1e-13)
    ib2, _ = integrate.quad(lambda u: m.affine_B(u, T) ** 2, 0.0, T, epsabs=1e-14, epsrel=1e-13)
    assert m.int_B(0.0, T) == pytest.approx(ib, rel=1e-12)
    assert m.int_B2(0.0, T) == pytest.approx(ib2, rel=1e-12)
    A, _ = integrate.quad(lambda u: -(m.a1 * m.affine_B(u, T) - 0.5 * m.s_r**2 * m.affine_B(u, T) ** 2),
                          0.0, T, epsabs=1e-14, epsrel=1e-13)
    assert abs(m.affine_A(0.0, T) - A) < 1e-10


def test_A_terminal_and_trivial():
    assert BASE.affine_A(3.0, 3.0) == 0.0
    assert VasicekParams(a1=0.0, a2=0.379, s_r=0.0).affine_A(0.0, 6.0) == 0.0


def test_zcb_basic_properties():
    assert zcb_price(BASE, 0.3, 6.0, 6.0) == 1.0
    assert zcb_price(BASE, 0.0, 0.0, 6.0) == pytest.approx(math.exp(BASE.affine_A(0.0, 6.0)), rel=1e-15)
    prices = [zcb_price(BASE, r, 0.0, 6.0) for r in (-0.02, 0.03, 0.098, 0.2)]
    assert all(p > 0 for p in prices)
    assert all(b < a for a, b in zip(prices, prices[1:]))
    with pytest.raises(ArgumentError):
        zcb_price(BASE, 0.05, 2.0, 1.0)


def test_zcb_against_rate_pde_solution():
    fd = fd_zcb(BASE, 0.098, 0.0, 6.0, FdGrid(nodes=801, steps_per_year=1000))
    assert fd == pytest.approx(zcb_price(BASE, 0.098, 0.0, 6.0), rel=5e-4)


def zcb_pde_residual(model, r, t, T, h):
    def Z(rr, tt):
        return zcb_price(model, rr, tt, T)

    z0 = Z(r, t)
    zt = (Z(r, t + h) - Z(r, t - h)) / (2 * h)
    zr = (Z(r + h, t) - Z(r - h, t)) / (2 * h)
    zrr = (Z(r + h, t) - 2 * z0 + Z(r - h, t)) / h**2
    return zt + 0.5 * model.s_r**2 * zrr + (model.a1 - model.a2 * r) * zr - r * z0


def test_zcb_pde_residual_is_second_order():
    res = [abs(zcb_pde_residual(BASE, 0.098, 2.0, 6.0, h)) for h in (0.04, 0.02, 0.01)]
    for coarse, fine in zip(res, res[1:]):
        assert 3.5 < coarse / fine < 4.5


def test_effective_vol_endpoints():
    firm = FirmParams()
    assert effective_vol(BASE, firm, 6.0, 6.0) == 1.0
    B = BASE.affine_B(1.0, 6.0)
    exact = 1.0 + 2 * 0.5 * 0.077 * B + (0.077 * B) ** 2
    assert effective_vol_squared(BASE, firm, 1.0, 6.0) == pytest.approx(exact, rel=1e-15)


def test_effective_vol_perfect_negative_correlation():
    B = BASE.affine_B(0.0, 6.0)
    firm = FirmParams(s_V=0.077 * B, rho=-1.0)
    assert effective_vol(BASE, firm, 0.0, 6.0) == pytest.approx(0.0, abs=1e-9)
    firm = FirmParams(s_V=0.3, rho=-1.0)
    assert effective_vol(BASE, firm, 0.0, 6.0) == pytest.approx(abs(0.3 - 0.077 * B), rel=1e-12)


@given(
    st.floats(0.0, 2.0), st.floats(0.0, 0.5), st.floats(0.01, 2.0), st.floats(-1.0, 1.0), st.floats(0.0, 10.0)
)
def test_effective_variance_is_nonnegative(a2, s_r, s_V, rho, t):
    m = VasicekParams(a1=0.03, a2=a2, s_r=s_r)
    assert effective_vol_squared(m, FirmParams(s_V=s_V, rho=rho), t, 10.0) >= 0.0


def test_vol_curve_projection_is_exact_on_nodes():
    firm = FirmParams(s_V=CoefficientCurve((2.0,), (0.8, 1.1), kind="volatility"))
    curve = effective_vol_curve(BASE, firm, 6.0, steps_per_year=50, knots=(3.0,))
    assert 3.0 in curve.breakpoints and 2.0 in curve.breakpoints
    exact, _ = integrate.quad(lambda s: effective_vol_squared(BASE, firm, s, 6.0), 0.0, 3.0,
                              points=[2.0], epsabs=1e-13, epsrel=1e-13)
    assert curve.integrate(0.0, 3.0, squared=True) == pytest.approx(exact, rel=1e-12)


def test_vol_curve_refinement_converges():
    firm = FirmParams()
    exact, _ = integrate.quad(lambda s: effective_vol_squared(BASE, firm, s, 6.0), 0.37, 4.21,
                              epsabs=1e-13, epsrel=1e-13)
    errs = [abs(effective_vol_curve(BASE, firm, 6.0, n).integrate(0.37, 4.21, squared=True) - exact)
            for n in (25, 50, 100)]
    assert errs[2] < errs[1] < errs[0] < 1e-5


@pytest.mark.parametrize("kwargs", [dict(a2=-0.1), dict(s_r=-0.01)])
def test_invalid_vasicek(kwargs):
    with pytest.raises(ArgumentError):
        VasicekParams(**kwargs)


def test_invalid_firm():
    with pytest.raises(ArgumentError):
        FirmParams(rho=1.2)


def test_effective_vol_matches_simulated_log_ratio_variance():
    from hobinary.oracles.mc import _step_loadings

    firm, h, T = FirmParams(), 1e-3, 6.0
    M = _step_loadings(BASE, h, 1.0, firm.rho)
    z = np.random.default_rng(3).standard_normal((4, 400_000))
    X = M @ z
    # stochastic part of d ln(V/Z) over one short step
    dlx = X[3] + BASE.affine_B(h, T) * BASE.s_r * X[0]
    est = dlx.var() / h
    se = est * math.sqrt(2.0 / z.shape[1])
    assert abs(est - effective_vol_squared(BASE, firm, 0.0, T)) < 4 * se + 2e-3
