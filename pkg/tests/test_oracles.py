import math
from dataclasses import replace

import numpy as np
import pytest

from hobinary.binary_engine import BinarySpec, price_binary
from hobinary.bond_pricer import BondContract, Exogenous, base_contract, relative_price
from hobinary.errors import ConfigError
from hobinary.oracles.fd import FdGrid, fd_solve_cascade
from hobinary.oracles.mc import McConfig, mc_price
from hobinary.oracles.quadrature import induction_value, kernel_value, tensor_mvn_cdf
from hobinary.short_rate import FirmParams, VasicekParams
from hobinary.term_structure import CoefficientCurve

C = CoefficientCurve.constant
R0 = 0.098


def Phi(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def test_fd_riskless_surface_is_one():
    c = base_contract("exogenous", intensities=(0.0, 0.0), barriers=(0.0, 0.0))
    surf = fd_solve_cascade(c, save_times=[1.0, 4.0])
    for t in (0.0, 1.0, 3.0, 4.0):
        assert np.max(np.abs(surf.value(np.array([50.0, 200.0, 800.0]), t) - 1.0)) < 1e-12


def test_fd_single_interval_digital():
    # s_r = 0 makes S_X = s_V constant; R_e = 0 leaves the first-order digital N(d')
    c = BondContract(
        announce_dates=(0.0, 2.0), intensities=(0.0,), barriers=(100.0,), recovery=Exogenous(0.0, 0.0),
        firm=FirmParams(b=0.03, s_V=0.3, rho=0.0), rate_model=VasicekParams(a1=0.0, a2=0.5, s_r=0.0),
    )
    x = 120.0
    v = 0.09 * 2.0
    d2 = (math.log(x / 100.0) - 0.03 * 2.0 - 0.5 * v) / math.sqrt(v)
    fd = fd_solve_cascade(c, center_x=x).value(x, 0.0)
    assert fd == pytest.approx(Phi(d2), abs=1e-4)


def test_fd_strike_separation_rule():
    with pytest.raises(ConfigError):
        fd_solve_cascade(base_contract(), grid=FdGrid(nodes=101))


def _richardson(values):
    (a, b, c) = values
    return (a - b) / (b - c)


def test_fd_self_convergence_exogenous():
    c = base_contract("exogenous")
    g = FdGrid(nodes=201, steps_per_year=250)
    vals = [fd_solve_cascade(c, grid=g.refined(f), center_x=200.0).value(200.0, 0.0) for f in (1, 2, 4)]
    assert 3.5 < _richardson(vals) < 4.5


def test_fd_self_convergence_endogenous():
    c = base_contract()
    g = FdGrid(nodes=801, steps_per_year=250)
    vals = [fd_solve_cascade(c, grid=g.refined(f), center_x=200.0).value(200.0, 0.0) for f in (1, 2, 4)]
    assert 3.5 < _richardson(vals) < 4.5


def test_fd_binary_against_closed_form():
    from hobinary.oracles.fd import fd_price_binary

    spec = BinarySpec("asset", "-+", (105.0, 95.0), (0.7, 1.6), C(0.04), C(0.01), C(0.3, kind="volatility"))
    assert fd_price_binary(spec, 100.0, 0.0) == pytest.approx(price_binary(spec, 100.0, 0.0).value, rel=5e-4)


def test_mc_config_validation():
    with pytest.raises(ConfigError):
        McConfig(paths=10)
    with pytest.raises(ConfigError):
        McConfig(paths=1001, antithetic=True)
    with pytest.raises(ConfigError):
        mc_price(base_contract(), McConfig(paths=1000, dt=0.5), 100.0, R0, 0.0)


def test_mc_riskless_contract_estimates_zcb():
    c = base_contract("exogenous", intensities=(0.0, 0.0), barriers=(0.0, 0.0))
    Z = c.zcb(R0, 0.0)
    res = mc_price(c, McConfig(paths=20_000, dt=0.01), 100.0, R0, 0.0)
    assert abs(res.price - Z) < 3 * res.std_error


def test_mc_deterministic_rates():
    model = VasicekParams(s_r=0.0)
    c = base_contract("exogenous", rate_model=model, intensities=(0.2, 0.4))
    Z = c.zcb(R0, 0.0)
    a = model.a2
    assert Z == pytest.approx(math.exp(-(model.a1 / a * 6.0 + (R0 - model.a1 / a) * model.affine_B(0.0, 6.0))), rel=1e-13)
    res = mc_price(c, McConfig(paths=20_000, dt=0.01), 200.0 * Z, R0, 0.0)
    closed = Z * relative_price(c, 200.0, 0.0)
    assert abs(res.price - closed) < 3 * res.std_error


def test_mc_is_deterministic_and_antithetic_runs():
    c = base_contract("exogenous")
    cfg = McConfig(paths=4000, dt=0.02, seed=9)
    assert mc_price(c, cfg, 117.0, R0, 0.0) == mc_price(c, cfg, 117.0, R0, 0.0)
    anti = mc_price(c, replace(cfg, antithetic=True), 117.0, R0, 0.0)
    assert anti.paths == 4000 and anti.std_error > 0


def test_mc_standard_error_scaling():
    c = base_contract("exogenous")
    se = [mc_price(c, McConfig(paths=n, dt=0.02, seed=5), 117.0, R0, 0.0).std_error for n in (4000, 16000)]
    assert 1.7 < se[0] / se[1] < 2.3


def test_mc_endogenous_base_contract():
    c = base_contract()
    Z = c.zcb(R0, 0.0)
    res = mc_price(c, McConfig(paths=20_000, dt=0.01), 200.0 * Z, R0, 0.0)
    assert abs(res.price - Z * relative_price(c, 200.0, 0.0)) < 3 * res.std_error


def test_kernel_recovers_discounted_forward():
    r, q, s = C(0.05), C(0.02), C(0.25, kind="volatility")
    val = kernel_value(lambda z: z, 100.0, 0.0, 2.0, r, q, s)
    assert val == pytest.approx(100.0 * math.exp(-0.04), rel=1e-10)


def test_induction_first_order():
    spec = BinarySpec("bond", "+", (100.0,), (1.0,), C(0.05), C(0.0), C(0.2, kind="volatility"))
    assert induction_value(spec, 100.0, 0.0) == pytest.approx(math.exp(-0.05) * Phi(0.15), rel=1e-10)


def test_tensor_mvn_independent_case():
    assert tensor_mvn_cdf([0.0, 0.5], np.eye(2)) == pytest.approx(0.5 * Phi(0.5), abs=1e-10)
