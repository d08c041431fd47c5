import csv
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hobinary.bond_pricer import (
    BondContract,
    Endogenous,
    Exogenous,
    PricedCurve,
    PricerSettings,
    base_contract,
    credit_spread,
    default_t_grid,
    price_bond,
    price_endogenous,
    price_exogenous,
    relative_price,
    spread_curve,
    survival_exogenous,
)
from hobinary.errors import ArgumentError, ExpiryError, NumericError
from hobinary.oracles.verify import run_verification

GOLDEN = Path(__file__).parent / "golden"
R0 = 0.098


def riskless(mode):
    return replace(base_contract(mode), intensities=(0.0, 0.0), barriers=(0.0, 0.0))


@pytest.mark.parametrize("mode", ["exogenous", "endogenous"])
@pytest.mark.parametrize("t", [0.0, 2.5, 4.0])
def test_no_default_channel_gives_riskless_bond(mode, t):
    c = riskless(mode)
    Z = c.zcb(R0, t)
    q = price_bond(c, 150.0 * Z, R0, t)
    assert abs(q.price - Z) < 1e-9
    assert q.spread == pytest.approx(0.0, abs=1e-12)


def test_base_endogenous_reference():
    # frozen from the closed form; matches the FD cascade extrapolation 0.24882466
    assert relative_price(base_contract(), 200.0, 0.0) == pytest.approx(0.24882471523861657, rel=1e-9)


def test_base_exogenous_reference():
    assert relative_price(base_contract("exogenous"), 200.0, 0.0) == pytest.approx(0.514125449789142, rel=1e-9)


def test_common_recovery_restatement():
    c = base_contract("exogenous")
    Z = c.zcb(R0, 1.0)
    q = price_exogenous(c, 210.0 * Z, R0, 1.0)
    assert q.price == pytest.approx(0.5 * Z + 0.5 * q.survival * Z, rel=1e-14)
    assert 0.0 <= q.survival <= 1.0


@given(st.floats(20.0, 2000.0), st.floats(1.0, 1.5), st.floats(0.0, 5.9), st.sampled_from([0.2, 0.5, 0.9]))
def test_survival_bounded_and_increasing(x, factor, t, R):
    c = replace(base_contract("exogenous"), recovery=Exogenous(R, R))
    w1 = survival_exogenous(c, x, t)
    w2 = survival_exogenous(c, x * factor, t)
    assert 0.0 <= w1 <= 1.0
    assert w2 >= w1 - 1e-12


@st.composite
def contracts(draw):
    lam = tuple(draw(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2)))
    K = tuple(draw(st.lists(st.floats(0.0, 250.0), min_size=2, max_size=2)))
    Re, Ru = draw(st.floats(0.0, 1.0)), draw(st.floats(0.0, 0.99))
    if draw(st.booleans()):
        rec = Exogenous(Re, Ru)
    else:
        rec = Endogenous(Re, Ru, draw(st.floats(0.001, 0.05)))
    rho = draw(st.floats(-0.9, 0.9))
    sv = draw(st.floats(0.2, 1.5))
    c = base_contract(intensities=lam, barriers=K, recovery=rec)
    return replace(c, firm=replace(c.firm, rho=rho, s_V=sv))


@given(contracts(), st.floats(30.0, 600.0), st.floats(0.0, 5.9))
def test_price_bounds(contract, x, t):
    Z = contract.zcb(R0, t)
    q = price_bond(contract, x * Z, R0, t, PricerSettings(quad_nodes=32))
    assert -1e-12 <= q.price <= Z * (1 + 1e-10)


def test_capped_recovery_limit():
    c = replace(base_contract(), intensities=(4.0, 4.0), barriers=(1.0, 1.0))
    # R_u alpha x >> 1: unexpected default pays Z, expected default cannot happen
    assert relative_price(c, 1e6, 0.0) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("mode", ["exogenous", "endogenous"])
@pytest.mark.parametrize("x", [60.0, 250.0])
def test_stitching_at_announcing_date(mode, x):
    c = base_contract(mode)
    t1, eps = c.announce_dates[1], 1e-7
    left = relative_price(c, x, t1 - eps)
    if x > c.barriers[0]:
        right = relative_price(c, x, t1)
    else:
        right = c.recovery.R_e if mode == "exogenous" else c.recovery.R_e * c.recovery.alpha * x
    assert left == pytest.approx(right, abs=1e-5)


@pytest.mark.parametrize("mode", ["exogenous", "endogenous"])
def test_continuity_inside_intervals(mode):
    c = base_contract(mode)
    for t in (0.5, 2.0, 4.5):
        a, b = relative_price(c, 200.0, t), relative_price(c, 200.0, t + 1e-6)
        assert abs(a - b) < 1e-5


def test_invalid_contracts():
    with pytest.raises(NumericError):
        base_contract(recovery=Exogenous(0.5, 1.0))
    with pytest.raises(ArgumentError):
        Endogenous(alpha=1.0)
    with pytest.raises(ArgumentError):
        Exogenous(R_e=1.2)
    with pytest.raises(ArgumentError):
        BondContract(announce_dates=(0.0, 3.0, 2.0))
    with pytest.raises(ArgumentError):
        BondContract(intensities=(0.1,))
    with pytest.raises(ArgumentError):
        base_contract(intensities=(0.1, -0.2))


def test_expired_and_mode_mismatch():
    c = base_contract()
    with pytest.raises(ExpiryError):
        price_bond(c, 100.0, R0, 6.0)
    with pytest.raises(ArgumentError):
        price_exogenous(c, 100.0, R0, 0.0)
    with pytest.raises(ArgumentError):
        price_endogenous(base_contract("exogenous"), 100.0, R0, 0.0)


def test_interval_index_tie_break():
    c = base_contract()
    assert c.interval_index(0.0) == 0
    assert c.interval_index(2.999) == 0
    assert c.interval_index(3.0) == 1


def test_barrier_point_defaults():
    # with b = 0 and the variance to t_1 below the floor, x = K_1 sits exactly on the
    # barrier; the strict indicator 1{x > K} sends it to default
    c = base_contract("exogenous")
    c = replace(c, firm=replace(c.firm, b=0.0))
    assert relative_price(c, 100.0, 3.0 - 1e-15) == pytest.approx(0.5, abs=1e-12)
    assert relative_price(c, 100.0 * (1 + 1e-9), 3.0 - 1e-15) > 0.5


def test_spread_definition():
    c = base_contract()
    q = price_bond(c, 200.0 * c.zcb(R0, 1.0), R0, 1.0)
    assert q.spread == pytest.approx(-math.log(q.price / q.zcb) / 5.0, rel=1e-14)
    assert credit_spread(c, 200.0 * c.zcb(R0, 1.0), R0, 1.0) == q.spread


def test_spread_curve_singleton_and_empty():
    c = base_contract()
    one = spread_curve(c, [1.5], x=200.0, r=R0)
    assert len(one) == 1
    V = 200.0 * c.zcb(R0, 1.5)
    assert one.rows[0].spread == pytest.approx(credit_spread(c, V, R0, 1.5), rel=1e-13)
    empty = spread_curve(c, [])
    assert len(empty) == 0
    assert empty.to_csv() == "t,price,spread,interval\n"


def test_spread_curve_parallel_matches_serial():
    c = base_contract()
    ts = [0.0, 2.0, 3.0, 5.5]
    assert spread_curve(c, ts, workers=2).to_csv() == spread_curve(c, ts).to_csv()


def test_curve_csv_format():
    curve = spread_curve(base_contract(), [0.25], x=200.0)
    header, row = curve.to_csv().strip().split("\n")
    assert header == "t,price,spread,interval"
    fields = row.split(",")
    assert float(fields[1]) == curve.rows[0].price
    assert fields[3] == "0"


def test_default_grid():
    g = default_t_grid(base_contract(), 4)
    assert g.tolist() == [0.0, 1.5, 3.0, 4.5]
    assert len(default_t_grid(base_contract(), 0)) == 0


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("mode, tol", [("exogenous", 2e-3), ("endogenous", 3e-3)])
def test_golden_fd_curve(mode, tol):
    rows = _read(GOLDEN / f"spread_curve_fd_{mode}.csv")
    c = base_contract(mode)
    curve = spread_curve(c, [float(r["t"]) for r in rows], x=200.0, r=R0)
    for ref, row in zip(rows, curve.rows):
        assert row.interval == int(ref["interval"])
        assert row.price == pytest.approx(float(ref["price"]), rel=tol)
        # spread error scaled by the remaining life is a relative price error
        assert abs(row.spread - float(ref["spread"])) * (c.maturity - row.t) < tol


@pytest.mark.parametrize("mode, tol", [("exogenous", 2e-3), ("endogenous", 3e-3)])
def test_lattice_against_fd(mode, tol):
    report = run_verification(base_contract(mode), mc_config=None, lattice=5, fd_rel_tol=tol)
    assert len(report.rows) == 25
    assert report.passed, report.worst
