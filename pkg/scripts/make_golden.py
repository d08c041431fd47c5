"""Regenerate the FD-oracle golden spread curve used by the regression test.

    python scripts/make_golden.py [--mode endogenous] [--out PATH]
"""

import argparse
import math

from hobinary.bond_pricer import CurveRow, PricedCurve, base_contract, default_t_grid
from hobinary.oracles.fd import FdGrid, fd_solve_cascade

X, R, POINTS = 200.0, 0.098, 100


def golden_curve(mode: str = "endogenous", grid: FdGrid = FdGrid()) -> PricedCurve:
    contract = base_contract(mode)
    ts = default_t_grid(contract, POINTS).tolist()
    surface = fd_solve_cascade(contract, grid=grid, center_x=X, save_times=ts)
    rows = []
    for t in ts:
        u = float(surface.value(X, t))
        Z = contract.zcb(R, t)
        rows.append(CurveRow(t, Z * u, -math.log(u) / (contract.maturity - t), contract.interval_index(t)))
    return PricedCurve(tuple(rows))


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out", help="default tests/golden/spread_curve_fd_<mode>.csv")
    parser.add_argument("--mode", default="endogenous", choices=("exogenous", "endogenous"))
    args = parser.parse_args()
    out = args.out or f"tests/golden/spread_curve_fd_{args.mode}.csv"
    golden_curve(args.mode).write_csv(out)
    print(out)


if __name__ == "__main__":
    main()
