"""Convergence of the numerical ingredients on the base contract at x = 200, t = 0.

    python scripts/convergence_study.py [--mode endogenous] [--mc]

Prints CSV sections to stdout:

* ``quad``: closed-form price against Gauss-Legendre nodes per panel;
* ``vol``: price against the S_X projection resolution (steps per year);
* ``fd``: FD oracle against grid refinement, with the observed order;
* ``mc`` (with ``--mc``): Monte-Carlo estimate and SE against path count.
"""

import argparse
import math
import sys

from hobinary.bond_pricer import PricerSettings, base_contract, price_bond
from hobinary.oracles.fd import FdGrid, fd_solve_cascade
from hobinary.oracles.mc import McConfig, mc_price

X, R = 200.0, 0.098


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--mode", default="endogenous", choices=("exogenous", "endogenous"))
    parser.add_argument("--mc", action="store_true", help="include the Monte-Carlo section")
    args = parser.parse_args(argv)
    c = base_contract(args.mode)
    Z = c.zcb(R, 0.0)
    ref = price_bond(c, X * Z, R, 0.0).price
    out = sys.stdout

    out.write("section,parameter,price,diff_vs_default\n")
    for nodes in (8, 16, 32, 64, 128):
        p = price_bond(c, X * Z, R, 0.0, PricerSettings(quad_nodes=nodes)).price
        out.write(f"quad,{nodes},{p:.15g},{p - ref:.3e}\n")
    for steps in (25, 50, 125, 250, 500):
        p = price_bond(c, X * Z, R, 0.0, PricerSettings(vol_steps_per_year=steps)).price
        out.write(f"vol,{steps},{p:.15g},{p - ref:.3e}\n")

    base = FdGrid(nodes=201, steps_per_year=250) if args.mode == "exogenous" else FdGrid(nodes=801)
    vals = []
    for f in (1, 2, 4, 8):
        grid = base.refined(f)
        vals.append(Z * fd_solve_cascade(c, grid=grid, center_x=X).value(X, 0.0))
        out.write(f"fd,{grid.nodes}x{grid.steps_per_year},{vals[-1]:.15g},{vals[-1] - ref:.3e}\n")
    for a, b, cc in zip(vals, vals[1:], vals[2:]):
        out.write(f"fd_order,,{math.log2(abs(a - b) / abs(b - cc)):.3f},\n")

    if args.mc:
        for paths in (10_000, 40_000, 160_000):
            res = mc_price(c, McConfig(paths=paths), X * Z, R, 0.0)
            out.write(f"mc,{paths},{res.price:.15g},{(res.price - ref) / res.std_error:.2f}SE\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
