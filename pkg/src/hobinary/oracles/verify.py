"""Closed form against the FD and Monte-Carlo oracles, as a tabular report."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..bond_pricer import DEFAULT_SETTINGS, BondContract, PricerSettings, relative_price
from .fd import FdGrid, fd_solve_cascade
from .mc import McConfig, mc_price


@dataclass(frozen=True)
class ReportRow:
    check: str
    x: float
    t: float
    closed: float
    oracle: float
    abs_error: float
    rel_error: float
    tolerance: float
    passed: bool

    @property
    def excess(self) -> float:
        """Error measured in units of the tolerance; > 1 means a breach."""
        err = self.abs_error if self.check == "mc" else self.rel_error
        return err / self.tolerance if self.tolerance > 0 else math.inf * (err > 0)


@dataclass(frozen=True)
class VerifyReport:
    rows: tuple[ReportRow, ...] = field(default_factory=tuple)

    HEADER = ("check", "x", "t", "closed", "oracle", "abs_error", "rel_error", "tolerance", "pass")

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def worst(self) -> ReportRow | None:
        return max(self.rows, key=lambda row: row.excess, default=None)

    def max_error(self, check: str = "fd") -> float:
        errs = [row.rel_error for row in self.rows if row.check == check]
        return max(errs, default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.HEADER)
        for row in self.rows:
            writer.writerow(
                (row.check, *(f"{v:.17g}" for v in (row.x, row.t, row.closed, row.oracle,
                                                    row.abs_error, row.rel_error, row.tolerance)),
                 "yes" if row.passed else "no")
            )
        return buf.getvalue()


def lattice_points(contract: BondContract, x: float, t: float, size: int):
    """``size`` spots around ``x`` (factors 0.5 to 2, log-spaced) times ``size`` dates in ``[t, T)``."""
    if size == 1:
        return [x], [t]
    spots = x * np.exp(np.linspace(math.log(0.5), math.log(2.0), size))
    times = t + (contract.maturity - t) * np.arange(size) / size
    return spots.tolist(), times.tolist()


def _row(check, x, t, closed, oracle, tolerance, measure="rel"):
    abs_err = float(abs(closed - oracle))
    rel_err = abs_err / abs(float(oracle)) if oracle != 0 else (0.0 if abs_err == 0 else math.inf)
    err = abs_err if measure == "abs" else rel_err
    return ReportRow(check, float(x), float(t), float(closed), float(oracle), abs_err, rel_err,
                     float(tolerance), bool(err <= tolerance))


def run_verification(
    contract: BondContract,
    x: float = 200.0,
    r: float = 0.098,
    t: float = 0.0,
    settings: PricerSettings = DEFAULT_SETTINGS,
    fd_grid: FdGrid = FdGrid(),
    mc_config: McConfig | None = McConfig(),
    lattice: int = 5,
    fd_rel_tol: float = 3e-3,
    mc_sigmas: float = 3.0,
) -> VerifyReport:
    """FD rows compare ``u = C/Z`` by relative error; the MC row compares ``C`` within ``mc_sigmas`` SE."""
    spots, times = lattice_points(contract, x, t, lattice)
    surface = fd_solve_cascade(contract, grid=fd_grid, center_x=x, save_times=times)
    rows = []
    for tk in times:
        fd_vals = surface.value(np.asarray(spots), tk)
        for xk, fd_u in zip(spots, np.atleast_1d(fd_vals)):
            rows.append(_row("fd", xk, tk, relative_price(contract, xk, tk, settings), fd_u, fd_rel_tol))
    if mc_config is not None:
        Z = contract.zcb(r, t)
        closed = Z * relative_price(contract, x, t, settings)
        mc = mc_price(contract, mc_config, x * Z, r, t)
        rows.append(_row("mc", x, t, closed, mc.price, mc_sigmas * mc.std_error, measure="abs"))
    return VerifyReport(tuple(rows))
