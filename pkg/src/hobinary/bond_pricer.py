"""Defaultable bonds with discrete default information.

Two factors drive the model: a Vasicek short rate and the firm value.
Default is *expected* when the firm value sits at or below ``K_i Z`` on an
announcing date ``t_i`` and *unexpected* at the first jump of a Poisson
clock whose intensity is ``lambda_i`` on ``[t_i, t_{i+1})``.

After the change of numeraire ``x = V / Z`` the relative price ``u = C / Z``
solves a one-factor problem with zero rate, dividend ``b`` and volatility
``S_X(t)``, and is a portfolio of higher-order binaries.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .binary_engine import _price, integral_of_binary
from .errors import ArgumentError, ExpiryError, NumericError
from .mvn import DEFAULT_SEED, DEFAULT_TOL
from .short_rate import FirmParams, VasicekParams, effective_vol_curve, zcb_price
from .term_structure import CoefficientCurve

ZERO = CoefficientCurve.constant(0.0)


@dataclass(frozen=True)
class Exogenous:
    """Recovery ``R_e Z`` on expected and ``R_u Z`` on unexpected default."""

    R_e: float = 0.5
    R_u: float = 0.5

    def __post_init__(self):
        for name in ("R_e", "R_u"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ArgumentError(f"{name} must lie in [0, 1]")

    @property
    def weight(self) -> float:
        """``(R_e - R_u) / (1 - R_u)``, the default payout of the survival problem."""
        if self.R_e == self.R_u:
            return 0.0
        if self.R_u == 1.0:
            raise NumericError("R_u = 1 with R_e != R_u makes (R_e - R_u)/(1 - R_u) infinite")
        return (self.R_e - self.R_u) / (1.0 - self.R_u)


@dataclass(frozen=True)
class Endogenous:
    """Recovery ``R_e alpha V`` on expected, ``min(Z, R_u alpha V)`` on unexpected default."""

    R_e: float = 0.5
    R_u: float = 0.5
    alpha: float = 1.0 / 150.0

    def __post_init__(self):
        for name in ("R_e", "R_u"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ArgumentError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ArgumentError("alpha must lie in (0, 1)")

    @property
    def cap_strike(self) -> float:
        """Level of ``x`` above which the unexpected recovery is capped at ``Z``."""
        return math.inf if self.R_u == 0.0 else 1.0 / (self.R_u * self.alpha)


Recovery = Union[Exogenous, Endogenous]


@dataclass(frozen=True)
class BondContract:
    """Zero-coupon defaultable bond with face value 1.

    ``announce_dates`` is ``(t_0, t_1, ..., t_N)`` with ``t_N`` the maturity;
    ``intensities[i]`` applies on ``[t_i, t_{i+1})`` and ``barriers[i]`` is
    the barrier ``K_{i+1}`` checked at ``t_{i+1}``.
    """

    announce_dates: tuple[float, ...] = (0.0, 3.0, 6.0)
    intensities: tuple[float, ...] = (0.1, 0.3)
    barriers: tuple[float, ...] = (100.0, 100.0)
    recovery: Recovery = Endogenous()
    firm: FirmParams = FirmParams()
    rate_model: VasicekParams = VasicekParams()

    def __post_init__(self):
        dates = tuple(float(d) for d in self.announce_dates)
        object.__setattr__(self, "announce_dates", dates)
        object.__setattr__(self, "intensities", tuple(float(v) for v in self.intensities))
        object.__setattr__(self, "barriers", tuple(float(v) for v in self.barriers))
        n = len(dates) - 1
        if n < 1:
            raise ArgumentError("need at least one announcing date after t_0")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ArgumentError("announcing dates must be strictly ascending")
        if len(self.intensities) != n or len(self.barriers) != n:
            raise ArgumentError(f"need {n} intensities and {n} barriers")
        if any(v < 0 for v in self.intensities):
            raise ArgumentError("default intensities must be >= 0")
        if any(k < 0 for k in self.barriers):
            raise ArgumentError("barriers must be >= 0 (0 disables the barrier)")
        if isinstance(self.recovery, Exogenous):
            self.recovery.weight  # raises on R_u = 1 != R_e

    @property
    def maturity(self) -> float:
        return self.announce_dates[-1]

    @property
    def n_intervals(self) -> int:
        return len(self.announce_dates) - 1

    def interval_index(self, t: float) -> int:
        """``i`` with ``t_i <= t < t_{i+1}``."""
        if t >= self.maturity:
            raise ExpiryError(f"valuation time {t} is at or after maturity {self.maturity}")
        if t < self.announce_dates[0]:
            raise ArgumentError(f"valuation time {t} precedes t_0 = {self.announce_dates[0]}")
        return int(np.searchsorted(self.announce_dates, t, side="right")) - 1

    def zcb(self, r: float, t: float) -> float:
        return zcb_price(self.rate_model, r, t, self.maturity)


@dataclass(frozen=True)
class PricerSettings:
    """Numerical knobs of the closed-form pricers."""

    quad_nodes: int = 64
    vol_steps_per_year: int = 250
    mvn_tol: float = DEFAULT_TOL
    seed: int | None = DEFAULT_SEED


DEFAULT_SETTINGS = PricerSettings()


@dataclass(frozen=True)
class BondQuote:
    price: float
    relative: float
    survival: float | None
    spread: float
    interval: int
    zcb: float
    x: float


@lru_cache(maxsize=64)
def _vol_curve(rate_model, firm, dates: tuple, steps: int) -> CoefficientCurve:
    return effective_vol_curve(rate_model, firm, dates[-1], steps, start=dates[0], knots=dates[1:-1])


def transformed_coefficients(contract: BondContract, settings: PricerSettings = DEFAULT_SETTINGS):
    """Coefficient triple ``(0, b, S_X)`` of the one-factor problem."""
    sig = _vol_curve(
        contract.rate_model, contract.firm, contract.announce_dates, settings.vol_steps_per_year
    )
    return ZERO, CoefficientCurve.constant(contract.firm.b), sig


def _intensity_sum(contract: BondContract, first: int, last: int) -> float:
    """``sum_{k=first}^{last} lambda_k (t_{k+1} - t_k)``; empty sums are 0."""
    dates, lam = contract.announce_dates, contract.intensities
    return sum(lam[k] * (dates[k + 1] - dates[k]) for k in range(first, last + 1))


def survival_exogenous(
    contract: BondContract, x: float, t: float, settings: PricerSettings = DEFAULT_SETTINGS
) -> float:
    """``W_i(x, t)``: survival probability plus the weighted expected-default payout."""
    i = contract.interval_index(t)
    if not x > 0:
        raise ArgumentError("x must be positive")
    r0, q, sig = transformed_coefficients(contract, settings)
    dates, lam, K = contract.announce_dates, contract.intensities, contract.barriers
    N = contract.n_intervals
    w = contract.recovery.weight
    tol, seed = settings.mvn_tol, settings.seed

    def bond(signs, strikes, expiries):
        return _price("bond", signs, strikes, expiries, r0, q, sig, x, t, tol, seed).value

    total = math.exp(-_intensity_sum(contract, i + 1, N - 1)) * bond(
        (1,) * (N - i), K[i:], dates[i + 1 :]
    )
    if w != 0.0:
        for m in range(i, N):
            fac = math.exp(-_intensity_sum(contract, i + 1, m))
            n_slots = m - i + 1
            signs = (1,) * (n_slots - 1) + (-1,)
            total += w * fac * bond(signs, K[i : m + 1], dates[i + 1 : m + 2])
    return math.exp(-lam[i] * (dates[i + 1] - t)) * total


def relative_price_endogenous(
    contract: BondContract, x: float, t: float, settings: PricerSettings = DEFAULT_SETTINGS
) -> float:
    """``u_i(x, t) = C / Z`` under endogenous recovery."""
    i = contract.interval_index(t)
    if not x > 0:
        raise ArgumentError("x must be positive")
    rec = contract.recovery
    r0, q, sig = transformed_coefficients(contract, settings)
    dates, lam, K = contract.announce_dates, contract.intensities, contract.barriers
    N = contract.n_intervals
    tol, seed, nodes = settings.mvn_tol, settings.seed, settings.quad_nodes
    cap = rec.cap_strike
    ua = rec.R_u * rec.alpha

    def binary(kind, signs, strikes, expiries):
        return _price(kind, signs, strikes, expiries, r0, q, sig, x, t, tol, seed).value

    def capped_recovery_integral(head_K, head_T, lam_m, lo, hi):
        # int lam e^{-lam (tau - lo)} [B^{..+}_{cap} + R_u alpha A^{..-}_{cap}] dtau
        if lam_m == 0.0 or rec.R_u == 0.0:
            return 0.0
        k = len(head_K)

        def g(tau):
            return lam_m * math.exp(-lam_m * (tau - lo))

        common = dict(weight=g, interval=(lo, hi), r=r0, q=q, sigma=sig, x=x, t=t,
                      nodes=nodes, tol=tol, seed=seed)
        bond_part = integral_of_binary("bond", (1,) * k, head_K, head_T, 1, cap, **common)
        asset_part = integral_of_binary("asset", (1,) * k, head_K, head_T, -1, cap, **common)
        return bond_part + ua * asset_part

    inner = math.exp(-_intensity_sum(contract, i + 1, N - 1)) * binary(
        "bond", (1,) * (N - i), K[i:], dates[i + 1 :]
    )
    if rec.R_e != 0.0:
        for m in range(i, N):
            fac = math.exp(-_intensity_sum(contract, i + 1, m))
            n_slots = m - i + 1
            signs = (1,) * (n_slots - 1) + (-1,)
            inner += rec.R_e * rec.alpha * fac * binary("asset", signs, K[i : m + 1], dates[i + 1 : m + 2])
    for m in range(i + 1, N):
        fac = math.exp(-_intensity_sum(contract, i + 1, m - 1))
        inner += fac * capped_recovery_integral(K[i:m], dates[i + 1 : m + 1], lam[m], dates[m], dates[m + 1])
    current = capped_recovery_integral((), (), lam[i], t, dates[i + 1])
    return math.exp(-lam[i] * (dates[i + 1] - t)) * inner + current


def _quote(contract, u, W, i, Z, x, t) -> BondQuote:
    if not u > 0:
        raise NumericError(f"non-positive relative price {u}")
    spread = -math.log(u) / (contract.maturity - t)
    return BondQuote(Z * u, u, W, spread, i, Z, x)


def price_exogenous(
    contract: BondContract, V: float, r: float, t: float, settings: PricerSettings = DEFAULT_SETTINGS
) -> BondQuote:
    """Bond price under exogenous recovery: ``C = W Z + (1 - W) R_u Z``."""
    if not isinstance(contract.recovery, Exogenous):
        raise ArgumentError("contract recovery is not exogenous")
    i = contract.interval_index(t)
    Z = contract.zcb(r, t)
    x = V / Z
    W = survival_exogenous(contract, x, t, settings)
    R_u = contract.recovery.R_u
    u = W + (1.0 - W) * R_u
    return _quote(contract, u, W, i, Z, x, t)


def price_endogenous(
    contract: BondContract, V: float, r: float, t: float, settings: PricerSettings = DEFAULT_SETTINGS
) -> BondQuote:
    """Bond price under endogenous recovery: ``C = Z u_i(V / Z, t)``."""
    if not isinstance(contract.recovery, Endogenous):
        raise ArgumentError("contract recovery is not endogenous")
    i = contract.interval_index(t)
    Z = contract.zcb(r, t)
    x = V / Z
    u = relative_price_endogenous(contract, x, t, settings)
    return _quote(contract, u, None, i, Z, x, t)


def price_bond(
    contract: BondContract, V: float, r: float, t: float, settings: PricerSettings = DEFAULT_SETTINGS
) -> BondQuote:
    if isinstance(contract.recovery, Exogenous):
        return price_exogenous(contract, V, r, t, settings)
    return price_endogenous(contract, V, r, t, settings)


def relative_price(
    contract: BondContract, x: float, t: float, settings: PricerSettings = DEFAULT_SETTINGS
) -> float:
    """``u = C / Z`` as a function of the numeraire-scaled firm value ``x``."""
    if isinstance(contract.recovery, Exogenous):
        W = survival_exogenous(contract, x, t, settings)
        return W + (1.0 - W) * contract.recovery.R_u
    return relative_price_endogenous(contract, x, t, settings)


def credit_spread(
    contract: BondContract, V: float, r: float, t: float, settings: PricerSettings = DEFAULT_SETTINGS
) -> float:
    """``-ln(C / Z) / (T - t)``."""
    return price_bond(contract, V, r, t, settings).spread


@dataclass(frozen=True)
class CurveRow:
    t: float
    price: float
    spread: float
    interval: int


@dataclass(frozen=True)
class PricedCurve:
    rows: tuple[CurveRow, ...] = field(default_factory=tuple)

    HEADER = ("t", "price", "spread", "interval")

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.HEADER)
        for row in self.rows:
            writer.writerow((f"{row.t:.17g}", f"{row.price:.17g}", f"{row.spread:.17g}", row.interval))
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _curve_row(args) -> CurveRow:
    contract, t, x, r, settings = args
    Z = contract.zcb(r, t)
    u = relative_price(contract, x, t, settings)
    quote = _quote(contract, u, None, contract.interval_index(t), Z, x, t)
    return CurveRow(float(t), quote.price, quote.spread, quote.interval)


def spread_curve(
    contract: BondContract,
    t_grid: Iterable[float],
    x: float = 200.0,
    r: float = 0.098,
    settings: PricerSettings = DEFAULT_SETTINGS,
    workers: int = 1,
) -> PricedCurve:
    """Credit-spread term structure at fixed ``x = V/Z`` over a time grid.

    The spread depends on ``(x, t)`` only; ``r`` sets the price column
    through ``Z(r, t; T)``.
    """
    jobs = [(contract, float(t), x, r, settings) for t in t_grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_curve_row, jobs))
    else:
        rows = [_curve_row(job) for job in jobs]
    return PricedCurve(tuple(rows))


def default_t_grid(contract: BondContract, points: int) -> np.ndarray:
    """``points`` equally spaced times on ``[t_0, T)``."""
    if points <= 0:
        return np.array([])
    return np.linspace(contract.announce_dates[0], contract.maturity, points, endpoint=False)


def base_contract(recovery: str | Recovery = "endogenous", **overrides) -> BondContract:
    """Two announcing dates (3y, 6y) with the base parameter set of the credit-spread study.

    ``recovery`` is ``"endogenous"``, ``"exogenous"`` or a recovery object.
    """
    if isinstance(recovery, (Exogenous, Endogenous)):
        rec = recovery
    elif recovery == "endogenous":
        rec = Endogenous()
    elif recovery == "exogenous":
        rec = Exogenous()
    else:
        raise ArgumentError(f"unknown recovery {recovery!r}")
    return replace(BondContract(recovery=rec), **overrides)
