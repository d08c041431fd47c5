"""Two-factor Monte-Carlo oracle in the original (V, r) coordinates.

Paths are simulated under the risk-neutral measure:

* the Vasicek rate, its time integral and the driving Brownian increment
  are sampled exactly and jointly per step;
* ``ln V`` moves with drift ``int r - (b + s_V^2/2) h`` and loading
  ``rho dW1 + sqrt(1 - rho^2) dW_perp``;
* the unexpected default time is drawn by inverting the piecewise-linear
  cumulative intensity, then snapped to the next grid time;
* expected default is checked as ``V(t_i) <= K_i Z(r(t_i), t_i; T)``.

No change of numeraire is used, so the oracle is independent of the
pricing formulas.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..bond_pricer import BondContract, Exogenous
from ..errors import ConfigError


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    dt: float = 1.0 / 500.0
    seed: int = 12345
    antithetic: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.paths < 1000:
            raise ConfigError("Monte-Carlo needs at least 1000 paths")
        if not self.dt > 0:
            raise ConfigError("time step must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.antithetic and self.paths % 2:
            raise ConfigError("antithetic sampling needs an even path count")


@dataclass(frozen=True)
class McResult:
    price: float
    std_error: float
    paths: int


def _step_loadings(model, h: float, sv2: float, rho: float) -> np.ndarray:
    """Matrix M with (X1, X2, X3, Y) = M @ N(0, I_4).

    X1 = int e^{-a(h-u)} dW1, X2 = int B(u, h) dW1, X3 = int dW1 and
    Y = int s_V dW2 over one step.
    """
    a = model.a2
    Bh = model.affine_B(0.0, h)
    ib = model.int_B(0.0, h)
    ib2 = model.int_B2(0.0, h)
    if a < 1e-6:
        v11 = h - a * h * h
        v12 = h * h / 2.0 - a * h**3 / 2.0
    else:
        v11 = -math.expm1(-2.0 * a * h) / (2.0 * a)
        v12 = (Bh - v11) / a
    sv = math.sqrt(sv2)
    cov = np.array(
        [
            [v11, v12, Bh, rho * sv * Bh],
            [v12, ib2, ib, rho * sv * ib],
            [Bh, ib, h, rho * sv * h],
            [rho * sv * Bh, rho * sv * ib, rho * sv * h, sv2 * h],
        ]
    )
    w, vecs = np.linalg.eigh(cov)
    return vecs * np.sqrt(np.clip(w, 0.0, None))


def _grid(contract: BondContract, t: float, dt: float) -> tuple[np.ndarray, set]:
    dates = [d for d in contract.announce_dates if d > t]
    cuts = sorted({t, *dates, *[b for b in contract.firm.s_V.breakpoints if t < b < contract.maturity]})
    times = [cuts[0]]
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        times.extend(np.linspace(a, b, n + 1)[1:].tolist())
        times[-1] = b
    return np.asarray(times), set(dates)


def _default_times(contract: BondContract, t: float, E: np.ndarray) -> np.ndarray:
    """Invert the cumulative intensity from ``t`` at exponential levels ``E``."""
    dates = contract.announce_dates
    nodes = [t] + [d for d in dates if d > t]
    lam = contract.intensities
    cum = [0.0]
    for a, b in zip(nodes[:-1], nodes[1:]):
        i = contract.interval_index(a)
        cum.append(cum[-1] + lam[i] * (b - a))
    cum = np.asarray(cum)
    tau = np.full(E.shape, np.inf)
    inside = E < cum[-1]
    if np.any(inside):
        # strictly increasing copy: flat (zero-intensity) pieces are never hit
        eps = 1e-300
        xp = cum + eps * np.arange(len(cum))
        tau[inside] = np.interp(E[inside], xp, np.asarray(nodes))
    return tau


def _simulate(contract: BondContract, config: McConfig, V: float, r: float, t: float,
              n: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    model, firm = contract.rate_model, contract.firm
    T = contract.maturity
    rec = contract.recovery
    exogenous = isinstance(rec, Exogenous)
    times, announce = _grid(contract, t, config.dt)
    barrier_at = {contract.announce_dates[j + 1]: contract.barriers[j] for j in range(contract.n_intervals)}
    half = n // 2 if config.antithetic else n

    def draw(shape):
        z = rng.standard_normal(shape)
        return np.concatenate([z, -z], axis=-1) if config.antithetic else z

    u = rng.random(half)
    if config.antithetic:
        u = np.concatenate([u, 1.0 - u])
    tau = _default_times(contract, t, -np.log1p(-u))

    rates = np.full(n, float(r))
    logV = np.full(n, math.log(V))
    disc = np.ones(n)
    payoff = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    loadings = lru_cache(maxsize=None)(lambda h, sv2: _step_loadings(model, h, sv2, firm.rho))
    a1, sr, b = model.a1, model.s_r, firm.b
    for s0, s1 in zip(times[:-1], times[1:]):
        h = s1 - s0
        sv2 = firm.s_V.integrate(s0, s1, squared=True) / h
        M = loadings(round(h, 15), round(sv2, 15))
        X = M @ draw((4, half))
        Bh = model.affine_B(0.0, h)
        integral = rates * Bh + a1 * model.int_B(0.0, h) + sr * X[1]
        rates = rates * math.exp(-model.a2 * h) + a1 * Bh + sr * X[0]
        logV += integral - (b + 0.5 * sv2) * h + X[3]
        disc *= np.exp(-integral)

        A_s = model.affine_A(s1, T)
        B_s = model.affine_B(s1, T)
        hit = alive & (tau <= s1)
        if np.any(hit):
            Z = np.exp(A_s - B_s * rates[hit])
            if exogenous:
                value = rec.R_u * Z
            else:
                value = np.minimum(Z, rec.R_u * rec.alpha * np.exp(logV[hit]))
            payoff[hit] = disc[hit] * value
            alive &= ~hit
        if s1 in announce:
            Z = np.exp(A_s - B_s * rates)
            Vs = np.exp(logV)
            breach = alive & (Vs <= barrier_at[s1] * Z)
            if np.any(breach):
                value = rec.R_e * Z[breach] if exogenous else rec.R_e * rec.alpha * Vs[breach]
                payoff[breach] = disc[breach] * value
                alive &= ~breach
    payoff[alive] = disc[alive]
    if config.antithetic:
        payoff = 0.5 * (payoff[:half] + payoff[half:])
    return payoff


def mc_price(contract: BondContract, config: McConfig, V: float, r: float, t: float) -> McResult:
    """Discounted expected payoff with its standard error."""
    contract.interval_index(t)
    shortest = float(np.min(np.diff([t, *[d for d in contract.announce_dates if d > t]])))
    if config.dt > shortest / 10.0:
        raise ConfigError(f"time step {config.dt} exceeds a tenth of the shortest interval {shortest}")
    seeds = np.random.SeedSequence(config.seed).spawn(config.workers)
    per = [config.paths // config.workers] * config.workers
    for k in range(config.paths % config.workers):
        per[k] += 1
    if config.antithetic:
        per = [p + (p % 2) for p in per]
    jobs = [(contract, config, V, r, t, n, s) for n, s in zip(per, seeds)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_simulate_job, jobs))
    else:
        parts = [_simulate_job(job) for job in jobs]
    payoff = np.concatenate(parts)
    return McResult(float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(len(payoff))), sum(per))


def _simulate_job(args):
    return _simulate(*args)
