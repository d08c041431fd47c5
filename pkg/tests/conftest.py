import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hobinary.term_structure import CoefficientCurve

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def step_curves(draw, kind="rate", lo=-0.05, hi=0.15, max_pieces=4, horizon=10.0):
    n = draw(st.integers(0, max_pieces - 1))
    cuts = sorted(draw(st.lists(st.floats(0.1, horizon - 0.1), min_size=n, max_size=n, unique=True)))
    cuts = [c for i, c in enumerate(cuts) if i == 0 or c - cuts[i - 1] > 1e-3]
    values = draw(st.lists(st.floats(lo, hi), min_size=len(cuts) + 1, max_size=len(cuts) + 1))
    return CoefficientCurve(tuple(cuts), tuple(values), kind=kind)


def random_curve(rng, kind="rate", lo=-0.02, hi=0.1, pieces=3, horizon=8.0):
    cuts = np.sort(rng.uniform(0.2, horizon - 0.2, size=pieces - 1))
    values = rng.uniform(lo, hi, size=pieces)
    return CoefficientCurve(tuple(cuts), tuple(values), kind=kind)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def random_spec(rng, m, kind=None, step=True, signs=None):
    """A binary with random strikes, expiries and (optionally stepwise) coefficients."""
    from hobinary.binary_engine import BinarySpec

    kind = kind or ("asset" if rng.random() < 0.5 else "bond")
    gaps = rng.uniform(0.3, 1.5, size=m)
    expiries = tuple(np.cumsum(gaps) + 0.1)
    strikes = tuple(rng.uniform(70.0, 130.0, size=m))
    if signs is None:
        signs = tuple(rng.choice([1, -1], size=m))
    pieces = 3 if step else 1
    r = random_curve(rng, "rate", -0.01, 0.08, pieces)
    q = random_curve(rng, "rate", 0.0, 0.05, pieces)
    sigma = random_curve(rng, "volatility", 0.1, 0.45, pieces)
    return BinarySpec(kind, signs, strikes, expiries, r, q, sigma)
