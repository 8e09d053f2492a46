import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mechent.params import REF_KAPPA, ReducedParams  # noqa: E402

KAPPA = REF_KAPPA


def sym_point(**kw):
    """Symmetric reduced point; defaults are the standard operating point."""
    base = dict(cooperativity=62.5, gain_ratio=0.26, pump_phase=0.0,
                squeezing=1.0, squeezing_phase=0.0, occupancy=0.5)
    base.update(kw)
    return ReducedParams.symmetric(**base)


def random_reduced(rng, symmetric=False, max_gain=0.45):
    """A random reduced point well inside the stable region."""
    kappa = KAPPA * rng.uniform(0.5, 2.0)
    if symmetric:
        k1 = k2 = kappa
        g1 = g2 = kappa * rng.uniform(1e-4, 1e-2)
        c1 = c2 = kappa * rng.uniform(0.01, 0.15)
    else:
        k1, k2 = kappa * rng.uniform(0.5, 1.5, 2)
        g1, g2 = kappa * rng.uniform(1e-4, 1e-2, 2)
        c1, c2 = kappa * rng.uniform(0.01, 0.15, 2)
    return ReducedParams(
        kappa1=k1, kappa2=k2, gamma1=g1, gamma2=g2, coupling1=c1, coupling2=c2,
        gain=rng.uniform(0.0, max_gain) * math.sqrt(k1 * k2),
        pump_phase=rng.uniform(0, 2 * math.pi), squeezing=rng.uniform(0, 2),
        squeezing_phase=rng.uniform(0, 2 * math.pi),
        n1=rng.uniform(0, 5), n2=rng.uniform(0, 5),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def point():
    return sym_point()
