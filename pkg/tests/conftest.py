import numpy as np
import pytest

from bcn_duality import Couplings, PhasePointR, PhasePointS


@pytest.fixture
def c3():
    """Generic three-coupling configuration (kappa > 0, nu != kappa)."""
    return Couplings(mu=-1.0, nu=1.2, kappa=0.7)


@pytest.fixture
def c_k0():
    """Degenerate kappa = 0 configuration (h = identity)."""
    return Couplings(mu=-1.0, nu=2.0, kappa=0.0)


def random_chamber(rng, n, gap_lo=0.4, gap_hi=1.2, floor=0.5):
    gaps = rng.uniform(gap_lo, gap_hi, n)
    return (floor + np.cumsum(gaps))[::-1].copy()


def random_point_S(rng, n):
    return PhasePointS(q=random_chamber(rng, n), p=rng.uniform(-1.5, 1.5, n))


def random_point_R(rng, n):
    return PhasePointR(lam=random_chamber(rng, n), theta=rng.uniform(-1.5, 1.5, n))


def random_couplings(rng):
    mu = rng.uniform(-1.5, -0.6)
    nu = rng.uniform(0.6, 1.5)
    kappa = float(rng.choice([0.0, rng.uniform(0.3, 1.0), nu]))
    return Couplings(mu=mu, nu=nu, kappa=kappa)
