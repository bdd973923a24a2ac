import numpy as np
import pytest

from bethe.model import ModelSpec
from bethe.solver import SolveConfig, solve_bethe

XI_MINUS = 0.33 + 0.2j
XI_PLUS = -0.41 + 0.1j
# fixed generic inhomogeneities; the first N are used for an N-site chain
THETA = (0.1, -0.35, 0.27, 0.6, -0.52, 0.04, 0.71, -0.18)


def random_set(rng, n, scale=0.8):
    return tuple(complex(a, b) for a, b in scale * rng.normal(size=(n, 2)))


def chain(n_sites, mode="periodic", c=1.0):
    return ModelSpec.xxx(THETA[:n_sites], c=c, mode=mode, xi_minus=XI_MINUS, xi_plus=XI_PLUS)


def rel(a, b):
    return abs(complex(a) - complex(b)) / max(abs(complex(b)), 1e-300)


_SOLVED = {}


def solved(n_sites, n, mode="periodic"):
    """Root sets of a generic chain, solved once per session."""
    key = (n_sites, n, mode)
    if key not in _SOLVED:
        model = chain(n_sites, mode)
        _SOLVED[key] = (model, [b.roots for b in solve_bethe(model, SolveConfig(n_roots=n))])
    return _SOLVED[key]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hom2():
    """Two-site homogeneous chain, theta = {0, 0}, c = 1."""
    return ModelSpec.xxx((0.0, 0.0))
