import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gmmfit.piecewise import PiecewisePolynomial, Polynomial


def random_pp(rng, n_pieces=3, degree=4, span=(-2.0, 2.0), scale=1.0):
    """A random piecewise polynomial on a sorted random knot grid."""
    knots = np.sort(rng.uniform(span[0], span[1], n_pieces + 1))
    while np.min(np.diff(knots)) < 1e-3 * (span[1] - span[0]):
        knots = np.sort(rng.uniform(span[0], span[1], n_pieces + 1))
    pieces = [
        Polynomial(rng.uniform(-scale, scale, rng.integers(1, degree + 2)))
        for _ in range(n_pieces)
    ]
    return PiecewisePolynomial(knots, pieces)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
