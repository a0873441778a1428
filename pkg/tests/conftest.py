"""Shared helpers for the test suite."""

import numpy as np
import pytest
from gmpy2 import mpfr

from svdrefine.bench.generators import random_unitary
from svdrefine.mpcore import DiagonalMatrix, MpMatrix, precision_context
from svdrefine.triplet import SvdTriplet


def decreasing_spectrum(rng, count, low=0.1, high=1.0):
    """Positive values in strictly decreasing order with gaps in [low, high)."""
    return list(np.cumsum(rng.uniform(low, high, count))[::-1])


def complex_gaussian(rng, rows, cols, precision):
    data = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return MpMatrix(data, precision)


def exact_triplet(rng, m, n, q, precision):
    """Triplet with orthonormal factors and the matrix it decomposes exactly.

    ``M`` is formed as ``U Sigma V^H`` at the same precision, so the residual
    is pure roundoff.
    """
    U = random_unitary(m, precision, rng).take_columns(range(q))
    V = random_unitary(n, precision, rng).take_columns(range(q))
    values = decreasing_spectrum(rng, q)
    T = SvdTriplet.from_diagonal(U, V, values)
    return T, T.reconstruct()


def scaled(A, factor):
    with precision_context(A.precision):
        return A.scale(mpfr(factor))


def diagonal(values, precision=128, rows=None, cols=None):
    return DiagonalMatrix(values, rows, cols, precision)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
