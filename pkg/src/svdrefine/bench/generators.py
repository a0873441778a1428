"""Test matrices: random complex, Cauchy, and prescribed singular values."""

from __future__ import annotations

from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpc

from ..mpcore import DiagonalMatrix, MpMatrix, precision_context
from ..refiner import order_constants


def gen_random(m, n, bits=53, seed=0):
    """``m x n`` matrix of i.i.d. complex standard normal entries.

    Real and imaginary parts are independent N(0, 1) doubles, so the mean of
    ``|z|^2`` is 2. The doubles are stored exactly at ``bits`` bits.
    """
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    return MpMatrix(data, max(int(bits), 53))


def gen_cauchy(n, bits=53):
    """``n x n`` matrix with entries ``1 / (i + j)`` (1-based), rounded at ``bits``."""
    rows = [[Fraction(1, i + j) for j in range(1, n + 1)] for i in range(1, n + 1)]
    return MpMatrix(rows, max(int(bits), 53))


def random_unitary(n, bits, rng):
    """Unitary matrix from a complex Gaussian one by Gram-Schmidt with reorthogonalization.

    All arithmetic runs at ``bits`` bits, so the result is unitary to about
    that precision.
    """
    bits = max(int(bits), 53)
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q = MpMatrix(G, bits).data.copy()
    conj = np.frompyfunc(lambda z: z.conjugate(), 1, 1)
    with precision_context(bits):
        for k in range(n):
            v = Q[:, k]
            for _ in range(2):
                if k:
                    basis = Q[:, :k]
                    coeffs = conj(basis.T).dot(v)
                    v = v - basis.dot(coeffs)
            norm = gmpy2.sqrt(sum((z.real * z.real + z.imag * z.imag for z in v), mpc(0).real))
            Q[:, k] = v / norm
    return MpMatrix._wrap(Q, bits)


def prescribed_spectrum(n, bits=53):
    """``n`` triple values ``2^i`` followed by ``n`` simple values ``2^-i``, decreasing."""
    values = []
    for i in range(n, 0, -1):
        values.extend([Fraction(2) ** i] * 3)
    values.extend(Fraction(1, 2 ** i) for i in range(1, n + 1))
    return DiagonalMatrix(values, precision=max(int(bits), 53))


def gen_prescribed(n, bits=53, seed=0):
    """``4n x 4n`` matrix ``U Sigma V`` with random unitary ``U``, ``V``.

    Returns
    -------
    MpMatrix, DiagonalMatrix
        The matrix and its exact singular values in decreasing order.
    """
    rng = np.random.default_rng(seed)
    size = 4 * n
    spectrum = prescribed_spectrum(n, bits)
    U = random_unitary(size, bits, rng)
    V = random_unitary(size, bits, rng)
    M = U @ spectrum.to_matrix() @ V
    return M, spectrum


def prescribed_deflation_threshold(size, p):
    """Bits of accuracy a start needs before deflating a prescribed matrix.

    Returns ``-floor(log2(3^a u0 / (4^a 2^(size a))))`` where ``a`` is the
    certificate exponent of order ``p`` and ``size`` is the matrix order
    ``4n``. For every ``p >= 2`` the threshold of the higher orders is used.
    """
    consts = order_constants(max(int(p), 3) if p >= 2 else 1)
    a = consts.exponent
    with precision_context(256):
        exp = gmpy2.mpfr(a.numerator) / a.denominator
        value = (gmpy2.mpfr(3) ** exp * gmpy2.mpfr(consts.u0)
                 / (gmpy2.mpfr(4) ** exp * gmpy2.mpfr(2) ** (size * exp)))
        return -int(gmpy2.floor(gmpy2.log2(value)))
