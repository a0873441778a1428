"""Truncated power series used by the correction steps.

Two families are needed:

``S_SERIES``
    Truncations of ``(1 + u)^(-1/2) - 1``. Applied to an orthonormality
    defect ``E = W^H W - I`` they give the factor that pushes ``W`` towards
    the nearest matrix with orthonormal columns.

``C_SERIES``
    Truncations of the odd-plus-even series ``c(u) = u + 1/2 u^2 - 1/8 u^4 +
    ...`` satisfying ``(1 + c(u))^H (1 + c(u)) = 1`` for skew-Hermitian
    ``u`` (its even part is ``sqrt(1 + u^2) - 1``). They turn a
    skew-Hermitian correction into an almost unitary factor.

Coefficients are exact rationals. Evaluation on matrices uses a Horner
scheme that needs ``degree - 1`` matrix products.
"""

from __future__ import annotations

import dataclasses
from fractions import Fraction
from math import comb, factorial

from .mpcore import MpMatrix, precision_context, to_mpfr

S_SERIES = "s"
C_SERIES = "c"


def s_coefficients(p):
    """Coefficients ``[0, t_1, ..., t_p]`` of the degree ``p`` truncation of
    ``(1 + u)^(-1/2) - 1``.

    >>> s_coefficients(3)
    [Fraction(0, 1), Fraction(-1, 2), Fraction(3, 8), Fraction(-5, 16)]
    """
    _check_order(p)
    return [Fraction(0)] + [Fraction((-1) ** k * comb(2 * k, k), 4 ** k) for k in range(1, p + 1)]


def _even_coefficient(k):
    # coefficient of u^(2k) in sqrt(1 + u^2) - 1
    num = (-1) ** (k + 1) * factorial(2 * k)
    den = 4 ** k * factorial(k) ** 2 * (2 * k - 1)
    return Fraction(num, den)


def e_coefficients(p):
    """Coefficients of the even tail ``e_p``: the terms ``u^(2k)``, ``2k <= p``."""
    _check_order(p)
    coeffs = [Fraction(0)] * (p + 1)
    for k in range(1, p // 2 + 1):
        coeffs[2 * k] = _even_coefficient(k)
    return coeffs


def d_coefficients(p):
    """Coefficients of ``d_p = e_p - u^2 / 2`` (degree four and higher)."""
    coeffs = e_coefficients(p)
    if p >= 2:
        coeffs[2] -= Fraction(1, 2)
    return coeffs


def c_coefficients(p):
    """Coefficients ``[0, 1, ...]`` of ``c_p(u) = u + e_p(u)``.

    >>> c_coefficients(4)
    [Fraction(0, 1), Fraction(1, 1), Fraction(1, 2), Fraction(0, 1), Fraction(-1, 8)]
    """
    coeffs = e_coefficients(p)
    coeffs[1] = Fraction(1)
    return coeffs


# names used by the published interface
sp_coefficients = s_coefficients
cp_coefficients = c_coefficients


def _check_order(p):
    if int(p) != p or p < 1:
        raise ValueError("series order must be a positive integer, got %r" % (p,))


def _trim(coeffs):
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def eval_scalar(coeffs, x):
    """Evaluate ``sum coeffs[k] x^k`` for a scalar ``x`` (Horner)."""
    acc = 0
    for c in reversed(_trim(coeffs)):
        acc = acc * x + c
    return acc


def eval_poly(coeffs, A):
    """Evaluate the matrix polynomial ``sum coeffs[k] A^k`` by Horner's rule.

    Parameters
    ----------
    coeffs : sequence of Fraction
        Coefficients indexed by power. Trailing zeros are ignored.
    A : MpMatrix
        Square matrix.

    Returns
    -------
    MpMatrix
        Result at the precision of ``A``. A polynomial of degree ``d`` with
        zero constant term costs ``d - 1`` matrix products.
    """
    if A.rows != A.cols:
        raise ValueError("polynomial argument must be square, got %s" % (A.shape,))
    coeffs = _trim(coeffs)
    degree = len(coeffs) - 1
    with precision_context(A.precision):
        consts = [to_mpfr(c) for c in coeffs]
    if degree == 0:
        return MpMatrix.zeros(A.rows, A.cols, A.precision).add_identity(consts[0])
    acc = A.scale(consts[degree])
    for k in range(degree - 1, 0, -1):
        acc = A @ acc.add_identity(consts[k])
    if consts[0] != 0:
        acc = acc.add_identity(consts[0])
    return acc


def eval_c_series(p, X):
    """Evaluate ``c_p(X)`` using only even powers for the tail.

    ``c_p(X) = X + q(X^2)`` where ``q`` has degree ``floor(p/2)``. Evaluating
    ``q`` by Horner after forming ``X^2`` needs ``floor(p/2)`` products in
    total, instead of ``p - 1`` for the plain scheme when ``p`` is even.
    """
    coeffs = c_coefficients(p)
    if p < 2:
        return X.copy()
    tail = [coeffs[2 * k] for k in range(p // 2 + 1)]
    return X + eval_poly(tail, X @ X)


@dataclasses.dataclass(frozen=True)
class TruncatedSeries:
    """A truncated series of one of the two supported families.

    Attributes
    ----------
    kind : str
        ``S_SERIES`` or ``C_SERIES``.
    degree : int
        Truncation order ``p``.
    """

    kind: str
    degree: int

    def __post_init__(self):
        if self.kind not in (S_SERIES, C_SERIES):
            raise ValueError("unknown series kind %r" % (self.kind,))
        _check_order(self.degree)

    @property
    def coefficients(self):
        if self.kind == S_SERIES:
            return s_coefficients(self.degree)
        return c_coefficients(self.degree)

    def __call__(self, A):
        if self.kind == C_SERIES:
            return eval_c_series(self.degree, A)
        return eval_poly(self.coefficients, A)

    def scalar(self, x):
        return eval_scalar(self.coefficients, x)

    def matrix_products(self):
        """Number of matrix products one evaluation costs."""
        if self.kind == C_SERIES:
            return self.degree // 2
        return max(len(_trim(self.coefficients)) - 2, 0)

