"""Inversion-free projection onto matrices with orthonormal columns.

A matrix ``U`` whose columns are nearly orthonormal is corrected by
``U <- U (I + s_p(U^H U - I))`` where ``s_p`` truncates
``(1 + u)^(-1/2) - 1`` at degree ``p``. The defect drops from ``e`` to at
most ``e^(p+1)`` per step, and the limit is the polar factor of the start.
"""

from __future__ import annotations

import dataclasses
import warnings

from gmpy2 import mpfr

from .errors import ConvergenceError, SeriesDivergenceError
from .mpcore import max_sum_norm, precision_context, residual_e
from .series import s_coefficients, eval_poly


def orthonormality_defect(U):
    """Norm of ``U^H U - I``."""
    return max_sum_norm(residual_e(U))


def polar_step(U, p):
    """One correction step of order ``p``.

    Parameters
    ----------
    U : MpMatrix
        ``m x l`` matrix with ``l <= m``.
    p : int
        Series order.

    Returns
    -------
    MpMatrix
        The corrected matrix, same shape and precision.

    Raises
    ------
    SeriesDivergenceError
        When the defect is 1 or larger.
    """
    E = residual_e(U)
    defect = max_sum_norm(E)
    if defect >= 1:
        raise SeriesDivergenceError("orthonormality defect %.6g is not below 1" % float(defect))
    correction = eval_poly(s_coefficients(p), E).hermitian_part()
    return U @ correction.add_identity(1)


@dataclasses.dataclass
class PolarResult:
    """Outcome of :func:`polar_project`.

    Attributes
    ----------
    projected : MpMatrix
        Final iterate.
    iterations : int
        Number of correction steps applied.
    defects : list of mpfr
        Defect of every iterate, starting with the input.
    iterates : list of MpMatrix
        All iterates when requested, else empty.
    """

    projected: object
    iterations: int
    defects: list
    iterates: list = dataclasses.field(default_factory=list)

    @property
    def final_defect(self):
        return self.defects[-1]

    @property
    def initial_defect(self):
        return self.defects[0]


def polar_project(U0, p, tol=None, max_iter=64, keep_iterates=False):
    """Iterate :func:`polar_step` until the defect is at most ``tol``.

    Parameters
    ----------
    U0 : MpMatrix
        Start, with defect below 1/2.
    p : int
        Series order.
    tol : float or mpfr, optional
        Target defect. Defaults to ``2^-(precision - 8)``.
    max_iter : int
        Step budget.
    keep_iterates : bool
        Store every iterate in the result.

    Raises
    ------
    ValueError
        If the starting defect is 1/2 or more.
    ConvergenceError
        If ``max_iter`` steps do not reach ``tol``.
    """
    prec = U0.precision
    with precision_context(prec):
        tol = mpfr(2) ** (8 - prec) if tol is None else mpfr(tol)
    defect = orthonormality_defect(U0)
    if defect >= 0.5:
        raise ValueError("starting defect %.6g must be below 1/2" % float(defect))
    if defect >= 0.25:
        warnings.warn("starting defect %.4g is at least 1/4; the limit is on the "
                      "Stiefel manifold but may not be the polar factor" % float(defect),
                      RuntimeWarning, stacklevel=2)
    U = U0
    defects = [defect]
    iterates = [U0] if keep_iterates else []
    steps = 0
    while defect > tol:
        if steps >= max_iter:
            raise ConvergenceError("defect %.6g above tolerance after %d steps"
                                   % (float(defect), steps), defects)
        U = polar_step(U, p)
        steps += 1
        defect = orthonormality_defect(U)
        defects.append(defect)
        if keep_iterates:
            iterates.append(U)
    return PolarResult(U, steps, defects, iterates)
