"""Closed-form solution of the structured equation ``D = S + X Sigma - Sigma Y``.

Given a residual ``D`` (``l x q``) and singular values ``Sigma`` the solver
returns a real diagonal (or block diagonal) ``S`` together with
skew-Hermitian ``X`` (``l x l``) and ``Y`` (``q x q``). Every entry is
obtained from at most two entries of ``D``, so no linear system is solved.

For ``i < j <= q`` the pair ``(x_ij, y_ij)`` solves a 2x2 system whose
determinant is ``s_j^2 - s_i^2``; the rows below ``q`` only involve ``X``.
"""

from __future__ import annotations

import dataclasses

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import DegenerateSpectrumError, PartitionError, ShapeError
from .mpcore import (DiagonalMatrix, MpMatrix, kappa, kappa_cluster, max_sum_norm,
                     precision_context, to_mpfr)


@dataclasses.dataclass(frozen=True)
class CouplingSolution:
    """Solution ``(S, X, Y)`` of the coupling equation.

    Attributes
    ----------
    S : MpMatrix
        ``l x q`` correction of the singular values. Real diagonal in the
        regular case, block diagonal for a cluster partition.
    X : MpMatrix
        ``l x l`` skew-Hermitian left correction.
    Y : MpMatrix
        ``q x q`` skew-Hermitian right correction.
    partition : tuple of int or None
        Cluster sizes used, ``None`` for the regular solver.
    """

    S: MpMatrix
    X: MpMatrix
    Y: MpMatrix
    partition: tuple = None


def _sizes(partition):
    """Cluster sizes of a partition object or of a plain sequence."""
    return tuple(getattr(partition, "multiplicities", partition))


def _values_of(sigma):
    if isinstance(sigma, DiagonalMatrix):
        return list(sigma.values)
    return [to_mpfr(v) for v in sigma]


def _check_shapes(D, q):
    ell = D.rows
    if D.cols != q:
        raise ShapeError("residual has %d columns but there are %d singular values" % (D.cols, q))
    if ell < q:
        raise ShapeError("residual must have at least as many rows as columns, got %s"
                         % (D.shape,))


def _labels_from(multiplicities, q):
    multiplicities = _sizes(multiplicities)
    if any(int(m) != m or m < 1 for m in multiplicities):
        raise PartitionError("cluster sizes must be positive integers: %s" % (tuple(multiplicities),))
    if sum(multiplicities) != q:
        raise PartitionError("cluster sizes %s do not add up to %d"
                             % (tuple(multiplicities), q))
    labels = []
    for c, size in enumerate(multiplicities):
        labels.extend([c] * int(size))
    return labels


def _fill(D, sig, labels):
    """Shared entry formulas. ``labels`` is None in the regular case."""
    ell, q = D.shape
    prec = D.precision
    S = MpMatrix.zeros(ell, q, prec)
    X = MpMatrix.zeros(ell, ell, prec)
    Y = MpMatrix.zeros(q, q, prec)
    d, s_, x_, y_ = D.data, S.data, X.data, Y.data
    with precision_context(prec):
        for i in range(q):
            same_block = labels is not None and any(
                labels[j] == labels[i] for j in range(q) if j != i)
            if same_block:
                continue
            # singleton: real diagonal correction, imaginary part goes to X and Y
            s_[i, i] = mpc(d[i, i].real, 0)
            xi = mpc(0, d[i, i].imag / (2 * sig[i]))
            x_[i, i] = xi
            y_[i, i] = -xi
        for i in range(q):
            for j in range(i + 1, q):
                if labels is not None and labels[i] == labels[j]:
                    continue
                minus = sig[j] - sig[i]
                plus = sig[j] + sig[i]
                a = d[i, j] + d[j, i].conjugate()
                b = d[i, j] - d[j, i].conjugate()
                first = a / minus
                second = b / plus
                xij = (first + second) / 2
                yij = (first - second) / 2
                x_[i, j] = xij
                x_[j, i] = -xij.conjugate()
                y_[i, j] = yij
                y_[j, i] = -yij.conjugate()
        for i in range(q, ell):
            for j in range(q):
                xij = d[i, j] / sig[j]
                x_[i, j] = xij
                x_[j, i] = -xij.conjugate()
        if labels is not None:
            for i in range(q):
                for j in range(q):
                    if labels[i] == labels[j] and (i != j or labels.count(labels[i]) > 1):
                        s_[i, j] = d[i, j]
    return S, X, Y


def solve_regular(D, sigma):
    """Solve the coupling equation for distinct positive singular values.

    Parameters
    ----------
    D : MpMatrix
        ``l x q`` residual with ``l >= q``.
    sigma : DiagonalMatrix or sequence
        ``q`` singular values in strictly decreasing order, all positive.

    Returns
    -------
    CouplingSolution

    Raises
    ------
    DegenerateSpectrumError
        When two values coincide, the order is wrong or a value is not
        positive. The offending index pair is attached.
    """
    sig = _values_of(sigma)
    q = len(sig)
    _check_shapes(D, q)
    for i in range(q - 1):
        if not sig[i] > sig[i + 1]:
            raise DegenerateSpectrumError(
                (i, i + 1), "singular values at indices %d and %d are not strictly decreasing"
                % (i, i + 1))
    for i in range(q):
        if not sig[i] > 0:
            raise DegenerateSpectrumError((i, i), "singular value %d is not positive" % i)
    with precision_context(D.precision):
        sig = [mpfr(s) for s in sig]
    S, X, Y = _fill(D, sig, None)
    return CouplingSolution(S, X, Y, None)


def solve_cluster(D, sigma, multiplicities):
    """Solve the coupling equation relative to a cluster partition.

    Inside a cluster the residual is moved entirely into ``S`` and ``X``,
    ``Y`` vanish there. Across clusters and below row ``q`` the regular
    formulas apply. Singleton clusters are handled exactly as in
    :func:`solve_regular`.

    Parameters
    ----------
    D : MpMatrix
        ``l x q`` residual.
    sigma : DiagonalMatrix or sequence
        Representative value for every index (for instance the real parts
        of the diagonal of a block-diagonal ``Sigma``).
    multiplicities : sequence of int or ClusterPartition
        Cluster sizes, in order, adding up to ``q``.
    """
    sig = _values_of(sigma)
    q = len(sig)
    _check_shapes(D, q)
    labels = _labels_from(multiplicities, q)
    for i in range(q):
        if not sig[i] > 0:
            raise DegenerateSpectrumError((i, i), "singular value %d is not positive" % i)
    for i in range(q):
        for j in range(i + 1, q):
            if labels[i] != labels[j]:
                if labels[i] < labels[j] and not sig[i] > sig[j]:
                    raise PartitionError(
                        "clusters are not ordered: value %d (cluster %d) is not above "
                        "value %d (cluster %d)" % (i, labels[i], j, labels[j]))
    with precision_context(D.precision):
        sig = [mpfr(s) for s in sig]
    S, X, Y = _fill(D, sig, labels)
    return CouplingSolution(S, X, Y, tuple(int(m) for m in _sizes(multiplicities)))


def solve(D, sigma, multiplicities=None):
    """Dispatch to :func:`solve_regular` or :func:`solve_cluster`."""
    if multiplicities is None:
        return solve_regular(D, sigma)
    return solve_cluster(D, sigma, multiplicities)


def coupling_residual(solution, D, Sigma):
    """``D - S - X Sigma + Sigma Y`` for a diagonal or dense ``Sigma``."""
    if isinstance(Sigma, DiagonalMatrix):
        Sigma = Sigma.to_matrix()
    return D - solution.S - solution.X @ Sigma + Sigma @ solution.Y


@dataclasses.dataclass(frozen=True)
class BoundsReport:
    """Norm ratios of a coupling solution.

    ``s_ratio = |S| / |D|`` and ``x_ratio = |X| / (kappa |D|)``, likewise
    for ``y_ratio``. Every ratio should be at most one.
    """

    s_ratio: object
    x_ratio: object
    y_ratio: object
    kappa: object

    @property
    def violations(self):
        return [name for name in ("s_ratio", "x_ratio", "y_ratio")
                if getattr(self, name) > 1]

    @property
    def ok(self):
        return not self.violations


def check_bounds(solution, D, sigma, multiplicities=None):
    """Compare the size of a solution with the size of its residual.

    Parameters
    ----------
    solution : CouplingSolution
    D : MpMatrix
        Residual the solution was computed from.
    sigma : DiagonalMatrix, sequence or scalar
        Singular values, from which the condition quantity is computed, or
        the condition quantity itself when a scalar is given.
    multiplicities : sequence of int or ClusterPartition, optional
        Use the cluster form of the condition quantity.
    """
    if isinstance(sigma, (int, float, type(mpfr(0)))):
        with precision_context(D.precision):
            kap = +to_mpfr(sigma) if not isinstance(sigma, type(mpfr(0))) else sigma
    else:
        sig = sigma if isinstance(sigma, DiagonalMatrix) else DiagonalMatrix(
            _values_of(sigma), precision=D.precision)
        if multiplicities is None:
            kap = kappa(sig)
        else:
            kap = kappa_cluster(sig, multiplicities)
    dn = max_sum_norm(D)
    with precision_context(D.precision):
        if dn == 0:
            zero = mpfr(0)
            ratios = [zero if max_sum_norm(M) == 0 else gmpy2.inf()
                      for M in (solution.S, solution.X, solution.Y)]
        else:
            ratios = [max_sum_norm(solution.S) / dn,
                      max_sum_norm(solution.X) / (kap * dn),
                      max_sum_norm(solution.Y) / (kap * dn)]
    return BoundsReport(*ratios, kappa=kap)
