"""Cluster partitions of a spectrum and deflation of an approximate SVD."""

from __future__ import annotations

import dataclasses

from gmpy2 import mpfr

from .errors import DeflationError, PartitionError, ShapeError
from .mpcore import (DiagonalMatrix, big_k, kappa, kappa_pair, max_sum_norm, precision_context,
                     to_mpfr)
from .refiner import order_constants, residuals


@dataclasses.dataclass(frozen=True)
class ClusterPartition:
    """Consecutive groups of singular values.

    Attributes
    ----------
    multiplicities : tuple of int
        Group sizes in order.
    delta : float or mpfr or None
        Separation used to build the partition, if any.
    """

    multiplicities: tuple
    delta: object = None

    def __post_init__(self):
        sizes = tuple(int(k) for k in self.multiplicities)
        if not sizes or any(k < 1 for k in sizes):
            raise PartitionError("cluster sizes must be positive: %s" % (sizes,))
        object.__setattr__(self, "multiplicities", sizes)

    @property
    def size(self):
        return sum(self.multiplicities)

    @property
    def starts(self):
        """Zero-based index of the first member of every cluster."""
        out, pos = [], 0
        for k in self.multiplicities:
            out.append(pos)
            pos += k
        return out

    def blocks(self):
        """``range`` of indices for every cluster."""
        return [range(s, s + k) for s, k in zip(self.starts, self.multiplicities)]

    def labels(self):
        out = []
        for c, k in enumerate(self.multiplicities):
            out.extend([c] * k)
        return out

    def is_regular(self):
        return all(k == 1 for k in self.multiplicities)


def _values(S):
    if isinstance(S, DiagonalMatrix):
        return list(S.values), S.precision
    vals = list(S)
    prec = 53
    for v in vals:
        if isinstance(v, mpfr):
            prec = max(prec, v.precision)
    with precision_context(prec):
        return [to_mpfr(v) for v in vals], prec


def separation_holds(values, multiplicities, delta):
    """Check both separation conditions of a partition.

    Values inside a cluster must lie within ``delta`` of each other and
    values in different clusters must be more than ``delta`` apart.
    """
    vals, prec = _values(values)
    labels = ClusterPartition(tuple(multiplicities)).labels()
    if len(labels) != len(vals):
        return False
    with precision_context(prec):
        d = to_mpfr(delta)
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                gap = abs(vals[i] - vals[j])
                if labels[i] == labels[j] and gap > d:
                    return False
                if labels[i] != labels[j] and gap <= d:
                    return False
    return True


def partition(S, delta):
    """Group a decreasing spectrum into clusters separated by more than ``delta``.

    For sorted values a valid partition can only split between neighbours
    more than ``delta`` apart and must split there, so the partition is
    unique when it exists.

    Parameters
    ----------
    S : DiagonalMatrix or sequence
        Values in decreasing order.
    delta : float or mpfr
        Separation, positive.

    Raises
    ------
    PartitionError
        When a chain of close neighbours spans more than ``delta``.
    """
    vals, prec = _values(S)
    if not vals:
        raise PartitionError("cannot partition an empty spectrum")
    if any(a < b for a, b in zip(vals, vals[1:])):
        raise PartitionError("values must be sorted in decreasing order")
    with precision_context(prec):
        d = to_mpfr(delta)
        if not d > 0:
            raise PartitionError("separation must be positive")
        sizes = [1]
        start = 0
        for k in range(1, len(vals)):
            if vals[k - 1] - vals[k] > d:
                sizes.append(1)
                start = k
            else:
                if vals[start] - vals[k] > d:
                    raise PartitionError(
                        "values %d..%d form a chain of gaps at most %s spanning more than it"
                        % (start, k, float(d)))
                sizes[-1] += 1
    return ClusterPartition(tuple(sizes), d)


# --------------------------------------------------------------------------
# Deflation
# --------------------------------------------------------------------------


def deflation_quantity(T, M, p, precomputed=None):
    """Scalar ``e`` that measures how far ``T`` is from an exact SVD.

    ``e = max(K^(a-1) |Delta| / u0, K^a |E_U| / u0, K^a |E_V| / u0)^(1/a)``
    with ``a`` and ``u0`` the certificate constants of order ``p``. Only
    defined for a square matrix and a square middle factor.
    """
    m, n, ell, q = T.shape
    if not (m == n == ell == q):
        raise ShapeError("deflation needs a square matrix and square factors, got %s"
                         % ((m, n, ell, q),))
    if T.partition is not None:
        raise DeflationError("deflation runs on a regular triplet")
    consts = order_constants(p)
    EU, EV, delta = residuals(T, M) if precomputed is None else precomputed
    K = big_k(T.singular_values())
    with precision_context(T.precision):
        a = mpfr(consts.exponent.numerator) / consts.exponent.denominator
        u0 = mpfr(consts.u0)
        worst = max(K ** (a - 1) * max_sum_norm(delta) / u0,
                    K ** a * max_sum_norm(EU) / u0,
                    K ** a * max_sum_norm(EV) / u0)
        return worst ** (1 / a)


@dataclasses.dataclass
class DeflationResult:
    """Output of :func:`deflate`.

    Attributes
    ----------
    indices : list of int
        Zero-based kept indices, increasing; always starts with 0.
    triplet : SvdTriplet
        Triplet restricted to ``indices``.
    e : mpfr
        Deflation quantity that drove the selection.
    """

    indices: list
    triplet: object
    e: object

    @property
    def q(self):
        return len(self.indices)


def select_indices(values, e, precision=53):
    """Greedy selection of well separated indices.

    Starting from the first value, skip ahead until the pair with the
    current value has ``kappa_pair * e <= 1`` and keep that index, then
    continue from it.
    """
    vals = list(values)
    n = len(vals)
    chosen = [0]
    i = 0
    with precision_context(precision):
        e = to_mpfr(e)
        while i < n:
            j = 1
            while i + j < n and kappa_pair(vals[i], vals[i + j], precision) * e > 1:
                j += 1
            if i + j < n:
                chosen.append(i + j)
            i += j
    return chosen


def deflate(T, M, p, e=None):
    """Keep the singular triplets that are separated relative to their accuracy.

    Parameters
    ----------
    T : SvdTriplet
        Regular square approximation of a square ``M``.
    M : MpMatrix
    p : int
        Order whose certificate constants define ``e``.
    e : mpfr, optional
        Use this value instead of :func:`deflation_quantity`.

    Returns
    -------
    DeflationResult
        ``kappa(Sigma_kept) * e <= 1`` holds for the square form of the
        condition quantity.

    Raises
    ------
    DeflationError
        When ``e > 1``.
    """
    if e is None:
        e = deflation_quantity(T, M, p)
    if e > 1:
        raise DeflationError("deflation quantity %.6g exceeds 1" % float(e))
    sv = T.singular_values()
    chosen = select_indices(sv.values, e, T.precision)
    kept = T.columns(chosen)
    kap = kappa(kept.singular_values(), include_reciprocals=False)
    if kap * e > 1:
        raise DeflationError("selected indices violate the separation condition")
    return DeflationResult(chosen, kept, e)
