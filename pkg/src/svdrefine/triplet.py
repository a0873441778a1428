"""Approximate singular value decompositions ``M ~ U Sigma V^H``."""

from __future__ import annotations

import dataclasses

from .errors import PartitionError, ShapeError
from .mpcore import DiagonalMatrix, MpMatrix, precision_context


@dataclasses.dataclass
class SvdTriplet:
    """Thin approximate SVD.

    Attributes
    ----------
    U : MpMatrix
        ``m x l`` left factor.
    V : MpMatrix
        ``n x q`` right factor.
    sigma : MpMatrix
        ``l x q`` middle factor. Real diagonal in regular mode; block
        diagonal with blocks given by ``partition`` in cluster mode.
    partition : tuple of int or None
        Cluster sizes, or ``None`` for regular mode.
    """

    U: MpMatrix
    V: MpMatrix
    sigma: MpMatrix
    partition: tuple = None

    def __post_init__(self):
        m, ell = self.U.shape
        n, q = self.V.shape
        if self.sigma.shape != (ell, q):
            raise ShapeError("Sigma has shape %s, expected %s" % (self.sigma.shape, (ell, q)))
        if not (m >= ell >= q):
            raise ShapeError("need m >= l >= q, got m=%d l=%d q=%d" % (m, ell, q))
        if n < q:
            raise ShapeError("need n >= q, got n=%d q=%d" % (n, q))
        if self.partition is not None:
            self.partition = tuple(int(k) for k in self.partition)
            if any(k < 1 for k in self.partition) or sum(self.partition) != q:
                raise PartitionError("cluster sizes %s do not add up to %d" % (self.partition, q))

    @classmethod
    def from_diagonal(cls, U, V, values, partition=None):
        """Build a triplet from factors and a list of singular values."""
        prec = max(U.precision, V.precision)
        if isinstance(values, DiagonalMatrix):
            values = values.values
        sigma = MpMatrix.from_diagonal(values, U.cols, V.cols, prec)
        return cls(U, V, sigma, partition)

    @property
    def mode(self):
        return "regular" if self.partition is None else "cluster"

    @property
    def precision(self):
        return max(self.U.precision, self.V.precision, self.sigma.precision)

    @property
    def shape(self):
        """``(m, n, l, q)``."""
        return (self.U.rows, self.V.rows, self.U.cols, self.V.cols)

    def singular_values(self):
        """Real parts of the diagonal of ``sigma`` as a :class:`DiagonalMatrix`."""
        with precision_context(self.sigma.precision):
            vals = [z.real for z in self.sigma.diagonal()]
        return DiagonalMatrix(vals, self.sigma.rows, self.sigma.cols, self.sigma.precision)

    def round(self, precision):
        """Copy with every factor rounded (or exactly widened) to ``precision``."""
        return SvdTriplet(self.U.round(precision), self.V.round(precision),
                          self.sigma.round(precision), self.partition)

    def is_real(self):
        return self.U.is_real() and self.V.is_real() and self.sigma.is_real()

    def reconstruct(self):
        """``U Sigma V^H``."""
        return self.U @ self.sigma @ self.V.H

    def columns(self, indices):
        """Sub-triplet keeping the given column indices of ``U`` and ``V``.

        Only defined in regular mode for square ``sigma``.
        """
        if self.partition is not None:
            raise PartitionError("column selection is only defined in regular mode")
        if self.U.cols != self.V.cols:
            raise ShapeError("column selection needs a square Sigma")
        idx = list(indices)
        vals = [self.singular_values().values[i] for i in idx]
        return SvdTriplet.from_diagonal(self.U.take_columns(idx), self.V.take_columns(idx), vals)
