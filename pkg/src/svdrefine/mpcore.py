"""Multiprecision complex matrices on top of gmpy2.

Entries live in numpy object arrays of ``gmpy2.mpc`` values. Every
operation runs inside a gmpy2 context whose precision is the largest
precision among its operands, so mixing a 64-bit and a 4096-bit matrix
yields a 4096-bit result. Rounding to a smaller precision is always
explicit (see :meth:`MpMatrix.round`).

An optional :class:`OpCounter` can be activated with :func:`counting` to
tally matrix and scalar operations performed by the algorithms.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from fractions import Fraction
from numbers import Number

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

MIN_PRECISION = 53


def precision_context(bits):
    """Return a gmpy2 context manager computing at ``bits`` bits."""
    return gmpy2.context(precision=int(bits))


# --------------------------------------------------------------------------
# Operation counting
# --------------------------------------------------------------------------


@dataclasses.dataclass
class OpCounter:
    """Tally of the work done inside a :func:`counting` block.

    ``factorizations`` and ``solves`` count matrix factorizations and
    linear-system solves. The refinement algorithms never perform either,
    so they stay at zero unless a baseline routine (such as the Jacobi
    initializer) runs under the same counter.
    """

    matrix_mults: int = 0
    matrix_adds: int = 0
    scalar_mults: int = 0
    scalar_adds: int = 0
    factorizations: int = 0
    solves: int = 0

    def snapshot(self):
        return dataclasses.replace(self)

    def reset(self):
        for f in dataclasses.fields(self):
            setattr(self, f.name, 0)

    def merge(self, other):
        for f in dataclasses.fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def __sub__(self, other):
        return OpCounter(**{f.name: getattr(self, f.name) - getattr(other, f.name)
                            for f in dataclasses.fields(self)})


_ACTIVE_COUNTER = contextvars.ContextVar("svdrefine_active_counter", default=None)


@contextlib.contextmanager
def counting(counter=None):
    """Activate ``counter`` (a fresh one by default) for the enclosed block.

    Counters nest: operations are charged to every active counter.
    """
    counter = OpCounter() if counter is None else counter
    parent = _ACTIVE_COUNTER.get()
    chain = (counter,) if parent is None else parent + (counter,)
    token = _ACTIVE_COUNTER.set(chain)
    try:
        yield counter
    finally:
        _ACTIVE_COUNTER.reset(token)


def _charge(**amounts):
    chain = _ACTIVE_COUNTER.get()
    if chain is None:
        return
    for counter in chain:
        for name, value in amounts.items():
            setattr(counter, name, getattr(counter, name) + value)


def record_factorization(count=1):
    """Charge ``count`` matrix factorizations to the active counters."""
    _charge(factorizations=count)


# --------------------------------------------------------------------------
# Scalar conversion
# --------------------------------------------------------------------------


def to_mpfr(x):
    """Convert a real scalar to mpfr at the current context precision."""
    if isinstance(x, Fraction):
        return mpfr(gmpy2.mpq(x.numerator, x.denominator))
    if isinstance(x, mpc):
        if x.imag != 0:
            raise ValueError("expected a real value, got %r" % (x,))
        return mpfr(x.real)
    if isinstance(x, np.floating):
        if isinstance(x, np.longdouble) and np.finfo(np.longdouble).nmant > 52:
            hi = float(x)
            lo = float(x - np.longdouble(hi))
            return mpfr(hi) + mpfr(lo)
        return mpfr(float(x))
    if isinstance(x, np.integer):
        return mpfr(int(x))
    return mpfr(x)


def to_mpc(x):
    """Convert a scalar to mpc at the current context precision."""
    if isinstance(x, mpc):
        return mpc(x)
    if isinstance(x, (complex, np.complexfloating)):
        if isinstance(x, np.clongdouble) and np.finfo(np.longdouble).nmant > 52:
            return mpc(to_mpfr(x.real), to_mpfr(x.imag))
        return mpc(complex(x))
    if isinstance(x, tuple) and len(x) == 2:
        return mpc(to_mpfr(x[0]), to_mpfr(x[1]))
    if isinstance(x, str):
        return mpc(x)
    return mpc(to_mpfr(x), 0)


_vec_to_mpc = np.frompyfunc(to_mpc, 1, 1)
_vec_abs = np.frompyfunc(abs, 1, 1)
_vec_real = np.frompyfunc(lambda z: z.real, 1, 1)
_vec_imag = np.frompyfunc(lambda z: z.imag, 1, 1)
_vec_conj = np.frompyfunc(lambda z: z.conjugate(), 1, 1)
_vec_copy = np.frompyfunc(mpc, 1, 1)


def _object_matrix(values):
    arr = np.asarray(values, dtype=object)
    if arr.ndim != 2:
        raise ValueError("matrix data must be two dimensional, got shape %s" % (arr.shape,))
    return arr


# --------------------------------------------------------------------------
# Matrices
# --------------------------------------------------------------------------


class MpMatrix:
    """Dense complex matrix with a fixed binary precision.

    Parameters
    ----------
    data : array_like
        Two dimensional array of scalars. Anything gmpy2 can convert is
        accepted, including ``fractions.Fraction`` and decimal strings.
    precision : int
        Significand length in bits (at least 53). Entries are rounded to
        this precision on construction.
    """

    __slots__ = ("data", "precision")
    __array_priority__ = 1000

    def __init__(self, data, precision):
        precision = int(precision)
        if precision < MIN_PRECISION:
            raise ValueError("precision must be at least %d bits" % MIN_PRECISION)
        arr = _object_matrix(data)
        with precision_context(precision):
            self.data = _vec_to_mpc(arr) if arr.size else arr.copy()
        if not isinstance(self.data, np.ndarray):
            self.data = np.array([[self.data]], dtype=object)
        self.precision = precision

    @classmethod
    def _wrap(cls, arr, precision):
        out = cls.__new__(cls)
        out.data = arr if isinstance(arr, np.ndarray) else np.array([[arr]], dtype=object)
        out.precision = int(precision)
        return out

    # constructors ------------------------------------------------------
    @classmethod
    def zeros(cls, rows, cols, precision):
        arr = np.empty((rows, cols), dtype=object)
        with precision_context(precision):
            zero = mpc(0)
        arr.fill(zero)
        return cls._wrap(arr, precision)

    @classmethod
    def identity(cls, n, precision, cols=None):
        cols = n if cols is None else cols
        out = cls.zeros(n, cols, precision)
        with precision_context(precision):
            one = mpc(1)
        for i in range(min(n, cols)):
            out.data[i, i] = one
        return out

    @classmethod
    def from_diagonal(cls, values, rows, cols, precision):
        out = cls.zeros(rows, cols, precision)
        with precision_context(precision):
            for i, v in enumerate(values):
                out.data[i, i] = to_mpc(v)
        return out

    # basic properties ---------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    def __repr__(self):
        return "MpMatrix(shape=%s, precision=%d)" % (self.shape, self.precision)

    def __getitem__(self, key):
        sub = self.data[key]
        if not isinstance(sub, np.ndarray):
            return sub
        if sub.ndim == 1:
            # keep two dimensions for row or column selections
            if isinstance(key, tuple) and isinstance(key[0], (int, np.integer)):
                sub = sub[np.newaxis, :]
            else:
                sub = sub[:, np.newaxis]
        return MpMatrix._wrap(sub.copy(), self.precision)

    def copy(self):
        return MpMatrix._wrap(self.data.copy(), self.precision)

    # precision handling -------------------------------------------------
    def round(self, precision):
        """Return a copy rounded (or exactly widened) to ``precision`` bits."""
        precision = int(precision)
        if precision < MIN_PRECISION:
            raise ValueError("precision must be at least %d bits" % MIN_PRECISION)
        with precision_context(precision):
            arr = _vec_copy(self.data) if self.data.size else self.data.copy()
        return MpMatrix._wrap(arr, precision)

    # algebra ---------------------------------------------------------------
    def _binary_precision(self, other):
        return max(self.precision, other.precision)

    def _check_same_shape(self, other):
        if self.shape != other.shape:
            raise ValueError("shape mismatch: %s vs %s" % (self.shape, other.shape))

    def __add__(self, other):
        if not isinstance(other, MpMatrix):
            return NotImplemented
        self._check_same_shape(other)
        prec = self._binary_precision(other)
        with precision_context(prec):
            arr = self.data + other.data
        _charge(matrix_adds=1, scalar_adds=self.data.size)
        return MpMatrix._wrap(arr, prec)

    def __sub__(self, other):
        if not isinstance(other, MpMatrix):
            return NotImplemented
        self._check_same_shape(other)
        prec = self._binary_precision(other)
        with precision_context(prec):
            arr = self.data - other.data
        _charge(matrix_adds=1, scalar_adds=self.data.size)
        return MpMatrix._wrap(arr, prec)

    def __neg__(self):
        with precision_context(self.precision):
            arr = -self.data
        return MpMatrix._wrap(arr, self.precision)

    def __matmul__(self, other):
        if not isinstance(other, MpMatrix):
            return NotImplemented
        m, k = self.shape
        k2, n = other.shape
        if k != k2:
            raise ValueError("inner dimensions differ: %s @ %s" % (self.shape, other.shape))
        prec = self._binary_precision(other)
        if k == 0:
            return MpMatrix.zeros(m, n, prec)
        with precision_context(prec):
            arr = self.data.dot(other.data)
        _charge(matrix_mults=1, scalar_mults=m * k * n, scalar_adds=m * n * (k - 1))
        return MpMatrix._wrap(arr, prec)

    def scale(self, factor):
        """Multiply every entry by the scalar ``factor``."""
        with precision_context(self.precision):
            s = factor if isinstance(factor, (mpfr, mpc)) else to_mpc(factor)
            arr = self.data * s
        _charge(scalar_mults=self.data.size)
        return MpMatrix._wrap(arr, self.precision)

    def __mul__(self, factor):
        if isinstance(factor, MpMatrix):
            raise TypeError("use @ for matrix products")
        if not isinstance(factor, (Number, Fraction, mpfr, mpc)):
            return NotImplemented
        return self.scale(factor)

    __rmul__ = __mul__

    def add_identity(self, factor=1):
        """Return ``self + factor * I`` (square part only)."""
        out = self.copy()
        with precision_context(self.precision):
            s = to_mpc(factor)
            for i in range(min(self.shape)):
                out.data[i, i] = out.data[i, i] + s
        _charge(scalar_adds=min(self.shape))
        return out

    @property
    def H(self):
        """Conjugate transpose."""
        with precision_context(self.precision):
            arr = _vec_conj(self.data.T) if self.data.size else self.data.T.copy()
        return MpMatrix._wrap(np.asarray(arr, dtype=object), self.precision)

    @property
    def T(self):
        return MpMatrix._wrap(self.data.T.copy(), self.precision)

    def conj(self):
        with precision_context(self.precision):
            arr = _vec_conj(self.data) if self.data.size else self.data.copy()
        return MpMatrix._wrap(np.asarray(arr, dtype=object), self.precision)

    def hermitian_part(self):
        """Return ``(A + A^H) / 2``."""
        with precision_context(self.precision):
            arr = (self.data + _vec_conj(self.data.T)) / 2
        return MpMatrix._wrap(arr, self.precision)

    def skew_part(self):
        """Return ``(A - A^H) / 2``."""
        with precision_context(self.precision):
            arr = (self.data - _vec_conj(self.data.T)) / 2
        return MpMatrix._wrap(arr, self.precision)

    # views and conversions --------------------------------------------
    def diagonal(self):
        return [self.data[i, i] for i in range(min(self.shape))]

    def abs_entries(self):
        """Object array of entrywise absolute values (mpfr)."""
        with precision_context(self.precision):
            return _vec_abs(self.data) if self.data.size else self.data.copy()

    def real_part(self):
        with precision_context(self.precision):
            return _vec_real(self.data)

    def imag_part(self):
        with precision_context(self.precision):
            return _vec_imag(self.data)

    def is_real(self):
        return all(z.imag == 0 for z in self.data.flat)

    def to_numpy(self, dtype=np.complex128):
        """Convert to a numpy array, rounding to ``dtype``."""
        out = np.empty(self.shape, dtype=dtype)
        for idx, z in np.ndenumerate(self.data):
            out[idx] = complex(z)
        return out

    def take_columns(self, indices):
        return MpMatrix._wrap(self.data[:, list(indices)].copy(), self.precision)

    def take_rows(self, indices):
        return MpMatrix._wrap(self.data[list(indices), :].copy(), self.precision)

    def max_abs_difference(self, other):
        """Largest entrywise modulus of ``self - other`` as mpfr."""
        diff = self - other
        if not diff.data.size:
            return mpfr(0)
        with precision_context(diff.precision):
            return max(diff.abs_entries().flat)


def matrix_from_numpy(arr, precision):
    """Build an :class:`MpMatrix` from any numpy array (exact conversion)."""
    return MpMatrix(np.asarray(arr), precision)


def hstack(blocks):
    prec = max(b.precision for b in blocks)
    return MpMatrix._wrap(np.hstack([b.data for b in blocks]), prec)


def vstack(blocks):
    prec = max(b.precision for b in blocks)
    return MpMatrix._wrap(np.vstack([b.data for b in blocks]), prec)


# --------------------------------------------------------------------------
# Diagonal matrices
# --------------------------------------------------------------------------


class DiagonalMatrix:
    """Rectangular ``rows x cols`` matrix with a real main diagonal.

    Parameters
    ----------
    values : sequence
        Diagonal entries. Their count must equal ``min(rows, cols)``.
    rows, cols : int
        Shape of the matrix. Defaults to a square matrix.
    precision : int
        Significand length in bits.
    """

    __slots__ = ("values", "rows", "cols", "precision")

    def __init__(self, values, rows=None, cols=None, precision=MIN_PRECISION):
        values = list(values)
        rows = len(values) if rows is None else int(rows)
        cols = len(values) if cols is None else int(cols)
        if len(values) != min(rows, cols):
            raise ValueError("a %dx%d diagonal matrix needs %d values, got %d"
                             % (rows, cols, min(rows, cols), len(values)))
        if precision < MIN_PRECISION:
            raise ValueError("precision must be at least %d bits" % MIN_PRECISION)
        with precision_context(precision):
            self.values = tuple(to_mpfr(v) for v in values)
        self.rows, self.cols, self.precision = rows, cols, int(precision)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return "DiagonalMatrix(%s, shape=%s, precision=%d)" % (
            [float(v) for v in self.values], self.shape, self.precision)

    def to_matrix(self):
        return MpMatrix.from_diagonal(self.values, self.rows, self.cols, self.precision)

    def is_descending(self, strict=True):
        pairs = zip(self.values, self.values[1:])
        if strict:
            return all(a > b for a, b in pairs)
        return all(a >= b for a, b in pairs)

    def subset(self, indices):
        idx = list(indices)
        return DiagonalMatrix([self.values[i] for i in idx], len(idx), len(idx), self.precision)


# --------------------------------------------------------------------------
# Norms, residuals and condition quantities
# --------------------------------------------------------------------------


def max_sum_norm(A):
    """Larger of the maximal absolute row sum and maximal absolute column sum.

    Dominates the spectral norm and is cheap to evaluate exactly.
    """
    if isinstance(A, DiagonalMatrix):
        with precision_context(A.precision):
            return max((abs(v) for v in A.values), default=mpfr(0))
    if A.data.size == 0:
        return mpfr(0)
    with precision_context(A.precision):
        mags = A.abs_entries()
        row = max(mags.sum(axis=1))
        col = max(mags.sum(axis=0))
        return row if row >= col else col


# names used by the published interface
paper_norm = max_sum_norm


def residual_e(W):
    """Orthonormality defect ``W^H W - I``, symmetrized to be Hermitian."""
    gram = W.H @ W
    return gram.add_identity(-1).hermitian_part()


residual_E = residual_e


def svd_residual(M, U, V=None, Sigma=None):
    """``U^H M V - Sigma`` for a dense or diagonal ``Sigma``.

    Also accepts ``svd_residual(M, T)`` with a triplet ``T`` that has
    ``U``, ``V`` and ``sigma`` attributes.
    """
    if V is None and Sigma is None:
        U, V, Sigma = U.U, U.V, U.sigma
    if isinstance(Sigma, DiagonalMatrix):
        Sigma = Sigma.to_matrix()
    core = U.H @ (M @ V)
    return core - Sigma


def _pair_term(a, b):
    diff = abs(a - b)
    total = abs(a + b)
    if diff == 0 or total == 0:
        return gmpy2.inf()
    return 1 / diff + 1 / total


def _singular_values(S):
    if isinstance(S, DiagonalMatrix):
        return S.values, S.precision
    vals = list(S)
    prec = max([getattr(v, "precision", MIN_PRECISION) for v in vals] + [MIN_PRECISION])
    if isinstance(prec, tuple):
        prec = max(prec)
    return vals, prec


def kappa(S, include_reciprocals=True):
    """Condition quantity of a diagonal of singular values.

    The maximum of 1, every ``1/|s_i|`` and, over distinct index pairs,
    ``1/|s_i - s_j| + 1/|s_i + s_j|``. Infinite when a denominator vanishes.

    Parameters
    ----------
    S : DiagonalMatrix or sequence
        Singular values.
    include_reciprocals : bool
        Drop the ``1/|s_i|`` terms when False. That square form is the
        one used to choose deflation indices.
    """
    values, prec = _singular_values(S)
    with precision_context(prec):
        best = mpfr(1)
        if include_reciprocals:
            for s in values:
                if s == 0:
                    return gmpy2.inf()
                best = max(best, 1 / abs(s))
        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                best = max(best, _pair_term(values[i], values[j]))
        return best


def kappa_pair(a, b, precision=MIN_PRECISION):
    """``max(1, 1/|a - b| + 1/|a + b|)`` for two singular values."""
    with precision_context(precision):
        return max(mpfr(1), _pair_term(to_mpfr(a), to_mpfr(b)))


def kappa_cluster(S, multiplicities):
    """Condition quantity relative to a cluster partition.

    Same as :func:`kappa` except that the pair terms only run over pairs
    lying in different clusters.
    """
    values, prec = _singular_values(S)
    multiplicities = getattr(multiplicities, "multiplicities", multiplicities)
    if sum(multiplicities) != len(values):
        raise ValueError("cluster sizes %s do not add up to %d"
                         % (tuple(multiplicities), len(values)))
    labels = []
    for c, size in enumerate(multiplicities):
        labels.extend([c] * size)
    with precision_context(prec):
        best = mpfr(1)
        for s in values:
            if s == 0:
                return gmpy2.inf()
            best = max(best, 1 / abs(s))
        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                if labels[i] != labels[j]:
                    best = max(best, _pair_term(values[i], values[j]))
        return best


def big_k(S):
    """``max(1, largest singular value)``."""
    values, prec = _singular_values(S)
    with precision_context(prec):
        return max([mpfr(1)] + [abs(v) for v in values])
