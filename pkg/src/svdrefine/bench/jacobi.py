"""Baseline SVD at a chosen precision.

Used to produce starting triplets for the refinement experiments. At 53
bits and below the LAPACK routine behind :func:`numpy.linalg.svd` is used
by default. Otherwise one-sided Jacobi rotations run on ``clongdouble`` up
to the width of the platform long double and on gmpy2 object arrays above
that. Jacobi can also be forced at 53 bits (``complex128``).

Pairs of columns are rotated in round-robin order so that every round
touches disjoint pairs and can be applied to all of them at once.
"""

from __future__ import annotations

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from ..errors import ConvergenceError
from ..mpcore import MpMatrix, precision_context, record_factorization
from ..triplet import SvdTriplet

MAX_SWEEPS = 30
_LONGDOUBLE_BITS = np.finfo(np.longdouble).nmant + 1


def round_robin(n):
    """Rounds of disjoint pairs covering every pair of ``range(n)`` once."""
    players = list(range(n)) + ([None] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = []
        for k in range(size // 2):
            a, b = players[k], players[size - 1 - k]
            if a is not None and b is not None:
                pairs.append((min(a, b), max(a, b)))
        rounds.append(pairs)
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


class _Arith:
    """Elementwise helpers for one array type."""

    def __init__(self, bits):
        self.bits = bits
        if bits <= 53:
            self.cdtype, self.rdtype = np.complex128, np.float64
        elif bits <= _LONGDOUBLE_BITS:
            self.cdtype, self.rdtype = np.clongdouble, np.longdouble
        else:
            self.cdtype = self.rdtype = object
        self.is_object = self.cdtype is object
        with precision_context(max(bits, 53)):
            self.eps = mpfr(2) ** (-bits) if self.is_object else self.rdtype(2.0) ** (-bits)
        if self.is_object:
            self._sqrt = np.frompyfunc(gmpy2.sqrt, 1, 1)
            self._real = np.frompyfunc(lambda z: z.real, 1, 1)

    def asarray(self, A):
        if not self.is_object:
            return np.array(A.to_numpy(self.cdtype) if isinstance(A, MpMatrix) else A,
                            dtype=self.cdtype)
        return A.round(self.bits).data.copy()

    def real(self, z):
        return self._real(z) if self.is_object else z.real

    def sqrt(self, x):
        return self._sqrt(x) if self.is_object else np.sqrt(x)

    def one(self):
        return mpfr(1) if self.is_object else self.rdtype(1)

    def eye(self, n):
        if not self.is_object:
            return np.eye(n, dtype=self.cdtype)
        out = np.empty((n, n), dtype=object)
        out.fill(mpc(0))
        for i in range(n):
            out[i, i] = mpc(1)
        return out


def _jacobi(A, ar, tol):
    m, n = A.shape
    V = ar.eye(n)
    rounds = round_robin(n)
    for sweep in range(MAX_SWEEPS):
        off = 0
        for pairs in rounds:
            if not pairs:
                continue
            left = np.array([p for p, _ in pairs])
            right = np.array([q for _, q in pairs])
            ai, aj = A[:, left], A[:, right]
            alpha = ar.real((np.conj(ai) * ai).sum(axis=0))
            beta = ar.real((np.conj(aj) * aj).sum(axis=0))
            gamma = (np.conj(ai) * aj).sum(axis=0)
            mag = np.abs(gamma)
            scale = ar.sqrt(alpha * beta)
            active = np.array([bool(g > ar.eps * s) and bool(s > 0) for g, s in zip(mag, scale)])
            for k in np.nonzero(~active)[0]:
                mag[k] = ar.one()
            if ar.is_object:
                rel = [g / s if act else 0 for g, s, act in zip(mag, scale, active)]
                off = max([off] + rel)
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    rel = np.where(active, mag / np.where(active, scale, 1), 0)
                off = max(off, rel.max())
            if not active.any():
                continue
            phase = gamma / mag
            zeta = (beta - alpha) / (2 * mag)
            root = ar.sqrt(zeta * zeta + 1)
            t = np.array([(1 if z >= 0 else -1) / (abs(z) + r) for z, r in zip(zeta, root)],
                         dtype=ar.rdtype)
            c = 1 / ar.sqrt(t * t + 1)
            s = c * t
            zero = 0 * c[0]
            c = np.where(active, c, 1 + zero)
            s = np.where(active, s, zero)
            phase = np.where(active, phase, 1 + zero)
            A[:, left] = c * ai - s * np.conj(phase) * aj
            A[:, right] = s * phase * ai + c * aj
            vi, vj = V[:, left], V[:, right]
            V[:, left] = c * vi - s * np.conj(phase) * vj
            V[:, right] = s * phase * vi + c * vj
        if off <= tol:
            return A, V, sweep + 1
    raise ConvergenceError("Jacobi sweeps did not converge in %d sweeps" % MAX_SWEEPS)


def _cleanup(W):
    # one inversion-free orthonormalization step: W - W (W^H W - I) / 2
    gram = np.conj(W.T) @ W
    n = gram.shape[0]
    for i in range(n):
        gram[i, i] = gram[i, i] - 1
    gram = (gram + np.conj(gram.T)) / 2
    return W - (W @ gram) / 2


def _complete_basis(U, zero_cols, ar):
    # replace columns of vanishing singular values by an orthonormal completion
    m = U.shape[0]
    keep = [k for k in range(U.shape[1]) if k not in zero_cols]
    basis = [U[:, k] for k in keep]
    candidates = iter(range(m))
    for k in zero_cols:
        while True:
            e = ar.eye(m)[:, next(candidates)]
            for b in basis:
                e = e - (np.conj(b) * e).sum() * b
            norm = ar.sqrt(ar.real((np.conj(e) * e).sum()))
            if norm > 0.5:
                U[:, k] = e / norm
                basis.append(U[:, k])
                break
    return U


def _lapack_svd(M):
    A = M.to_numpy()
    if not A.imag.any():
        A = A.real
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    return u, list(s), np.conj(vh.T)


def init_svd(M, bits=53, method="auto"):
    """Thin SVD of ``M`` computed with ``bits`` bits of precision.

    Parameters
    ----------
    M : MpMatrix or numpy.ndarray
    bits : int
        Working precision. 53 bits and below use IEEE double.
    method : {"auto", "lapack", "jacobi"}
        ``"auto"`` picks LAPACK at 53 bits or less and Jacobi above.

    Returns
    -------
    SvdTriplet
        Regular triplet stored at ``max(bits, 53)`` bits with singular
        values in decreasing order. The first nonzero entry of every column
        of ``U`` is real and positive.

    Raises
    ------
    ConvergenceError
        If the rotations have not converged after 30 sweeps.
    """
    if method not in ("auto", "lapack", "jacobi"):
        raise ValueError("unknown method %r" % (method,))
    if method == "lapack" and bits > 53:
        raise ValueError("the LAPACK path only works at 53 bits")
    if not isinstance(M, MpMatrix):
        M = MpMatrix(np.asarray(M), max(bits, 53))
    if M.rows < M.cols:
        T = init_svd(M.H, bits, method)
        return SvdTriplet(T.V, T.U, T.sigma.T, None)
    record_factorization()
    store = max(int(bits), 53)
    ar = _Arith(int(bits))
    with precision_context(store):
        if method == "lapack" or (method == "auto" and bits <= 53):
            U, sigma, V = _lapack_svd(M)
        else:
            A = ar.asarray(M)
            tol = ar.eps ** 0.5 if ar.is_object else np.sqrt(ar.eps)
            A, V, _ = _jacobi(A, ar, tol)
            sigma = ar.sqrt(ar.real((np.conj(A) * A).sum(axis=0)))
            order = sorted(range(A.shape[1]), key=lambda k: -sigma[k])
            sigma = [sigma[k] for k in order]
            A, V = A[:, order], V[:, order]
            zero_cols = [k for k, s in enumerate(sigma) if s == 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                U = np.empty_like(A)
                for k, s in enumerate(sigma):
                    U[:, k] = A[:, k] / s if s != 0 else A[:, k]
            if zero_cols:
                U = _complete_basis(U, zero_cols, ar)
            U, V = _cleanup(U), _cleanup(V)
        for k in range(U.shape[1]):
            col = U[:, k]
            first = next((z for z in col if abs(z) != 0), None)
            if first is None:
                continue
            lead = next(i for i, z in enumerate(col) if abs(z) != 0)
            phase = np.conj(first) / abs(first)
            U[:, k] = col * phase
            V[:, k] = V[:, k] * phase
            # the product can leave a rounding residue in the imaginary part
            U[lead, k] = abs(first)
        if ar.is_object:
            Um, Vm = MpMatrix._wrap(U, store), MpMatrix._wrap(V, store)
        else:
            Um, Vm = MpMatrix(U, store), MpMatrix(V, store)
        return SvdTriplet.from_diagonal(Um, Vm, sigma)
