"""High-order refinement of approximate singular value decompositions.

The main step, :func:`hp_step`, improves a triplet ``(U, Sigma, V)`` of a
matrix ``M`` using only matrix products and entrywise divisions. Its error
drops from ``eps`` to roughly ``eps^(p+1)``. :func:`certify` checks a
sufficient condition for the iteration to converge, and :func:`refine`
drives the iteration with a growing working precision.

Two second-order maps are kept for comparison: :func:`ds_step` and
:func:`ds_revisited_step`.
"""

from __future__ import annotations

import dataclasses
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .coupler import solve, solve_regular
from .errors import (CertificationError, DegenerateSpectrumError, DivergenceError,
                     ShapeError)
from .mpcore import (MpMatrix, OpCounter, big_k, counting, kappa, kappa_cluster, max_sum_norm,
                     precision_context, residual_e, svd_residual, to_mpfr)
from .series import eval_c_series, eval_poly, s_coefficients
from .triplet import SvdTriplet


# --------------------------------------------------------------------------
# Certificate constants
# --------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class OrderConstants:
    """Constants of the convergence certificate for one series order.

    Attributes
    ----------
    exponent : Fraction
        Power applied to the condition quantities.
    u0 : str
        Threshold on the certificate value (decimal string, exact input).
    gamma : str
        Factor in the distance bound for the singular vectors.
    sigma_factor : str
        Factor in the distance bound for the singular values.
    """

    exponent: Fraction
    u0: str
    gamma: str
    sigma_factor: str

    def u0_at(self, precision):
        with precision_context(precision):
            return mpfr(self.u0)


_ORDER_CONSTANTS = {
    1: OrderConstants(Fraction(2), "0.0289", "6.1", "1.67"),
    2: OrderConstants(Fraction(4, 3), "0.046", "9.41", "2.1"),
    3: OrderConstants(Fraction(4, 3), "0.0297", "10.2", "2.62"),
}


def order_constants(p):
    """Certificate constants for order ``p`` (orders above 3 share one set)."""
    if int(p) != p or p < 1:
        raise ValueError("order must be a positive integer, got %r" % (p,))
    return _ORDER_CONSTANTS[min(int(p), 3)]


def e_index(epsilon, u0):
    """``-floor(log2(epsilon / u0))``; ``None`` when ``epsilon`` is zero."""
    if epsilon == 0:
        return None
    prec = max(epsilon.precision if isinstance(epsilon, mpfr) else 53, 64)
    with precision_context(prec):
        return -int(gmpy2.floor(gmpy2.log2(to_mpfr(epsilon) / to_mpfr(u0))))


# --------------------------------------------------------------------------
# Certification
# --------------------------------------------------------------------------

KAPPA_FULL = "full"
KAPPA_PAIRS = "pairs"
KAPPA_AUTO = "auto"


@dataclasses.dataclass(frozen=True)
class Certificate:
    """Result of :func:`certify`.

    Attributes
    ----------
    order : int
    epsilon : mpfr
        Certificate value; the run is certified when ``epsilon <= u0``.
    u0 : mpfr
    exponent : Fraction
    kappa, big_k : mpfr
        Condition quantities of the middle factor.
    eu_norm, ev_norm, delta_norm : mpfr
        Norms of the two orthonormality defects and of ``U^H M V - Sigma``.
    kappa_form : str
        ``"full"`` or ``"pairs"`` (see :func:`certify`).
    """

    order: int
    epsilon: object
    u0: object
    exponent: Fraction
    kappa: object
    big_k: object
    eu_norm: object
    ev_norm: object
    delta_norm: object
    kappa_form: str = KAPPA_FULL

    @property
    def passed(self):
        return bool(self.epsilon <= self.u0)

    @property
    def e_index(self):
        return e_index(self.epsilon, self.u0)

    # names used by the published interface
    @property
    def p(self):
        return self.order

    @property
    def a(self):
        return self.exponent

    @property
    def gamma1(self):
        return order_constants(self.order).gamma

    @property
    def sigma_const(self):
        return order_constants(self.order).sigma_factor

    @property
    def kappa_val(self):
        return self.kappa

    @property
    def k_val(self):
        return self.big_k

    def distance_bounds(self, iteration, columns):
        """Bounds on the distance between iterate ``iteration`` and the limit.

        Returns ``(vector_bound, value_bound)``: the first bounds the
        Frobenius distance of ``U`` and ``V`` to their limits, the second the
        distance of ``Sigma``.
        """
        consts = order_constants(self.order)
        p = self.order
        with precision_context(max(self.epsilon.precision, 64)):
            decay = mpfr(2) ** (1 - (p + 1) ** iteration) * self.epsilon
            vec = mpfr(consts.gamma) * gmpy2.sqrt(columns) * decay
            val = mpfr(consts.sigma_factor) * decay
        return vec, val


def residuals(T, M):
    """Orthonormality defects of both factors and the SVD residual.

    ``M`` is rounded to the working precision of ``T`` first.
    """
    prec = T.precision
    Mr = M.round(prec) if M.precision != prec else M
    if Mr.shape != (T.U.rows, T.V.rows):
        raise ShapeError("matrix shape %s does not match triplet %s" % (M.shape, T.shape))
    return residual_e(T.U), residual_e(T.V), svd_residual(Mr, T.U, T.V, T.sigma)


def _resolve_kappa_form(T, M, kappa_form):
    if kappa_form == KAPPA_AUTO:
        square = T.U.cols == T.V.cols
        if square and T.partition is None and M.is_real() and T.is_real():
            return KAPPA_PAIRS
        return KAPPA_FULL
    if kappa_form not in (KAPPA_FULL, KAPPA_PAIRS):
        raise ValueError("unknown kappa form %r" % (kappa_form,))
    return kappa_form


def certify(T, M, p, kappa_form=KAPPA_FULL, precomputed=None):
    """Evaluate the convergence certificate of order ``p``.

    Parameters
    ----------
    T : SvdTriplet
    M : MpMatrix
    p : int
        Series order.
    kappa_form : {"full", "pairs", "auto"}
        ``"full"`` uses every term of the condition quantity. ``"pairs"``
        drops the reciprocals of the singular values, which is valid when
        ``Sigma`` is square and all data are real (no imaginary diagonal
        residual needs to be divided by a singular value). ``"auto"`` picks
        ``"pairs"`` exactly in that situation.
    precomputed : tuple, optional
        ``(E_U, E_V, Delta)`` when already available.

    Returns
    -------
    Certificate

    Raises
    ------
    DegenerateSpectrumError
        When the condition quantity is infinite in regular mode.
    """
    consts = order_constants(p)
    form = _resolve_kappa_form(T, M, kappa_form)
    EU, EV, delta = residuals(T, M) if precomputed is None else precomputed
    prec = T.precision
    sv = T.singular_values()
    if T.partition is None:
        kap = kappa(sv, include_reciprocals=(form == KAPPA_FULL))
    else:
        kap = kappa_cluster(sv, T.partition)
    if gmpy2.is_infinite(kap):
        if T.partition is None:
            raise DegenerateSpectrumError(_first_degenerate_pair(sv.values),
                                          "condition quantity is infinite")
    K = big_k(sv)
    eu, ev, dn = max_sum_norm(EU), max_sum_norm(EV), max_sum_norm(delta)
    with precision_context(prec):
        a = mpfr(consts.exponent.numerator) / consts.exponent.denominator
        scale = (kap * K) ** a
        eps = max(scale * eu, scale * ev, kap ** a * K ** (a - 1) * dn)
        u0 = mpfr(consts.u0)
    return Certificate(int(p), eps, u0, consts.exponent, kap, K, eu, ev, dn, form)


def _first_degenerate_pair(values):
    for i, v in enumerate(values):
        if v == 0:
            return (i, i)
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if values[i] == values[j] or values[i] == -values[j]:
                return (i, j)
    return (0, 0)


# --------------------------------------------------------------------------
# Refinement steps
# --------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class StepReport:
    """Norms collected during one :func:`hp_step`.

    Attributes
    ----------
    omega_norm, lambda_norm : mpfr
        Size of the orthonormalizing factors for ``U`` and ``V``.
    theta_norm, psi_norm : mpfr
        Size of the final nearly unitary corrections.
    s_norm : mpfr
        Size of the total singular value correction.
    residual_norms : list of mpfr
        Norm of the intermediate residual before every inner solve, followed
        by the predicted residual of the new triplet.
    """

    omega_norm: object
    lambda_norm: object
    theta_norm: object
    psi_norm: object
    s_norm: object
    residual_norms: list

    @property
    def final_residual_norm(self):
        return self.residual_norms[-1]


def _sigma_values(T):
    return T.singular_values()


def hp_step(T, M, p, predict_residual=True):
    """One refinement step of order ``p``.

    Parameters
    ----------
    T : SvdTriplet
        Current approximation. Its precision is the working precision.
    M : MpMatrix
        The matrix, rounded to the working precision if needed.
    p : int
        Order; the step performs ``p`` inner coupling solves.
    predict_residual : bool
        Also form the residual the new triplet is expected to have (two
        extra products) and store its norm in the report.

    Returns
    -------
    SvdTriplet, StepReport
    """
    EU, EV, delta = residuals(T, M)
    return _hp_step(T, p, EU, EV, delta, predict_residual)


def _hp_step(T, p, EU, EV, delta, predict_residual=True):
    s_coeffs = s_coefficients(p)
    omega = eval_poly(s_coeffs, EU).hermitian_part()
    lam = eval_poly(s_coeffs, EV).hermitian_part()
    left = omega.add_identity(1)
    right = lam.add_identity(1)
    Sigma = T.sigma
    sv = _sigma_values(T)

    # after orthonormalizing both factors the middle block becomes core
    core = left @ (delta + Sigma) @ right
    resid = core - Sigma
    norms = [max_sum_norm(resid)]
    x_sum = y_sum = s_sum = None
    for k in range(p):
        if k > 0:
            theta = eval_c_series(p, x_sum)
            psi = eval_c_series(p, y_sum)
            resid = theta.H.add_identity(1) @ core @ psi.add_identity(1) - Sigma - s_sum
            norms.append(max_sum_norm(resid))
        sol = solve(resid, sv, T.partition)
        if x_sum is None:
            x_sum, y_sum, s_sum = sol.X, sol.Y, sol.S
        else:
            x_sum, y_sum, s_sum = x_sum + sol.X, y_sum + sol.Y, s_sum + sol.S
    theta = eval_c_series(p, x_sum)
    psi = eval_c_series(p, y_sum)
    left_total = theta.add_identity(1)
    right_total = psi.add_identity(1)
    new_sigma = Sigma + s_sum
    if predict_residual:
        predicted = left_total.H @ core @ right_total - new_sigma
        norms.append(max_sum_norm(predicted))
    U_new = T.U @ left @ left_total
    V_new = T.V @ right @ right_total
    report = StepReport(max_sum_norm(omega), max_sum_norm(lam), max_sum_norm(theta),
                        max_sum_norm(psi), max_sum_norm(s_sum), norms)
    return SvdTriplet(U_new, V_new, new_sigma, T.partition), report


def _require_regular(T, name):
    if T.partition is not None:
        raise ValueError("%s is only defined in regular mode" % name)


@dataclasses.dataclass(frozen=True)
class SecondOrderReport:
    """Norms collected during one second-order step.

    Attributes
    ----------
    residual_norm : mpfr
        Size of ``U^H M V - Sigma`` at the input triplet.
    s_norm, x_norm, y_norm : mpfr
        Size of the summed corrections of the two inner solves.
    """

    residual_norm: object
    s_norm: object
    x_norm: object
    y_norm: object


def ds_step(T, M):
    """Second-order step with a two-term correction and quadratic terms.

    The residual ``U^H M V - Sigma`` is used without first orthonormalizing
    the factors. Regular mode only.

    Returns
    -------
    SvdTriplet, SecondOrderReport
    """
    _require_regular(T, "ds_step")
    X, Y, S, report = _second_order_pieces(T, M)
    X1, Y1 = X[1], Y[1]
    Xt, Yt = X[0], Y[0]
    with precision_context(T.precision):
        half = mpfr(1) / 2
    U_new = T.U @ (Xt + (X1 @ X1).scale(half)).add_identity(1)
    V_new = T.V @ (Yt + (Y1 @ Y1).scale(half)).add_identity(1)
    return SvdTriplet(U_new, V_new, T.sigma + S, None), report


def ds_revisited_step(T, M):
    """Second-order step where the correction uses ``c_2`` of the total.

    Identical to :func:`ds_step` except that the factors become
    ``U (I + X + X^2/2)`` with ``X = X1 + X2``, which is unitary up to
    fourth order in ``X``.
    """
    _require_regular(T, "ds_revisited_step")
    X, Y, S, report = _second_order_pieces(T, M)
    U_new = T.U @ eval_c_series(2, X[0]).add_identity(1)
    V_new = T.V @ eval_c_series(2, Y[0]).add_identity(1)
    return SvdTriplet(U_new, V_new, T.sigma + S, None), report


def _second_order_pieces(T, M):
    prec = T.precision
    Mr = M.round(prec) if M.precision != prec else M
    delta = svd_residual(Mr, T.U, T.V, T.sigma)
    sv = T.singular_values()
    first = solve_regular(delta, sv)
    with precision_context(prec):
        half = mpfr(1) / 2
    shifted = delta + first.S
    second_resid = (first.X @ shifted).scale(-half) + (shifted @ first.Y).scale(half)
    second = solve_regular(second_resid, sv)
    X_total = first.X + second.X
    Y_total = first.Y + second.Y
    S_total = first.S + second.S
    report = SecondOrderReport(max_sum_norm(delta), max_sum_norm(S_total),
                               max_sum_norm(X_total), max_sum_norm(Y_total))
    return (X_total, first.X), (Y_total, first.Y), S_total, report


def ds_hypothesis(T, M):
    """``kappa^(5/4) K^(2/5) |Delta|`` for the plain second-order step."""
    return _hypothesis(T, M, Fraction(5, 4), Fraction(2, 5))


def ds_revisited_hypothesis(T, M):
    """``kappa^(6/5) K^(3/10) |Delta|`` for the revisited step."""
    return _hypothesis(T, M, Fraction(6, 5), Fraction(3, 10))


def _hypothesis(T, M, kappa_power, k_power):
    prec = T.precision
    Mr = M.round(prec) if M.precision != prec else M
    delta = svd_residual(Mr, T.U, T.V, T.sigma)
    sv = T.singular_values()
    kap, K = kappa(sv), big_k(sv)
    with precision_context(prec):
        return (kap ** (mpfr(kappa_power.numerator) / kappa_power.denominator)
                * K ** (mpfr(k_power.numerator) / k_power.denominator)
                * max_sum_norm(delta))


def ds_bound(eps):
    """Residual bound ``(8 + 18 e + 33 e^2) e^3`` of the plain step."""
    return (8 + 18 * eps + 33 * eps ** 2) * eps ** 3


def ds_revisited_bound(eps):
    """Residual bound ``(6 + 21 e + 54 e^2) e^3`` of the revisited step."""
    return (6 + 21 * eps + 54 * eps ** 2) * eps ** 3


# --------------------------------------------------------------------------
# Driver
# --------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class PrecisionSchedule:
    """Working precision per iteration.

    Iterate ``i`` (``i = 0`` being the start) is computed with
    ``base_bits * (p + 1)^i`` bits in geometric mode, ``base_bits`` otherwise.
    The accuracy of iterate ``i`` is about ``(p + 1)^i`` times that of the
    start, so a geometric schedule keeps rounding errors below the
    truncation error without paying for unused bits early on.
    """

    base_bits: int = 64
    order: int = 1
    geometric: bool = True

    def bits(self, iteration):
        if not self.geometric:
            return int(self.base_bits)
        return int(self.base_bits) * (int(self.order) + 1) ** int(iteration)

    @classmethod
    def fixed(cls, bits):
        return cls(int(bits), 1, False)


@dataclasses.dataclass
class IterationRecord:
    """Diagnostics of one iterate of :func:`refine`.

    Attributes
    ----------
    iteration : int
        Index of the iterate, 0 for the start.
    epsilon : mpfr
        Certificate value of the iterate.
    e_index : int or None
        ``-floor(log2(epsilon / u0))``; ``None`` if ``epsilon`` is zero.
    bits : int
        Working precision of the iterate.
    ops : OpCounter
        Work spent producing the iterate (including its certificate).
    eu_norm, ev_norm, delta_norm : mpfr
        Residual norms of the iterate.
    report : StepReport or None
        Step diagnostics, ``None`` for the start.
    """

    iteration: int
    epsilon: object
    e_index: object
    bits: int
    ops: OpCounter
    eu_norm: object
    ev_norm: object
    delta_norm: object
    report: object = None


@dataclasses.dataclass
class RefinementTrace:
    """Iterates and diagnostics produced by :func:`refine`."""

    order: int
    records: list
    triplet: SvdTriplet
    certificate: Certificate
    triplets: list = dataclasses.field(default_factory=list)

    @property
    def epsilons(self):
        return [r.epsilon for r in self.records]

    @property
    def e_indices(self):
        return [r.e_index for r in self.records]

    def rows(self):
        """One tuple per iterate, matching :data:`CSV_HEADER`."""
        out = []
        for r in self.records:
            e = "inf" if r.e_index is None else str(r.e_index)
            out.append((str(r.iteration), str(self.order), e,
                        "%.6e" % float(r.epsilon), str(r.bits), str(r.ops.matrix_mults)))
        return out


CSV_HEADER = ("iteration", "order", "e_i", "epsilon_i", "bits", "mults")


def refine(M, T0, p, schedule=None, iterations=3, target_epsilon=None,
           divergence_guard=True, kappa_form=KAPPA_FULL, keep_triplets=False):
    """Certify ``T0`` and apply :func:`hp_step` repeatedly.

    Parameters
    ----------
    M : MpMatrix
        The matrix. It should carry at least the precision of the last
        iterate; it is rounded to the working precision of every step.
    T0 : SvdTriplet
        Starting approximation.
    p : int
        Order of every step.
    schedule : PrecisionSchedule, optional
        Defaults to a geometric schedule starting at the precision of ``T0``.
    iterations : int
        Maximum number of steps.
    target_epsilon : float or mpfr, optional
        Stop once the certificate value drops to this level.
    divergence_guard : bool
        Abort with :class:`DivergenceError` when the certificate value fails
        to halve in two consecutive steps.
    kappa_form : str
        Passed to :func:`certify`.
    keep_triplets : bool
        Keep every iterate in ``trace.triplets``.

    Raises
    ------
    CertificationError
        When the start is not certified.
    DivergenceError
        When the divergence guard fires.
    """
    schedule = schedule or PrecisionSchedule(T0.precision, p, True)
    bits0 = schedule.bits(0)
    T = T0.round(bits0)
    counter = OpCounter()
    with counting(counter):
        cert0 = certify(T, M, p, kappa_form)
    if not cert0.passed:
        raise CertificationError(cert0)
    records = [IterationRecord(0, cert0.epsilon, cert0.e_index, bits0, counter,
                               cert0.eu_norm, cert0.ev_norm, cert0.delta_norm)]
    trace = RefinementTrace(int(p), records, T, cert0, [T] if keep_triplets else [])
    stalls = 0
    for i in range(1, int(iterations) + 1):
        previous = records[-1].epsilon
        if previous == 0:
            break
        if target_epsilon is not None and previous <= target_epsilon:
            break
        bits = schedule.bits(i)
        T = T.round(bits)
        Mi = M.round(bits) if M.precision != bits else M
        counter = OpCounter()
        with counting(counter):
            T, report = hp_step(T, Mi, p)
            cert = certify(T, Mi, p, cert0.kappa_form)
        records.append(IterationRecord(i, cert.epsilon, cert.e_index, bits, counter,
                                       cert.eu_norm, cert.ev_norm, cert.delta_norm, report))
        trace.triplet = T
        if keep_triplets:
            trace.triplets.append(T)
        with precision_context(bits):
            stalled = cert.epsilon > previous / 2
        stalls = stalls + 1 if stalled else 0
        if divergence_guard and stalls >= 2:
            raise DivergenceError(trace)
    return trace
