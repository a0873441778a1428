from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr

from svdrefine.bench.experiment import ExperimentConfig, run_experiment
from svdrefine.bench.generators import gen_random
from svdrefine.bench.jacobi import init_svd
from svdrefine.errors import (CertificationError, DegenerateSpectrumError, DivergenceError,
                              PartitionError, ShapeError)
from svdrefine.mpcore import (DiagonalMatrix, MpMatrix, kappa, max_sum_norm, precision_context,
                              residual_e, svd_residual)
from svdrefine.refiner import (CSV_HEADER, KAPPA_AUTO, KAPPA_PAIRS, PrecisionSchedule,
                               certify, ds_revisited_step, ds_step, e_index, hp_step,
                               order_constants, refine)
from svdrefine.triplet import SvdTriplet

from conftest import complex_gaussian, exact_triplet, scaled


def diagonal_triplet(values, precision=128, sigma=None):
    n = len(values)
    I = MpMatrix.identity(n, precision)
    return SvdTriplet.from_diagonal(I, I, sigma if sigma is not None else values)


def perturbed_start(rng, n, size, precision=256):
    """Triplet of a random square matrix with all factors perturbed by ``size``."""
    T, M = exact_triplet(rng, n, n, n, precision)
    U = T.U + scaled(complex_gaussian(rng, n, n, precision), size)
    V = T.V + scaled(complex_gaussian(rng, n, n, precision), size)
    with precision_context(precision):
        noise = [mpfr(size) * mpfr(float(x)) for x in rng.standard_normal(n)]
        values = [s.real + d for s, d in zip(T.sigma.diagonal(), noise)]
    return SvdTriplet.from_diagonal(U, V, values), M


# -- constants and certificate ----------------------------------------------


def test_order_constants_table():
    assert order_constants(1).exponent == 2 and order_constants(1).u0 == "0.0289"
    assert order_constants(2).exponent == Fraction(4, 3) and order_constants(2).u0 == "0.046"
    for p in (3, 4, 9):
        c = order_constants(p)
        assert (c.exponent, c.u0, c.gamma, c.sigma_factor) == (Fraction(4, 3), "0.0297",
                                                                "10.2", "2.62")
    assert (order_constants(1).gamma, order_constants(1).sigma_factor) == ("6.1", "1.67")
    assert (order_constants(2).gamma, order_constants(2).sigma_factor) == ("9.41", "2.1")
    with pytest.raises(ValueError):
        order_constants(0)


def test_e_index_definition():
    # eps/u0 = 1.01 * 2^-10 and 3 * 2^-10
    assert e_index(mpfr("0.0289") / 2 ** 10 * mpfr("1.01"), "0.0289") == 10
    assert e_index(mpfr("0.0289") / 2 ** 10 * 3, "0.0289") == 9
    assert e_index(0, "0.0289") is None


def test_certify_exact_decomposition():
    T = diagonal_triplet([2, 1])
    M = DiagonalMatrix([2, 1], precision=128).to_matrix()
    cert = certify(T, M, 1)
    assert cert.epsilon == 0 and cert.passed


def test_certify_small_residual():
    tiny = Fraction(1, 2 ** 40)
    T = diagonal_triplet([2, 1], sigma=[2, 1 - tiny])
    M = DiagonalMatrix([2, 1], precision=128).to_matrix()
    cert = certify(T, M, 1)
    second = 1 - tiny
    kap = max(Fraction(1), 1 / second, 1 / (2 - second) + 1 / (2 + second))
    expected = kap ** 2 * 2 * tiny
    with precision_context(128):
        assert abs(cert.epsilon - mpfr(expected.numerator) / expected.denominator) < \
            mpfr(2) ** -150
    assert abs(float(cert.epsilon) - 3.2336e-12) < 1e-15
    assert cert.passed


def test_close_pair_blows_up_the_certificate():
    gap = Fraction(1, 2 ** 10)
    T = diagonal_triplet([1 + gap, 1])
    sv = T.singular_values()
    assert abs(kappa(sv) - 2 ** 10) < 1
    # a defect far below u0 still fails once multiplied by (kappa K)^2
    U = T.U + scaled(MpMatrix([[0, 1], [1, 0]], 128), "1e-7")
    M = T.sigma
    cert = certify(SvdTriplet(U, T.V, T.sigma), M, 1)
    assert not cert.passed
    assert cert.eu_norm < mpfr("0.0289")


def test_certify_rejects_repeated_values_in_regular_mode():
    T = diagonal_triplet([1, 1])
    with pytest.raises(DegenerateSpectrumError):
        certify(T, T.sigma, 1)


def test_certify_cluster_mode_uses_cross_pairs_only():
    T = SvdTriplet(MpMatrix.identity(3, 128), MpMatrix.identity(3, 128),
                   DiagonalMatrix([5, 5, 1], precision=128).to_matrix(), (2, 1))
    cert = certify(T, T.sigma, 2)
    assert cert.kappa == 1 and cert.passed


def test_kappa_form_selection():
    T = diagonal_triplet([4, Fraction(1, 4)])
    M = T.sigma
    assert certify(T, M, 1).kappa == 4
    assert certify(T, M, 1, kappa_form=KAPPA_PAIRS).kappa == 1
    assert certify(T, M, 1, kappa_form=KAPPA_AUTO).kappa_form == KAPPA_PAIRS
    complex_M = M + MpMatrix([[1e-30j, 0], [0, 0]], 128)
    assert certify(T, complex_M, 1, kappa_form=KAPPA_AUTO).kappa_form == "full"
    with pytest.raises(ValueError):
        certify(T, M, 1, kappa_form="other")


# -- the refinement step --------------------------------------------------------


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_exact_decomposition_is_a_fixed_point(rng, p):
    T, M = exact_triplet(rng, 5, 4, 3, 128)
    out, report = hp_step(T, M, p)
    limit = mpfr(2) ** (-128 + 6)
    assert out.U.max_abs_difference(T.U) < limit
    assert out.V.max_abs_difference(T.V) < limit
    assert out.sigma.max_abs_difference(T.sigma) < limit


def test_first_order_step_doubles_the_index(rng):
    T, M = perturbed_start(rng, 4, "1e-5")
    before = certify(T, M, 1)
    assert before.passed
    after = certify(hp_step(T, M, 1)[0], M, 1)
    assert after.e_index >= 2 * before.e_index - 1


def test_second_order_inner_residual_bound(rng):
    # orthonormal factors, so the first inner residual is the plain residual
    sigma = DiagonalMatrix([2, 1], precision=256)
    D = scaled(complex_gaussian(rng, 2, 2, 256), "1e-4")
    I = MpMatrix.identity(2, 256)
    T = SvdTriplet(I, I, sigma.to_matrix())
    _, report = hp_step(T, sigma.to_matrix() + D, 2)
    eps1 = report.residual_norms[0]
    kap = kappa(sigma)
    K = 2
    with precision_context(256):
        q1 = 2 * kap + 2 * kap ** 2 * eps1 + mpfr(5) / 4 * kap ** 4 * K * eps1 ** 2 \
            + mpfr(1) / 4 * kap ** 4 * eps1 ** 3
    assert report.residual_norms[1] <= q1 * eps1 ** 2


def test_step_report_predicts_the_new_residual(rng):
    T, M = perturbed_start(rng, 4, "1e-6")
    out, report = hp_step(T, M, 3)
    assert len(report.residual_norms) == 4
    actual = max_sum_norm(svd_residual(M, out.U, out.V, out.sigma))
    assert abs(report.final_residual_norm - actual) < mpfr(2) ** -240
    moved = max_sum_norm(out.sigma - T.sigma)
    assert moved <= report.s_norm
    assert report.s_norm <= sum(report.residual_norms[:-1])


def test_step_needs_distinct_values():
    T = diagonal_triplet([1, 1])
    with pytest.raises(DegenerateSpectrumError):
        hp_step(T, T.sigma, 1)


def test_cluster_step_keeps_block_structure(rng):
    n = 5
    Q1 = complex_gaussian(rng, n, n, 128)
    base = DiagonalMatrix([3, 3, 1, 1, Fraction(1, 2)], precision=128)
    T = SvdTriplet(MpMatrix.identity(n, 128), MpMatrix.identity(n, 128), base.to_matrix(),
                   (2, 2, 1))
    M = base.to_matrix() + scaled(Q1, "1e-6")
    out, _ = hp_step(T, M, 2)
    labels = [0, 0, 1, 1, 2]
    for i in range(n):
        for j in range(n):
            if labels[i] != labels[j]:
                assert out.sigma.data[i, j] == 0
    assert out.partition == (2, 2, 1)
    before = max_sum_norm(svd_residual(M, T.U, T.V, T.sigma))
    after = max_sum_norm(svd_residual(M, out.U, out.V, out.sigma))
    assert after < before * mpfr("1e-6")


# -- second-order maps --------------------------------------------------------


def test_second_order_maps_fix_exact_decompositions(rng):
    T, M = exact_triplet(rng, 4, 4, 4, 128)
    for step in (ds_step, ds_revisited_step):
        out, report = step(T, M)
        assert report.residual_norm < mpfr(2) ** -120
        assert out.U.max_abs_difference(T.U) < mpfr(2) ** -120
        assert out.sigma.max_abs_difference(T.sigma) < mpfr(2) ** -120


def test_second_order_maps_are_third_order(rng):
    sigma = DiagonalMatrix([3, 2, 1], precision=256)
    I = MpMatrix.identity(3, 256)
    T = SvdTriplet(I, I, sigma.to_matrix())
    G = complex_gaussian(rng, 3, 3, 256)
    ratios = []
    for size in ("1e-4", "1e-6"):
        M = sigma.to_matrix() + scaled(G, size)
        before = max_sum_norm(svd_residual(M, I, I, sigma))
        out, report = ds_step(T, M)
        assert report.residual_norm == before
        ratios.append(max_sum_norm(svd_residual(M, out.U, out.V, out.sigma)) / before ** 3)
    # the constant in front of eps^3 barely changes when eps shrinks
    assert abs(ratios[1] / ratios[0] - 1) < 0.01


def test_second_order_maps_reject_cluster_mode():
    T = SvdTriplet(MpMatrix.identity(2, 64), MpMatrix.identity(2, 64),
                   DiagonalMatrix([1, 1], precision=64).to_matrix(), (2,))
    with pytest.raises(ValueError):
        ds_step(T, T.sigma)


# -- driver ------------------------------------------------------------------


def test_precision_schedule():
    schedule = PrecisionSchedule(64, 3)
    assert [schedule.bits(i) for i in range(4)] == [64, 256, 1024, 4096]
    assert PrecisionSchedule.fixed(100).bits(5) == 100


def test_refine_stops_on_exact_input():
    T = diagonal_triplet([2, 1])
    trace = refine(T.sigma, T, 2)
    assert len(trace.records) == 1 and trace.records[0].epsilon == 0
    assert trace.rows()[0][2] == "inf"


def test_refine_refuses_uncertified_start():
    T = diagonal_triplet([2, 1])
    M = T.sigma + MpMatrix([[0, "0.3"], [0, 0]], 128)
    with pytest.raises(CertificationError) as info:
        refine(M, T, 1)
    assert not info.value.certificate.passed


def test_divergence_guard_fires_at_fixed_precision():
    M = gen_random(6, 6, 64, seed=3)
    T = init_svd(M, 53).round(64)
    with pytest.raises(DivergenceError) as info:
        refine(M, T, 2, PrecisionSchedule.fixed(64), iterations=6)
    assert len(info.value.trace.records) >= 3


def test_refine_growth_on_random_square():
    cfg = ExperimentConfig("random", 20, (3,), seed=4, deflate=False)
    e = run_experiment(cfg).outcomes[0].trace.e_indices
    for a, b in zip(e, e[1:]):
        assert b >= 4 * a - 4


def test_refine_growth_ratio_depends_on_order():
    cfg = ExperimentConfig("random", 8, (1, 2), seed=4, deflate=False)
    result = run_experiment(cfg)
    for outcome in result.outcomes:
        p = outcome.order
        eps = outcome.trace.epsilons
        with precision_context(64):
            ratio = gmpy2.log2(eps[-1]) / gmpy2.log2(eps[-2])
        assert abs(ratio - (p + 1)) < 0.2 * (p + 1)


def test_trace_bookkeeping_and_unitarity_drift(rng):
    M = gen_random(6, 4, 512, seed=8)
    T = init_svd(M.round(53), 53).round(64)
    p = 2
    trace = refine(M, T, p, PrecisionSchedule(64, p), iterations=2, keep_triplets=True)
    assert len(trace.triplets) == 3
    cert0 = trace.certificate
    with precision_context(512):
        scale = (cert0.kappa * cert0.big_k) ** (mpfr(4) / 3)
        for i, rec in enumerate(trace.records):
            assert rec.e_index == e_index(rec.epsilon, cert0.u0)
            assert rec.eu_norm <= mpfr(2) ** (1 - (p + 1) ** i) * cert0.epsilon / scale * 1.01
    rows = trace.rows()
    assert len(rows[0]) == len(CSV_HEADER)
    assert [r[4] for r in rows] == ["64", "192", "576"]
    assert trace.records[1].ops.factorizations == 0
    assert trace.records[1].ops.matrix_mults > 0


def test_triplet_validation():
    I = MpMatrix.identity(3, 64)
    with pytest.raises(ShapeError):
        SvdTriplet(I.take_columns([0, 1]), I, MpMatrix.zeros(2, 3, 64))
    with pytest.raises(PartitionError):
        SvdTriplet(I, I, MpMatrix.zeros(3, 3, 64), (2, 2))
    T = SvdTriplet.from_diagonal(I, I, [3, 2, 1])
    assert T.mode == "regular" and T.shape == (3, 3, 3, 3)
    sub = T.columns([0, 2])
    assert [float(v) for v in sub.singular_values().values] == [3.0, 1.0]
    assert sub.reconstruct().shape == (3, 3)


def test_certificate_interface_names():
    T = diagonal_triplet([2, 1])
    cert = certify(T, T.sigma, 2)
    assert (cert.p, cert.a, cert.gamma1, cert.sigma_const) == (2, Fraction(4, 3), "9.41", "2.1")
    assert cert.kappa_val == cert.kappa and cert.k_val == cert.big_k == 2
