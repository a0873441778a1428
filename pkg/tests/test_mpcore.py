from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpc, mpfr

from svdrefine.mpcore import (DiagonalMatrix, MpMatrix, OpCounter, big_k, counting, kappa,
                              kappa_cluster, kappa_pair, max_sum_norm, precision_context,
                              residual_e, svd_residual)

from conftest import complex_gaussian


def test_max_sum_norm_takes_larger_of_row_and_column_sums():
    A = MpMatrix([[1, -2], [3, 4]], 64)
    assert max_sum_norm(A) == 7
    assert max_sum_norm(MpMatrix.identity(2, 64)) == 1
    assert max_sum_norm(MpMatrix.zeros(3, 2, 64)) == 0


def test_max_sum_norm_uses_moduli_of_complex_entries():
    A = MpMatrix([[3 + 4j, 0], [0, 1j]], 64)
    assert max_sum_norm(A) == 5


def test_max_sum_norm_is_submultiplicative(rng):
    for _ in range(30):
        A = complex_gaussian(rng, 5, 5, 96)
        B = complex_gaussian(rng, 5, 5, 96)
        assert max_sum_norm(A @ B) <= max_sum_norm(A) * max_sum_norm(B)


def test_residual_e_examples():
    assert max_sum_norm(residual_e(MpMatrix.identity(3, 64))) == 0
    E = residual_e(MpMatrix([[2, 0], [0, 2]], 64))
    assert E.max_abs_difference(MpMatrix([[3, 0], [0, 3]], 64)) == 0
    column = MpMatrix([[1], [0], [0]], 64)
    assert residual_e(column).shape == (1, 1)
    assert residual_e(column).data[0, 0] == 0


def test_residual_e_is_exactly_hermitian(rng):
    W = complex_gaussian(rng, 7, 4, 113)
    E = residual_e(W)
    assert E.max_abs_difference(E.H) == 0


def test_svd_residual_examples():
    M = MpMatrix([[2, 0], [0, 1]], 64)
    I = MpMatrix.identity(2, 64)
    assert max_sum_norm(svd_residual(M, I, I, DiagonalMatrix([2, 1], precision=64))) == 0
    R = svd_residual(M, I, I, DiagonalMatrix([2, 0.5], precision=64))
    assert R.max_abs_difference(MpMatrix([[0, 0], [0, 0.5]], 64)) == 0
    Z = MpMatrix.zeros(2, 1, 64)
    U = MpMatrix([[1], [0]], 64)
    V = MpMatrix([[1]], 64)
    R = svd_residual(Z, U, V, DiagonalMatrix([1], precision=64))
    assert R.data[0, 0] == -1


def test_kappa_examples():
    with precision_context(64):
        four_thirds = mpfr(4) / 3
    assert kappa(DiagonalMatrix([2, 1], precision=64)) == four_thirds
    assert kappa(DiagonalMatrix([1], precision=64)) == 1
    assert kappa(DiagonalMatrix([3, 1], precision=64)) == 1


def test_kappa_is_infinite_on_repeated_or_zero_values():
    assert gmpy2.is_infinite(kappa(DiagonalMatrix([1, 1], precision=64)))
    assert gmpy2.is_infinite(kappa(DiagonalMatrix([1, 0], precision=64)))


def test_kappa_pairs_form_drops_reciprocals():
    S = DiagonalMatrix([4, 0.25], precision=64)
    assert kappa(S) == 4
    # the only pair term is 1/3.75 + 1/4.25 < 1
    assert kappa(S, include_reciprocals=False) == 1
    with precision_context(64):
        sixteen_thirds = mpfr(16) / 3
    # 1/0.25 + 1/0.75
    assert kappa_pair(0.5, 0.25, 64) == sixteen_thirds


def test_kappa_cluster_examples():
    assert kappa_cluster(DiagonalMatrix([1, 1], precision=64), (2,)) == 1
    assert kappa_cluster(DiagonalMatrix([5, 5, 1], precision=64), (2, 1)) == 1
    with precision_context(200):
        values = [mpfr(2), mpfr("1.9"), mpfr(1)]
        expected = 1 / (values[1] - 1) + 1 / (values[1] + 1)
    got = kappa_cluster(DiagonalMatrix(values, precision=200), (2, 1))
    assert abs(got - expected) < mpfr(2) ** -190
    assert abs(float(got) - 1.4559) < 1e-4


def test_kappa_and_big_k_are_at_least_one(rng):
    for _ in range(20):
        values = sorted(rng.uniform(1, 9, 4), reverse=True)
        S = DiagonalMatrix(values, precision=64)
        assert kappa(S) >= 1 and big_k(S) >= 1
    assert big_k(DiagonalMatrix([0.5], precision=64)) == 1
    assert big_k(DiagonalMatrix([3, 1], precision=64)) == 3
    assert big_k(DiagonalMatrix([1, 1, 1], precision=64)) == 1


def test_results_carry_the_larger_operand_precision():
    A = MpMatrix([[Fraction(1, 3)]], 64)
    B = MpMatrix([[Fraction(1, 3)]], 256)
    assert (A + B).precision == 256
    assert (A @ B).precision == 256
    assert (A @ B).data[0, 0].precision == (256, 256)


def test_raising_precision_changes_little(rng):
    A = complex_gaussian(rng, 6, 6, 64)
    B = complex_gaussian(rng, 6, 6, 64)
    low = A @ B
    high = A.round(256) @ B.round(256)
    with precision_context(256):
        rel = high.max_abs_difference(low) / max_sum_norm(high)
    assert rel <= mpfr(2) ** (-64 + 4)


def test_round_trips_between_precisions():
    A = MpMatrix([[Fraction(1, 3), Fraction(2, 7)]], 300)
    narrow = A.round(64)
    assert narrow.precision == 64
    assert narrow.data[0, 0].precision == (64, 64)
    assert narrow.round(300).max_abs_difference(narrow) == 0


def test_precision_floor_is_enforced():
    with pytest.raises(ValueError):
        MpMatrix([[1]], 32)


def test_adjoint_keeps_full_precision():
    with precision_context(256):
        z = mpc("0.1+0.3j")
        expected = z.conjugate()
    A = MpMatrix([[z]], 256)
    assert A.H.data[0, 0].precision == (256, 256)
    assert A.H.data[0, 0] == expected


def test_counter_tallies_products_and_nests():
    A = MpMatrix.identity(3, 64)
    outer = OpCounter()
    with counting(outer):
        A @ A
        with counting() as inner:
            A @ A
            A + A
    assert inner.matrix_mults == 1 and inner.matrix_adds == 1
    assert outer.matrix_mults == 2
    assert outer.factorizations == 0 and outer.solves == 0
    delta = outer - inner
    assert delta.matrix_mults == 1
    outer.reset()
    assert outer.matrix_mults == 0


def test_conversion_from_numpy_is_exact():
    arr = np.array([[0.1 + 0.2j, -3.5]])
    A = MpMatrix(arr, 128)
    assert complex(A.data[0, 0]) == 0.1 + 0.2j
    assert A.to_numpy()[0, 1] == -3.5


def test_interface_names(rng):
    from svdrefine import mpcore, series
    from svdrefine.spectra import ClusterPartition
    from svdrefine.triplet import SvdTriplet

    assert mpcore.paper_norm is max_sum_norm
    assert mpcore.residual_E is residual_e
    assert series.sp_coefficients(3) == series.s_coefficients(3)
    assert series.cp_coefficients(4) == series.c_coefficients(4)
    I = MpMatrix.identity(2, 64)
    T = SvdTriplet.from_diagonal(I, I, [2, 1])
    M = MpMatrix([[2, 0], [0, 3]], 64)
    assert svd_residual(M, T).max_abs_difference(svd_residual(M, I, I, T.sigma)) == 0
    S = DiagonalMatrix([5, 5, 1], precision=64)
    assert kappa_cluster(S, ClusterPartition((2, 1))) == kappa_cluster(S, (2, 1))
