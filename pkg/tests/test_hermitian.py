"""Tests for the dense self-adjoint core."""

import numpy as np
import pytest

from specshift import (DegeneratePair, HermitianOperator, NonFinite,
                       apply_function, decompose, get_function,
                       increment_ratio, operator_scale, schatten_norm,
                       spectral_truncation, trace_transfer_check)

from conftest import random_hermitian


class TestHermitianOperator:
    def test_symmetrization_is_exact_storage(self, rng):
        m = rng.uniform(-1, 1, (4, 4)) + 1j * rng.uniform(-1, 1, (4, 4))
        op = HermitianOperator(m)
        assert np.array_equal(op.matrix, op.matrix.conj().T)

    def test_real_input_stays_real(self):
        op = HermitianOperator([[1.0, 2.0], [2.0, 3.0]])
        assert op.matrix.dtype == np.float64

    def test_rejects_nan(self):
        with pytest.raises(NonFinite):
            HermitianOperator([[np.nan, 0.0], [0.0, 1.0]])

    def test_rejects_inf(self):
        with pytest.raises(NonFinite):
            HermitianOperator([[np.inf, 0.0], [0.0, 1.0]])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            HermitianOperator([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])

    def test_matrix_is_read_only(self):
        op = HermitianOperator([[1.0]])
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 2.0


class TestDecompose:
    def test_diagonal_input(self):
        dec = decompose(HermitianOperator(np.diag([3.0, -1.0])))
        np.testing.assert_allclose(dec.eigenvalues, [-1.0, 3.0])
        # columns are signed unit vectors picking out the sorted entries
        np.testing.assert_allclose(np.abs(dec.eigenvectors), [[0, 1], [1, 0]])

    def test_off_diagonal_2x2(self):
        dec = decompose(HermitianOperator([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(dec.eigenvalues, [-1.0, 1.0], atol=1e-14)
        r = 1 / np.sqrt(2)
        got = np.abs(dec.eigenvectors)
        np.testing.assert_allclose(got, [[r, r], [r, r]], atol=1e-14)

    def test_zero_operator(self):
        dec = decompose(HermitianOperator(np.zeros((3, 3))))
        np.testing.assert_allclose(dec.eigenvalues, np.zeros(3))
        u = dec.eigenvectors
        np.testing.assert_allclose(u.conj().T @ u, np.eye(3), atol=1e-14)

    def test_contract_on_random_matrices(self, rng):
        for _ in range(25):
            dim = int(rng.integers(2, 9))
            a = random_hermitian(rng, dim, complex_entries=bool(rng.integers(2)))
            dec = decompose(a)
            u, w = dec.eigenvectors, dec.eigenvalues
            assert np.abs(u.conj().T @ u - np.eye(dim)).max() <= 1e-10
            recon = np.abs((u * w) @ u.conj().T - a.matrix).max()
            assert recon <= 1e-10 * max(1.0, np.abs(a.matrix).max())
            assert np.all(np.diff(w) >= 0)


class TestApplyFunction:
    def test_identity_returns_same_matrix(self, rng):
        a = random_hermitian(rng, 5)
        out = apply_function(get_function("identity"), a)
        np.testing.assert_allclose(out.matrix, a.matrix, atol=1e-10)

    def test_square_of_involution_is_identity(self):
        a = HermitianOperator([[0.0, 1.0], [1.0, 0.0]])
        out = apply_function(get_function("poly", (0, 0, 1)), a)
        np.testing.assert_allclose(out.matrix, np.eye(2), atol=1e-14)

    def test_abs_on_diagonal(self):
        a = HermitianOperator(np.diag([-3.0, 2.0]))
        out = apply_function(get_function("abs"), a)
        np.testing.assert_allclose(out.matrix, np.diag([3.0, 2.0]))

    def test_polynomial_homomorphism(self, rng):
        coeffs = (1.0, 0.5, -2.0, 0.0, 0.25)
        f = get_function("poly", coeffs)
        for _ in range(20):
            dim = int(rng.integers(2, 9))
            a = random_hermitian(rng, dim)
            m = a.matrix
            direct = np.zeros_like(m)
            power = np.eye(dim)
            for c in coeffs:
                direct = direct + c * power
                power = power @ m
            err = np.abs(apply_function(f, a).matrix - direct).max()
            assert err <= 1e-9 * (1 + schatten_norm(a, np.inf)) ** 4

    def test_diagonal_entrywise_exact(self, rng):
        vals = rng.uniform(-2, 2, 6)
        a = HermitianOperator(np.diag(vals))
        out = apply_function(get_function("abs"), a)
        assert np.array_equal(out.matrix, np.diag(np.abs(vals)))


class TestSchattenNorm:
    def test_diagonal_trace_norm(self):
        assert schatten_norm(np.diag([1.0, -2.0, 3.0]), 1) == 6.0

    def test_frobenius(self):
        assert schatten_norm(np.array([[0.0, 1.0], [1.0, 0.0]]), 2) == pytest.approx(
            np.sqrt(2), rel=1e-15)

    def test_rank_one_operator_norm(self, rng):
        u = rng.standard_normal(4)
        u *= np.sqrt(5.0) / np.linalg.norm(u)
        x = np.outer(u, u)
        assert schatten_norm(x, np.inf) == pytest.approx(5.0, rel=1e-12)

    def test_rejects_other_p(self):
        with pytest.raises(ValueError):
            schatten_norm(np.eye(2), 3)

    def test_rejects_nonfinite(self):
        with pytest.raises(NonFinite):
            schatten_norm(np.array([[np.nan, 0.0], [0.0, 1.0]]), 1)

    def test_unitary_invariance(self, rng):
        for _ in range(20):
            dim = int(rng.integers(2, 9))
            x = rng.uniform(-1, 1, (dim, dim))
            q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
            q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
            for p in (1, 2, np.inf):
                base = schatten_norm(x, p)
                assert abs(schatten_norm(q @ x @ q.T, p) - base) <= 1e-9 * base

    def test_norm_ordering(self, rng):
        for _ in range(20):
            dim = int(rng.integers(2, 9))
            x = rng.uniform(-1, 1, (dim, dim))
            n1, n2, ninf = (schatten_norm(x, 1), schatten_norm(x, 2),
                            schatten_norm(x, np.inf))
            slack = 1e-12 * n1
            assert ninf <= n2 + slack
            assert n2 <= n1 + slack
            assert n1 <= dim * ninf + slack

    def test_triangle_inequality(self, rng):
        for _ in range(20):
            dim = int(rng.integers(2, 9))
            x = rng.uniform(-1, 1, (dim, dim))
            y = rng.uniform(-1, 1, (dim, dim))
            for p in (1, 2, np.inf):
                lhs = schatten_norm(x + y, p)
                rhs = schatten_norm(x, p) + schatten_norm(y, p)
                assert lhs <= rhs * (1 + 1e-10)


class TestSpectralTruncation:
    def test_keeps_small_eigenvalues(self):
        a = HermitianOperator(np.diag([0.1, 0.5, 2.0]))
        a_d, discarded = spectral_truncation(a, 1.0)
        np.testing.assert_allclose(a_d.matrix, np.diag([0.1, 0.5, 0.0]), atol=1e-14)
        assert discarded == 1

    def test_large_delta_keeps_everything(self, rng):
        a = random_hermitian(rng, 4)
        delta = schatten_norm(a, np.inf) + 1.0
        a_d, discarded = spectral_truncation(a, delta)
        assert discarded == 0
        np.testing.assert_allclose(a_d.matrix, a.matrix, atol=1e-12)

    def test_zero_operator(self):
        a = HermitianOperator(np.zeros((2, 2)))
        a_d, discarded = spectral_truncation(a, 0.5)
        assert discarded == 0
        np.testing.assert_allclose(a_d.matrix, np.zeros((2, 2)))

    def test_rank_and_spectrum_contract(self, rng):
        for _ in range(20):
            dim = int(rng.integers(2, 9))
            a = random_hermitian(rng, dim)
            delta = float(rng.uniform(0.2, 1.5))
            a_d, discarded = spectral_truncation(a, delta)
            eigs = decompose(a).eigenvalues
            assert discarded == int(np.count_nonzero(np.abs(eigs) > delta))
            kept = decompose(a_d).eigenvalues
            assert np.all((np.abs(kept) <= delta + 1e-12) | (np.abs(kept) < 1e-12))
            # rank of the difference matches the discarded count exactly
            s = np.linalg.svd(a.matrix - a_d.matrix, compute_uv=False)
            assert int(np.count_nonzero(s > 1e-10)) == discarded

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(ValueError):
            spectral_truncation(HermitianOperator([[1.0]]), 0.0)


class TestIncrementRatio:
    def test_identity_gives_one(self, rng):
        f = get_function("identity")
        for _ in range(10):
            dim = int(rng.integers(2, 9))
            a = random_hermitian(rng, dim)
            b = random_hermitian(rng, dim)
            w = increment_ratio(f, a, b)
            assert abs(w.ratio_s1 - 1.0) <= 1e-12
            assert abs(w.ratio_op - 1.0) <= 1e-12

    def test_constant_gives_zero(self, rng):
        f = get_function("constant", (2.5,))
        a = random_hermitian(rng, 3)
        b = random_hermitian(rng, 3)
        w = increment_ratio(f, a, b)
        assert w.ratio_s1 <= 1e-12
        assert w.increment_s1 <= 1e-12

    def test_abs_pair_with_equal_moduli(self):
        # oracle: direct eigendecomposition shows |A| = |B| = I
        a_mat = np.diag([1.0, -1.0])
        b_mat = np.array([[0.0, 1.0], [1.0, 0.0]])
        for m in (a_mat, b_mat):
            w, u = np.linalg.eigh(m)
            np.testing.assert_allclose((u * np.abs(w)) @ u.T, np.eye(2), atol=1e-14)
        w = increment_ratio(get_function("abs"),
                            HermitianOperator(a_mat), HermitianOperator(b_mat))
        assert w.ratio_s1 <= 1e-14

    def test_rejects_equal_pair(self, rng):
        a = random_hermitian(rng, 3)
        with pytest.raises(DegeneratePair):
            increment_ratio(get_function("identity"), a, a)

    def test_rejects_dim_mismatch(self, rng):
        with pytest.raises(ValueError):
            increment_ratio(get_function("identity"),
                            random_hermitian(rng, 2), random_hermitian(rng, 3))

    def test_complex_pair_gives_real_ratios(self, rng):
        f = get_function("abs")
        a = random_hermitian(rng, 4, complex_entries=True)
        b = random_hermitian(rng, 4, complex_entries=True)
        w = increment_ratio(f, a, b)
        assert w.ratio_s1 >= 0.0 and np.isfinite(w.ratio_s1)
        assert w.ratio_op >= 0.0 and np.isfinite(w.ratio_op)

    def test_ratios_recomputable(self, rng):
        f = get_function("smoothed_abs", (0.1,))
        for _ in range(10):
            dim = int(rng.integers(2, 7))
            a = random_hermitian(rng, dim)
            b = random_hermitian(rng, dim)
            w1 = increment_ratio(f, a, b)
            w2 = increment_ratio(f, w1.a, w1.b)
            assert w2.ratio_s1 == pytest.approx(w1.ratio_s1, rel=1e-9)
            assert w2.ratio_op == pytest.approx(w1.ratio_op, rel=1e-9)


class TestTraceTransfer:
    def test_equal_pair_all_zero(self, rng):
        a = random_hermitian(rng, 4)
        rep = trace_transfer_check(get_function("abs"), 0.5, a, a)
        assert rep.total_increment_s1 <= 1e-14
        assert rep.reassembly_residual_s1 <= 1e-14

    def test_identity_telescopes(self, rng):
        f = get_function("identity")
        for _ in range(10):
            dim = int(rng.integers(2, 9))
            a = random_hermitian(rng, dim)
            b = random_hermitian(rng, dim)
            rep = trace_transfer_check(f, float(rng.uniform(0.2, 1.5)), a, b)
            assert rep.reassembly_residual_s1 <= 1e-12 * rep.scale

    def test_abs_rank_one_tail(self):
        # oracle: with delta = 1 only the eigenvalue 3 is discarded, so the
        # tail |A| - |A_delta| = diag(0, 3) has rank 1
        a = HermitianOperator(np.diag([0.5, 3.0]))
        b = HermitianOperator(np.diag([0.4, 3.0]))
        rep = trace_transfer_check(get_function("abs"), 1.0, a, b)
        assert rep.discarded_rank_a == 1
        assert rep.tail_a_rank == 1
        assert rep.tail_a_s1 == pytest.approx(3.0, rel=1e-12)
        assert rep.within_tolerance

    def test_tail_rank_bounded_by_discarded(self, rng):
        f = get_function("smoothed_abs", (0.05,))
        for _ in range(10):
            dim = int(rng.integers(2, 8))
            a = random_hermitian(rng, dim, scale=1.5)
            b = random_hermitian(rng, dim, scale=1.5)
            rep = trace_transfer_check(f, float(rng.uniform(0.3, 1.2)), a, b)
            assert rep.tail_a_rank <= rep.discarded_rank_a
            assert rep.tail_b_rank <= rep.discarded_rank_b
            assert rep.within_tolerance

    def test_shift_invariance(self, rng):
        # functions differing by a constant produce identical reports
        a = random_hermitian(rng, 4)
        b = random_hermitian(rng, 4)
        r1 = trace_transfer_check(get_function("exp"), 0.7, a, b)
        assert r1.within_tolerance
        assert r1.tail_a_rank <= r1.discarded_rank_a


def test_operator_scale_floor_is_one(rng):
    a = HermitianOperator(np.diag([1e-3, -1e-3]))
    assert operator_scale(a, a) == 1.0
