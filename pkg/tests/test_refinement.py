import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from urvrefine.diagnostics import (
    MatrixSpec,
    VnnMode,
    generate_test_matrix,
    random_upper_triangular,
    triangularize,
)
from urvrefine.matrix import MatrixError, frobenius_norm
from urvrefine.oracle import singular_values, svd
from urvrefine.refinement import (
    RefinementError,
    RefineOptions,
    StopReason,
    alignment,
    even_sweep,
    init,
    odd_sweep,
    rank_revealing_urv,
    refine,
)

from .conftest import BLOCK_LIMIT, COUNTEREXAMPLE, EXAMPLE1

KEEP = RefineOptions(keep_iterates=True)


def _form_ok(R, l):
    n = R.shape[0]
    if l % 2 == 0:
        return np.all(np.tril(R, -1) == 0.0)
    lead = R[:-1, :-1]
    return np.all(np.tril(lead, -1) == 0.0) and np.all(R[:-1, -1] == 0.0)


class TestInit:
    def test_diagonal(self):
        st_ = init(np.diag([1.0, 2.0, 10.0]))
        assert st_.l == 0
        assert st_.e == 10.0
        assert st_.history[0].h_norm == 0.0
        assert np.array_equal(st_.G_odd, np.eye(3)) and np.array_equal(st_.G_even, np.eye(3))

    def test_example1(self):
        st_ = init(EXAMPLE1)
        assert st_.e == 10.0
        assert st_.history[0].h_norm == pytest.approx(math.sqrt(2) * 1e-6, rel=1e-15)

    def test_negative_corner(self):
        R0 = np.array([[2.0, 1.0], [0.0, -5.0]])
        st_ = init(R0)
        assert st_.e == 5.0
        assert st_.history[0].corner_flipped
        np.testing.assert_array_equal(st_.reconstruct(), st_.R)

    def test_errors(self):
        with pytest.raises(MatrixError):
            init([[3.0]])
        with pytest.raises(MatrixError):
            init([[1.0, 2.0], [0.0, 0.0]])
        with pytest.raises(MatrixError):
            init(COUNTEREXAMPLE)


class TestSweeps:
    def test_stationary(self):
        D = np.diag([1.0, -2.0, 10.0])
        st_ = init(D)
        odd_sweep(st_)
        assert st_.l == 1
        np.testing.assert_array_equal(st_.R, D)
        even_sweep(st_)
        np.testing.assert_array_equal(st_.R, D)
        assert st_.history[-1].rotations == 0

    def test_2x2_by_hand(self):
        st_ = init(np.array([[1.0, 1.0], [0.0, 1.0]]))
        odd_sweep(st_)
        r2 = math.sqrt(2.0)
        np.testing.assert_allclose(st_.R, [[r2, 0.0], [1 / r2, 1 / r2]], rtol=1e-15)
        assert st_.R[0, 1] == 0.0
        golden = (math.sqrt(5.0) + 1) / 2
        np.testing.assert_allclose(singular_values(st_.R), [golden, 1 / golden], rtol=1e-15)
        even_sweep(st_)
        r10 = math.sqrt(10.0)
        np.testing.assert_allclose(st_.R, [[math.sqrt(2.5), 1 / r10], [0.0, 2 / r10]], rtol=1e-15)
        assert st_.R[1, 0] == 0.0
        assert st_.e < 1.0
        np.testing.assert_allclose(singular_values(st_.R), [golden, 1 / golden], rtol=1e-13)

    def test_counterexample_first_row_untouched(self):
        R0 = triangularize(COUNTEREXAMPLE)
        st_ = init(R0)
        odd_sweep(st_)
        assert np.array_equal(st_.R[0], R0[0])
        assert np.array_equal(st_.R[:, 0], R0[:, 0])
        assert st_.R[2, 0] == 0.0

    def test_parity_errors(self):
        st_ = init(EXAMPLE1)
        with pytest.raises(RefinementError):
            even_sweep(st_)
        odd_sweep(st_)
        with pytest.raises(RefinementError):
            odd_sweep(st_)

    def test_forms_exact_and_corner_positive(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 9))
            st_ = init(random_upper_triangular(n, rng))
            for _ in range(6):
                odd_sweep(st_)
                assert _form_ok(st_.R, st_.l)
                even_sweep(st_)
                assert _form_ok(st_.R, st_.l)
            assert all(rec.e > 0 for rec in st_.history)

    def test_factors_do_not_change_iterates(self, rng):
        R0 = random_upper_triangular(6, rng)
        a = refine(R0)
        b = refine(R0, RefineOptions(accumulate_factors=False))
        assert np.array_equal(a.final_state.R, b.final_state.R)
        assert b.final_state.G_odd is None
        with pytest.raises(RefinementError):
            alignment(b.final_state, svd(R0.array))


class TestRefine:
    def test_example1_fourteen_sweeps(self):
        sig = svd(EXAMPLE1).sigma[-1]
        rep = refine(EXAMPLE1, RefineOptions(tol_h=0.0, tol_e_stagnation=0.0,
                                             max_double_sweeps=14))
        assert rep.reason is StopReason.MAX_ITER and not rep.converged
        assert rep.final_state.l == 28
        assert len(rep.history) == 29
        assert abs(rep.final_e - sig) <= 1e-10 * sig
        assert rep.final_e >= sig - 1e-13
        assert repr(rep.final_e).startswith("0.999999999999")

    def test_counterexample_stalls_at_block_value(self):
        rep = refine(triangularize(COUNTEREXAMPLE))
        assert rep.reason is StopReason.E_STAGNATION
        assert rep.final_e == pytest.approx(BLOCK_LIMIT, rel=1e-9)
        assert rep.final_e > 8 * svd(COUNTEREXAMPLE).sigma[-1]

    def test_diagonal_stops_immediately(self):
        rep = refine(np.diag([1.0, 2.0, 10.0]))
        assert rep.reason is StopReason.H_NORM_TOL
        assert rep.double_sweeps == 1
        assert rep.final_e == 10.0

    def test_options_validation(self):
        with pytest.raises(ValueError):
            RefineOptions(max_double_sweeps=0)
        with pytest.raises(ValueError):
            RefineOptions(tol_h=-1.0)

    def test_record_rho(self):
        rep = refine(EXAMPLE1, RefineOptions(record_rho=True, max_double_sweeps=3))
        assert rep.history[0].rho == 10.0
        assert all(r.rho is not None and r.rho > 0 for r in rep.history)

    def test_deterministic(self, rng):
        R0 = random_upper_triangular(7, rng)
        a, b = refine(R0), refine(R0)
        assert np.array_equal(a.final_state.R, b.final_state.R)
        assert [r.e for r in a.history] == [r.e for r in b.history]


class TestAlignment:
    def test_identity_factors(self):
        s0 = svd(EXAMPLE1)
        av, au = alignment(init(EXAMPLE1), s0)
        assert av == s0.vnn and au == s0.unn

    def test_example1_converges_to_unit(self):
        s0 = svd(EXAMPLE1)
        rep = refine(EXAMPLE1)
        av, au = alignment(rep.final_state, s0)
        assert abs(av) >= 1 - 1e-8 and abs(au) >= 1 - 1e-8
        assert abs(av) <= 1 + 1e-14 and abs(au) <= 1 + 1e-14

    def test_counterexample_stays_orthogonal(self):
        R0 = triangularize(COUNTEREXAMPLE)
        s0 = svd(R0)
        rep = refine(R0, KEEP)
        for snap in rep.final_state.snapshots:
            assert np.dot(snap.G_odd[-1], s0.V[:, -1]) == 0.0


def _run_corpus(seed, count, nmax=12, **opts):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(2, nmax + 1))
        R0 = random_upper_triangular(n, rng)
        yield R0, refine(R0, replace(KEEP, **opts))


class TestInvariants:
    def test_corner_monotone(self):
        for R0, rep in _run_corpus(1, 60):
            e = np.array([r.e for r in rep.history])
            assert np.all(np.diff(e) <= 1e-14 * e[0])

    def test_factor_reconstruction_and_orthogonality(self):
        for R0, rep in _run_corpus(2, 40):
            st_ = rep.final_state
            n = st_.n
            nR = frobenius_norm(st_.R0)
            for snap in st_.snapshots:
                assert frobenius_norm(snap.G_even @ st_.R0 @ snap.G_odd.T - snap.R) <= 1e-12 * nR
            assert frobenius_norm(st_.G_odd @ st_.G_odd.T - np.eye(n)) <= 1e-12 * n
            assert frobenius_norm(st_.G_even @ st_.G_even.T - np.eye(n)) <= 1e-12 * n

    def test_svd_propagation(self):
        # R^(l) = (G_even U0) Sigma (G_odd V0)^T at every l
        for R0, rep in _run_corpus(3, 30):
            st_ = rep.final_state
            s0 = svd(st_.R0)
            nR = frobenius_norm(st_.R0)
            for snap in st_.snapshots:
                U = snap.G_even @ s0.U
                V = snap.G_odd @ s0.V
                assert frobenius_norm((U * s0.sigma) @ V.T - snap.R) <= 1e-11 * nR

    def test_corner_singular_vector_relations(self):
        # r^(0) v_nn^(0) = sigma_n u_nn^(0); u^(2k-2) r^(2k-1) = sigma_n v^(2k-1);
        # r^(2k) v^(2k-1) = sigma_n u^(2k)
        for R0, rep in _run_corpus(4, 30):
            st_ = rep.final_state
            s0 = svd(st_.R0)
            sn = s0.sigma[-1]
            snaps = st_.snapshots
            u = [float(np.dot(s.G_even[-1], s0.U[:, -1])) for s in snaps]
            v = [float(np.dot(s.G_odd[-1], s0.V[:, -1])) for s in snaps]
            e = [s.R[-1, -1] for s in snaps]
            tol = 1e-12 * s0.sigma[0]
            assert abs(e[0] * v[0] - sn * u[0]) <= tol
            for l in range(1, len(snaps)):
                if l % 2 == 1:
                    assert abs(u[l - 1] * e[l] - sn * v[l]) <= tol
                else:
                    assert abs(e[l] * v[l - 1] - sn * u[l]) <= tol

    def test_alignment_sign_persistence(self):
        for R0, rep in _run_corpus(5, 40):
            st_ = rep.final_state
            s0 = svd(st_.R0)
            sign = np.sign(s0.vnn)
            for s in st_.snapshots:
                if s.l % 2 == 1:
                    a = float(np.dot(s.G_odd[-1], s0.V[:, -1]))
                else:
                    a = float(np.dot(s.G_even[-1], s0.U[:, -1]))
                assert np.sign(a) == sign

    def test_zero_alignment_stays_zero(self):
        for seed in range(10):
            n = 2 + seed % 6
            sig = tuple(np.geomspace(5.0, 0.5, n))
            R0 = generate_test_matrix(MatrixSpec(n, sig, VnnMode.ZERO, seed))
            s0 = svd(R0.array)
            rep = refine(R0, KEEP)
            for s in rep.final_state.snapshots:
                assert abs(np.dot(s.G_odd[-1], s0.V[:, -1])) <= 1e-12
                assert abs(np.dot(s.G_even[-1], s0.U[:, -1])) <= 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_block_sigma_and_h_product_bound(self, n, seed):
        R0 = random_upper_triangular(n, np.random.default_rng(seed))
        rep = refine(R0, RefineOptions(record_rho=True, keep_iterates=True,
                                       max_double_sweeps=50))
        snaps = rep.final_state.snapshots
        s_prev = singular_values(snaps[0].R[:-1, :-1])
        for s in snaps[1:]:
            cur = singular_values(s.R[:-1, :-1])
            assert np.all(cur >= s_prev * (1 - 1e-12))
            s_prev = cur
        hist = rep.history
        prod = 1.0
        for rec in hist:
            assert rec.h_norm <= prod * hist[0].h_norm * (1 + 1e-12)
            prod *= rec.rho


class TestLimit:
    def test_limit_and_alignment(self):
        rng = np.random.default_rng(11)
        checked = 0
        for seed in range(40):
            n = int(rng.integers(2, 10))
            top = np.sort(10 ** rng.uniform(-1, 1, n - 1))[::-1]
            sig = tuple(top) + (top[-1] * rng.uniform(0.05, 0.9),)
            R0 = generate_test_matrix(MatrixSpec(n, sig, VnnMode.NONZERO, seed))
            s0 = svd(R0.array)
            if abs(s0.vnn) <= 1e-6:
                continue
            checked += 1
            rep = refine(R0, KEEP)
            assert rep.converged
            assert rep.final_e == pytest.approx(s0.sigma[-1], rel=1e-9)
            av, au = alignment(rep.final_state, s0)
            assert min(abs(av), abs(au)) >= 1 - 1e-6
            sign = np.sign(s0.vnn)
            u_seq = [sign * np.dot(s.G_even[-1], s0.U[:, -1])
                     for s in rep.final_state.snapshots if s.l % 2 == 0]
            assert np.all(np.diff(u_seq) >= -1e-13)
            # alignment near 1 means the factor row meets the singular vector
            g = rep.final_state.G_odd[-1]
            assert min(np.linalg.norm(g - s0.V[:, -1]), np.linalg.norm(g + s0.V[:, -1])) <= 2e-3
        assert checked >= 30

    def test_zero_mode_stalls_at_block(self):
        for seed in range(8):
            n = 3 + seed % 5
            sig = tuple(np.geomspace(4.0, 0.25, n))
            R0 = generate_test_matrix(MatrixSpec(n, sig, VnnMode.ZERO, seed))
            B = R0.array[1:, 1:]
            rep = refine(R0)
            assert rep.final_e == pytest.approx(svd(B).sigma[-1], rel=1e-9)
            assert rep.final_e > sig[-1] * 1.5


class TestRankRevealing:
    def _check(self, R0, res):
        nR = frobenius_norm(np.asarray(R0))
        assert frobenius_norm(res.U @ res.R @ res.V.T - np.asarray(R0)) <= 1e-11 * nR
        assert np.all(np.tril(res.R, -1) == 0.0)
        n = res.R.shape[0]
        assert frobenius_norm(res.U.T @ res.U - np.eye(n)) <= 1e-12 * n
        assert frobenius_norm(res.V.T @ res.V - np.eye(n)) <= 1e-12 * n

    def test_already_revealed(self):
        R0 = np.diag([5.0, 3.0, 1e-12])
        res = rank_revealing_urv(R0, 1e-8)
        assert res.numerical_rank == 2
        self._check(R0, res)

    def test_example1_full_rank(self):
        res = rank_revealing_urv(EXAMPLE1, 1e-8)
        assert res.numerical_rank == 3
        self._check(EXAMPLE1, res)

    def test_two_small_singular_values(self):
        R0 = generate_test_matrix(MatrixSpec(4, (1.0, 0.5, 1e-10, 1e-11), VnnMode.NONZERO, 3))
        np.testing.assert_allclose(svd(R0.array).sigma, [1.0, 0.5, 1e-10, 1e-11], rtol=1e-5)
        res = rank_revealing_urv(R0, 1e-6)
        assert res.numerical_rank == 2
        assert res.deflations == 2
        self._check(R0.array, res)
        np.testing.assert_allclose(np.abs(np.diag(res.R))[2:], [1e-10, 1e-11], rtol=1e-3)

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            rank_revealing_urv(EXAMPLE1, 0.0)
