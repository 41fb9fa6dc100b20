import numpy as np
import pytest

from rombox.linalg import (
    general_eig,
    pseudo_inverse,
    resolve_rank,
    sym_eig,
    truncated_svd,
)


class TestTruncatedSvd:
    def test_identity_rank3(self):
        res = truncated_svd(np.eye(3), 3)
        np.testing.assert_allclose(res.sigma, [1.0, 1.0, 1.0])

    def test_rank_one_outer_product(self):
        # analytic rank-1 SVD: sigma = |u| * |v|
        u = np.array([1.0, 2.0])
        v = np.array([3.0, 4.0])
        m = np.outer(u, v)
        res = truncated_svd(m, 1)
        np.testing.assert_allclose(res.sigma[0], np.sqrt(5.0) * 5.0, rtol=1e-12)
        recon = res.u @ np.diag(res.sigma) @ res.v.T
        np.testing.assert_allclose(recon, m, atol=1e-12)

    def test_energy_threshold_selects_two_modes(self):
        # energies 9, 4, 1: 13/14 ~ 0.9286 >= 0.92 at k=2
        res = truncated_svd(np.diag([3.0, 2.0, 1.0]), 0.92)
        assert res.rank == 2

    def test_energy_threshold_one(self):
        res = truncated_svd(np.diag([3.0, 2.0, 1.0]), 1.0)
        assert res.rank == 3

    def test_fixed_rank_out_of_range(self):
        with pytest.raises(ValueError):
            truncated_svd(np.eye(3), 4)
        with pytest.raises(ValueError):
            truncated_svd(np.eye(3), 0)

    def test_nonfinite_rejected(self):
        m = np.eye(2)
        m[0, 0] = np.nan
        with pytest.raises(ValueError):
            truncated_svd(m, 1)

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((8, 5))
        res = truncated_svd(m, 3)
        np.testing.assert_allclose(res.u.T @ res.u, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(res.v.T @ res.v, np.eye(3), atol=1e-10)
        assert np.all(np.diff(res.sigma) <= 0)

    def test_reconstruction_error_identity(self):
        # |M - U S V^T|_F^2 == sum of discarded sigma^2
        rng = np.random.default_rng(1)
        for _ in range(20):
            rows = int(rng.integers(2, 21))
            cols = int(rng.integers(2, 21))
            m = rng.standard_normal((rows, cols))
            full = np.linalg.svd(m, compute_uv=False)
            k = int(rng.integers(1, min(rows, cols) + 1))
            res = truncated_svd(m, k)
            err = np.linalg.norm(m - res.u @ np.diag(res.sigma) @ res.v.T, "fro") ** 2
            tail = np.sum(full[k:] ** 2)
            assert abs(err - tail) <= 1e-8 * max(1.0, np.sum(full**2))

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((10, 6))
        a = truncated_svd(m, 4)
        b = truncated_svd(m.copy(), 4)
        assert np.array_equal(a.u, b.u)
        assert np.array_equal(a.sigma, b.sigma)
        assert np.array_equal(a.v, b.v)


class TestResolveRank:
    def test_bool_rejected(self):
        with pytest.raises(ValueError):
            resolve_rank(np.array([1.0]), True)

    def test_zero_energy(self):
        assert resolve_rank(np.zeros(3), 0.5) == 1


class TestSymEig:
    def test_diagonal(self):
        res = sym_eig(np.diag([1.0, 5.0, 3.0]))
        np.testing.assert_allclose(res.eigenvalues, [5.0, 3.0, 1.0])
        expected = np.eye(3)[:, [1, 2, 0]]
        np.testing.assert_allclose(res.eigenvectors, expected, atol=1e-12)

    def test_two_by_two_hand_computed(self):
        # char poly lambda^2 - 4 lambda + 3 -> eigenvalues 3, 1
        res = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(res.eigenvalues, [3.0, 1.0], atol=1e-12)
        s = 1.0 / np.sqrt(2.0)
        np.testing.assert_allclose(res.eigenvectors[:, 0], [s, s], atol=1e-12)
        np.testing.assert_allclose(res.eigenvectors[:, 1], [s, -s], atol=1e-12)

    def test_zero_matrix(self):
        res = sym_eig(np.zeros((4, 4)))
        np.testing.assert_allclose(res.eigenvalues, np.zeros(4), atol=1e-14)

    def test_reconstruction(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(2, 12))
            c = rng.standard_normal((n, n))
            c = c + c.T
            res = sym_eig(c)
            recon = res.eigenvectors @ np.diag(res.eigenvalues) @ res.eigenvectors.T
            scale = max(1.0, np.linalg.norm(c, "fro"))
            assert np.linalg.norm(recon - c, "fro") <= 1e-8 * scale
            np.testing.assert_allclose(
                res.eigenvectors.T @ res.eigenvectors, np.eye(n), atol=1e-10
            )

    def test_residual_per_pair(self):
        rng = np.random.default_rng(4)
        c = rng.standard_normal((6, 6))
        c = 0.5 * (c + c.T)
        res = sym_eig(c)
        for lam, w in zip(res.eigenvalues, res.eigenvectors.T):
            assert np.linalg.norm(c @ w - lam * w) <= 1e-8 * (1 + np.linalg.norm(c))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            sym_eig(np.ones((2, 3)))


class TestPseudoInverse:
    def test_diagonal(self):
        np.testing.assert_allclose(
            pseudo_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), atol=1e-12
        )

    def test_rank_deficient_idempotent(self):
        m = np.array([[1.0, 0.0], [0.0, 0.0]])
        np.testing.assert_allclose(pseudo_inverse(m), m, atol=1e-12)

    def test_full_column_rank_against_normal_equations(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((5, 3))
        pinv = pseudo_inverse(m)
        np.testing.assert_allclose(pinv @ m, np.eye(3), atol=1e-8)
        oracle = np.linalg.inv(m.T @ m) @ m.T
        np.testing.assert_allclose(pinv, oracle, atol=1e-8)

    def test_moore_penrose_identities(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            rows = int(rng.integers(1, 51))
            cols = int(rng.integers(1, 51))
            m = rng.standard_normal((rows, cols))
            if rng.random() < 0.3:
                # force rank deficiency
                k = max(1, min(rows, cols) // 2)
                m = (m[:, :k] @ rng.standard_normal((k, cols))) if cols > 1 else m
            p = pseudo_inverse(m)
            scale = max(1.0, np.linalg.norm(m))
            assert np.linalg.norm(m @ p @ m - m) <= 1e-8 * scale
            assert np.linalg.norm(p @ m @ p - p) <= 1e-8 * max(1.0, np.linalg.norm(p))
            assert np.linalg.norm((m @ p).T - m @ p) <= 1e-8 * scale
            assert np.linalg.norm((p @ m).T - p @ m) <= 1e-8 * scale


class TestGeneralEig:
    def test_diagonal(self):
        evals, _ = general_eig(np.diag([2.0, 3.0]))
        np.testing.assert_allclose(evals, [3.0, 2.0])

    def test_rotation_pure_imaginary(self):
        # char poly lambda^2 + 1 = 0
        evals, vecs = general_eig(np.array([[0.0, -1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(np.abs(evals), [1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(evals[0], 1j, atol=1e-12)
        np.testing.assert_allclose(evals[1], -1j, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(vecs, axis=0), [1.0, 1.0])

    def test_jordan_block(self):
        evals, _ = general_eig(np.array([[1.0, 1.0], [0.0, 1.0]]))
        np.testing.assert_allclose(evals, [1.0, 1.0], atol=1e-8)

    def test_eigenpair_residual(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((7, 7))
        evals, vecs = general_eig(a)
        for lam, v in zip(evals, vecs.T):
            assert np.linalg.norm(a @ v - lam * v) <= 1e-8 * (1 + np.abs(evals[0]))

    def test_phase_convention(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((6, 6))
        _, vecs = general_eig(a)
        for v in vecs.T:
            mags = np.abs(v)
            first = v[np.nonzero(mags > 1e-12 * mags.max())[0][0]]
            assert first.real > 0
            assert abs(first.imag) <= 1e-12 * mags.max()
