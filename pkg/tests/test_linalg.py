import numpy as np
import pytest

from dalrtc.linalg import frob_norm, least_squares_xy, nuclear_norm, svd, svt


def oracle_svt(m, tau):
    # straight-line reference: factorize, shrink, multiply back
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return u @ np.diag(np.maximum(s - tau, 0.0)) @ vt


class TestSvd:
    def test_identity_sigma(self):
        f = svd(np.eye(3))
        assert np.allclose(f.sigma, [1, 1, 1], atol=1e-12)

    def test_diagonal_sigma(self):
        f = svd(np.diag([3.0, 1.0]))
        assert np.allclose(f.sigma, [3, 1], atol=1e-12)

    def test_factor_invariants(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            m = rng.standard_normal((6, 4))
            u, s, v = svd(m)
            assert np.linalg.norm(u.T @ u - np.eye(4)) < 1e-10
            assert np.linalg.norm(v.T @ v - np.eye(4)) < 1e-10
            assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
            rel = np.linalg.norm((u * s) @ v.T - m) / np.linalg.norm(m)
            assert rel < 1e-8

    def test_deterministic_signs(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((5, 5))
        u, _, _ = svd(m)
        peaks = u[np.argmax(np.abs(u), axis=0), np.arange(5)]
        assert np.all(peaks >= 0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            svd(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_non_matrix_rejected(self):
        with pytest.raises(ValueError, match="2-D"):
            svd(np.zeros((2, 2, 2)))


class TestSvt:
    def test_diagonal_example(self):
        out = svt(np.diag([3.0, 1.0]), 2.0)
        assert np.allclose(out, np.diag([1.0, 0.0]), atol=1e-12)

    def test_zero_threshold_identity(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((4, 6))
        assert np.allclose(svt(m, 0.0), m, atol=1e-12)

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = rng.standard_normal((5, 5))
            assert np.max(np.abs(svt(m, 0.5) - oracle_svt(m, 0.5))) < 1e-10

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            svt(np.eye(2), -0.1)

    def test_shrinks_singular_values(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((6, 5))
        tau = 0.7
        s_in = np.linalg.svd(m, compute_uv=False)
        s_out = np.linalg.svd(svt(m, tau), compute_uv=False)
        assert np.allclose(s_out, np.maximum(s_in - tau, 0.0), atol=1e-10)

    def test_rank_counts_values_above_threshold(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((6, 6))
        tau = 1.0
        s = np.linalg.svd(m, compute_uv=False)
        assert np.linalg.matrix_rank(svt(m, tau), tol=1e-9) == int(np.sum(s > tau))

    def test_prox_optimality(self):
        # svt minimizes tau*||Z||_* + 0.5*||Z - m||_F^2
        rng = np.random.default_rng(6)
        for _ in range(10):
            m = rng.standard_normal((4, 4))
            tau = 0.6
            x = svt(m, tau)
            fx = tau * np.linalg.svd(x, compute_uv=False).sum() \
                + 0.5 * np.sum((x - m) ** 2)
            for _ in range(10):
                z = x + 0.5 * rng.standard_normal((4, 4))
                fz = tau * np.linalg.svd(z, compute_uv=False).sum() \
                    + 0.5 * np.sum((z - m) ** 2)
                assert fx <= fz + 1e-9 * max(1.0, abs(fz))

    def test_nonexpansive(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            a = rng.standard_normal((5, 4))
            b = rng.standard_normal((5, 4))
            assert (np.linalg.norm(svt(a, 0.8) - svt(b, 0.8))
                    <= np.linalg.norm(a - b) + 1e-12)


class TestLeastSquares:
    def test_identity_system(self):
        b = np.arange(6.0).reshape(3, 2)
        assert np.allclose(least_squares_xy(np.eye(3), b, side="left"), b)

    def test_orthonormal_rows_right_side(self):
        q, _ = np.linalg.qr(np.random.default_rng(8).standard_normal((5, 3)))
        a = q.T  # 3x5 with orthonormal rows
        b = np.random.default_rng(9).standard_normal((4, 5))
        assert np.allclose(least_squares_xy(a, b, side="right"), b @ a.T, atol=1e-12)

    def test_matches_pinv_oracle(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((8, 3))
        b = rng.standard_normal((8, 4))
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        pinv = vt.T @ np.diag(1.0 / s) @ u.T
        assert np.allclose(least_squares_xy(a, b, side="left"), pinv @ b, atol=1e-8)

    def test_normal_equations_residual(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((7, 3))
        b = rng.standard_normal((7, 2))
        z = least_squares_xy(a, b, side="left")
        resid = a.T @ (a @ z - b)
        assert np.linalg.norm(resid) < 1e-8 * np.linalg.norm(a.T @ b)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            least_squares_xy(np.zeros((3, 2)), np.zeros((4, 2)), side="left")
        with pytest.raises(ValueError, match="mismatch"):
            least_squares_xy(np.zeros((3, 2)), np.zeros((3, 3)), side="right")

    def test_bad_side(self):
        with pytest.raises(ValueError, match="side"):
            least_squares_xy(np.eye(2), np.eye(2), side="up")


class TestNorms:
    def test_zero(self):
        assert frob_norm(np.zeros((2, 3, 4))) == 0.0

    def test_all_ones_cube(self):
        assert np.isclose(frob_norm(np.ones((2, 2, 2))), np.sqrt(8.0))

    def test_matches_unfolding(self):
        from dalrtc.tensor import unfold
        rng = np.random.default_rng(12)
        t = rng.standard_normal((3, 4, 5))
        assert np.isclose(frob_norm(t), frob_norm(unfold(t, 1)), atol=1e-12)

    def test_nuclear_norm_diag(self):
        assert np.isclose(nuclear_norm(np.diag([3.0, 1.0])), 4.0)
