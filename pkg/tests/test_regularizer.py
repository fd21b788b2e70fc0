import numpy as np
import pytest

from dalrtc.regularizer import (
    Alphabet,
    grad_h,
    h_value,
    l0_approx,
    lipschitz_step,
    update_auxiliaries,
)


class TestAlphabet:
    def test_sorted_and_distinct(self):
        a = Alphabet([3.0, 1.0, 2.0])
        assert a.values.tolist() == [1.0, 2.0, 3.0]
        assert len(a) == 3

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="distinct"):
            Alphabet([1.0, 1.0])

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError, match="nonempty"):
            Alphabet([])
        with pytest.raises(ValueError, match="finite"):
            Alphabet([0.0, np.inf])

    def test_integer_range(self):
        a = Alphabet.integer_range(0, 255)
        assert len(a) == 256
        assert a.values[0] == 0.0 and a.values[-1] == 255.0

    def test_nearest_exact_hit(self):
        a = Alphabet([0.0, 1.0, 4.0])
        assert a.nearest(np.array([4.0])).tolist() == [4.0]

    def test_nearest_tie_goes_down(self):
        a = Alphabet([0.0, 1.0])
        assert a.nearest(np.array([0.5])).tolist() == [0.0]

    def test_nearest_generic(self):
        a = Alphabet.integer_range(0, 255)
        assert a.nearest(np.array([3.9, -2.0, 300.0])).tolist() == [4.0, 0.0, 255.0]

    def test_nearest_keeps_shape(self):
        a = Alphabet([0.0, 2.0])
        out = a.nearest(np.array([[0.4, 1.6], [2.4, -1.0]]))
        assert out.tolist() == [[0.0, 2.0], [2.0, 0.0]]


class TestL0Approx:
    def test_zero_vector(self):
        assert l0_approx([0.0, 0.0], 0.01) == 0.0

    def test_half_at_unit(self):
        assert np.isclose(l0_approx([1.0], 1.0), 0.5)

    def test_asymptote(self):
        assert abs(l0_approx([1e6], 0.01) - 1.0) < 1e-12

    def test_counts_nonzeros_as_alpha_vanishes(self):
        v = np.array([0.0, 0.5, -2.0, 0.0, 1.0])
        assert abs(l0_approx(v, 1e-12) - 3.0) < 1e-6

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError, match="positive"):
            l0_approx([1.0], 0.0)


class TestUpdateAuxiliaries:
    def test_single_symbol_example(self):
        aux = update_auxiliaries([0.0], Alphabet([0.0]), 0.01)
        assert np.allclose(aux.beta, [[10.0]], atol=1e-12)
        assert np.allclose(aux.B_diag, [100.0], atol=1e-10)
        assert np.allclose(aux.b, [0.0], atol=1e-12)

    def test_two_symbol_example(self):
        aux = update_auxiliaries([0.0], Alphabet([0.0, 1.0]), 0.01)
        far = 0.1 / 1.01
        assert np.allclose(aux.beta.ravel(), [10.0, far], atol=1e-12)
        assert np.allclose(aux.B_diag, [100.0 + far**2], atol=1e-10)
        assert np.allclose(aux.b, [far**2], atol=1e-12)

    def test_beta_range_and_peak(self):
        alphabet = Alphabet.integer_range(0, 7)
        x = np.array([0.0, 3.0, 2.5, 7.9])
        aux = update_auxiliaries(x, alphabet, 0.01)
        assert np.all(aux.beta > 0)
        assert np.all(aux.beta <= 1 / np.sqrt(0.01) + 1e-12)
        peak = np.isclose(aux.beta, 1 / np.sqrt(0.01))
        hits = np.abs(x[None, :] - alphabet.values[:, None]) == 0
        assert np.array_equal(peak, hits)

    def test_quadratic_transform_tightness(self):
        rng = np.random.default_rng(0)
        alphabet = Alphabet.integer_range(0, 255)
        x = rng.uniform(-10, 265, 64)
        alpha = 0.01
        aux = update_auxiliaries(x, alphabet, alpha)
        d = (x[None, :] - alphabet.values[:, None]) ** 2
        surrogate = 2 * aux.beta * np.sqrt(alpha) - aux.beta**2 * (d + alpha)
        assert np.max(np.abs(surrogate - alpha / (d + alpha))) < 1e-12

    def test_beta_maximizes_surrogate(self):
        # grid search over the multiplier recovers the closed-form update
        alpha, dist2 = 0.01, 0.49
        best = np.sqrt(alpha) / (dist2 + alpha)
        grid = np.linspace(0.0, 1 / np.sqrt(alpha), 20001)
        vals = 2 * grid * np.sqrt(alpha) - grid**2 * (dist2 + alpha)
        assert abs(grid[np.argmax(vals)] - best) < 1e-3
        assert np.max(vals) <= alpha / (dist2 + alpha) + 1e-12

    def test_keep_beta_false_matches(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 7, 100)
        alphabet = Alphabet.integer_range(0, 7)
        full = update_auxiliaries(x, alphabet, 0.01)
        slim = update_auxiliaries(x, alphabet, 0.01, keep_beta=False)
        assert slim.beta is None
        assert np.array_equal(full.B_diag, slim.B_diag)
        assert np.array_equal(full.b, slim.b)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="finite"):
            update_auxiliaries([np.nan], Alphabet([0.0]), 0.01)


class TestSurrogate:
    def test_zero_vector_value(self):
        aux = update_auxiliaries(np.zeros(3), Alphabet([0.0, 1.0]), 0.01)
        assert h_value(np.zeros(3), aux) == 0.0

    def test_pure_quadratic_value(self):
        aux = update_auxiliaries(np.zeros(2), Alphabet([0.0]), 1.0)
        aux.B_diag[:] = 1.0
        aux.b[:] = 0.0
        assert np.isclose(h_value([2.0, 3.0], aux), 13.0)

    def test_gradient_examples(self):
        aux = update_auxiliaries(np.zeros(4), Alphabet([0.0]), 1.0)
        aux.B_diag[:] = 1.0
        aux.b[:] = 0.0
        x = np.array([1.0, -2.0, 0.5, 0.0])
        assert np.allclose(grad_h(x, aux), 2 * x)
        aux.b[:] = aux.B_diag * x
        assert np.allclose(grad_h(x, aux), 0.0, atol=1e-14)

    @pytest.mark.parametrize("size", [1, 2, 8, 256])
    def test_gradient_matches_finite_differences(self, size):
        rng = np.random.default_rng(size)
        alphabet = Alphabet(np.sort(rng.uniform(0, 1, size))) if size > 1 \
            else Alphabet([0.5])
        x = rng.uniform(-0.5, 1.5, 8)
        aux = update_auxiliaries(x, alphabet, 0.01)
        g = grad_h(x, aux)
        step = 1e-6
        fd = np.empty_like(x)
        for j in range(x.size):
            e = np.zeros_like(x)
            e[j] = step
            fd[j] = (h_value(x + e, aux) - h_value(x - e, aux)) / (2 * step)
        assert np.linalg.norm(fd - g) / np.linalg.norm(g) < 1e-6

    def test_midpoint_convexity(self):
        rng = np.random.default_rng(9)
        alphabet = Alphabet.integer_range(0, 7)
        aux = update_auxiliaries(rng.uniform(0, 7, 12), alphabet, 0.01)
        for _ in range(20):
            x, y = rng.uniform(-2, 9, (2, 12))
            mid = h_value((x + y) / 2, aux)
            assert mid <= 0.5 * (h_value(x, aux) + h_value(y, aux)) + 1e-9

    def test_length_mismatch(self):
        aux = update_auxiliaries(np.zeros(3), Alphabet([0.0]), 0.01)
        with pytest.raises(ValueError, match="length"):
            h_value(np.zeros(4), aux)
        with pytest.raises(ValueError, match="length"):
            grad_h(np.zeros(2), aux)


class TestLipschitzStep:
    def test_examples(self):
        aux = update_auxiliaries(np.zeros(2), Alphabet([0.0]), 1.0)
        aux.B_diag[:] = [4.0, 1.0]
        assert lipschitz_step(aux) == 0.25
        aux.B_diag = np.array([7.0])
        assert np.isclose(lipschitz_step(aux), 1 / 7.0)

    def test_single_symbol_step(self):
        aux = update_auxiliaries([0.0], Alphabet([0.0]), 0.01)
        assert np.isclose(lipschitz_step(aux), 0.01)

    def test_descent_for_one_step(self):
        rng = np.random.default_rng(10)
        alphabet = Alphabet.integer_range(0, 7)
        for _ in range(50):
            x = rng.uniform(-1, 8, 16)
            aux = update_auxiliaries(x, alphabet, 0.01)
            x_next = x - lipschitz_step(aux) * grad_h(x, aux)
            assert h_value(x_next, aux) <= h_value(x, aux) + 1e-10 * max(
                1.0, abs(h_value(x, aux)))

    def test_rejects_empty_and_nonpositive(self):
        aux = update_auxiliaries([0.0], Alphabet([0.0]), 0.01)
        aux.B_diag = np.array([])
        with pytest.raises(ValueError, match="empty"):
            lipschitz_step(aux)
        aux.B_diag = np.array([0.0])
        with pytest.raises(ValueError, match="positive"):
            lipschitz_step(aux)
