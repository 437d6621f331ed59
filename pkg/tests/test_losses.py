import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mamlflow.losses import (
    FiniteDiffLoss,
    HingeLoss,
    QuadraticLoss,
    SinusoidalQuadraticLoss,
    SmoothedHingeLoss,
    finite_diff_grad,
    finite_diff_hess,
    finite_diff_jacobian,
    quadratic_from_regression,
)
from mamlflow.task_model import EvaluationOverflow


def _spd(rng, d):
    A = rng.standard_normal((d, d))
    return A @ A.T + 0.1 * np.eye(d)


class TestQuadraticLoss:
    def test_value_grad_hess(self, rng):
        H, b = _spd(rng, 3), rng.standard_normal(3)
        f = QuadraticLoss(H, b, 2.0)
        w = rng.standard_normal(3)
        assert f.value(w) == pytest.approx(0.5 * w @ H @ w + b @ w + 2.0)
        np.testing.assert_allclose(f.grad(w), H @ w + b)
        np.testing.assert_allclose(f.hess(w), H)
        np.testing.assert_allclose(f.grad(f.minimizer()), 0.0, atol=1e-10)

    def test_curvature_bounds(self):
        f = QuadraticLoss(np.diag([0.5, 3.0]), [0.0, 0.0])
        assert f.curvature_bounds() == pytest.approx((0.5, 3.0, 0.0))

    @pytest.mark.parametrize(
        "H, msg",
        [([[1.0, 2.0], [0.0, 1.0]], "symmetric"), ([[-1.0, 0.0], [0.0, 1.0]], "semidefinite"), ([[1.0]], "shape")],
    )
    def test_rejects(self, H, msg):
        with pytest.raises(ValueError, match=msg):
            QuadraticLoss(H, [0.0, 0.0])

    def test_coefficients_frozen(self):
        f = QuadraticLoss([[1.0]], [0.0])
        with pytest.raises(ValueError):
            f.H[0, 0] = 2.0


class TestSinusoidal:
    def test_derivatives_match_fd(self):
        f = SinusoidalQuadraticLoss(0.505, -1.0, 1.0)
        for w in (-2.0, 0.3, 1.7):
            np.testing.assert_allclose(f.grad([w]), finite_diff_grad(f, [w]), rtol=1e-8)
            np.testing.assert_allclose(f.hess([w]), finite_diff_hess(f, [w]), rtol=1e-5)
            third = finite_diff_jacobian(lambda v: f.hess(v).ravel(), [w])
            np.testing.assert_allclose(f.third([w], [1.0]), third.reshape(1, 1), rtol=1e-6)

    def test_counterexample_curvature(self, counterexample):
        lo = min(t.curvature_bounds()[0] for t in counterexample.tasks)
        hi = max(t.curvature_bounds()[1] for t in counterexample.tasks)
        assert lo == pytest.approx(0.01)
        assert hi == pytest.approx(2.01)


class TestHinge:
    def setup_method(self):
        rng = np.random.default_rng(3)
        self.X = rng.standard_normal((40, 3))
        self.y = np.sign(self.X[:, 0] + 0.3 * rng.standard_normal(40))

    def test_smoothed_grad_matches_fd(self):
        f = SmoothedHingeLoss(self.X, self.y, delta=0.5)
        rng = np.random.default_rng(5)
        for _ in range(5):
            w = rng.standard_normal(3)
            np.testing.assert_allclose(f.grad(w), finite_diff_grad(f, w, h=1e-7), atol=1e-6)

    def test_smoothed_not_strongly_convex(self):
        f = SmoothedHingeLoss(self.X, self.y)
        assert f.curvature_bounds()[0] == 0.0
        # far along a separating direction every margin is satisfied
        np.testing.assert_allclose(f.hess([100.0, 0.0, 0.0]), 0.0)

    def test_plain_hinge(self):
        f = HingeLoss(self.X, self.y)
        assert f.value(np.zeros(3)) == pytest.approx(1.0)
        np.testing.assert_allclose(f.grad(np.zeros(3)), -(self.y[:, None] * self.X).mean(axis=0))

    def test_labels_checked(self):
        with pytest.raises(ValueError, match="labels"):
            HingeLoss(self.X, np.arange(40.0))

    def test_delta_checked(self):
        with pytest.raises(ValueError, match="delta"):
            SmoothedHingeLoss(self.X, self.y, delta=0.0)


class TestRegression:
    def test_scales(self, rng):
        X, y = rng.standard_normal((30, 4)), rng.standard_normal(30)
        g = rng.standard_normal(4)
        half = quadratic_from_regression(X, y)
        full = quadratic_from_regression(X, y, "mean")
        r = y - X @ g
        assert half.value(g) == pytest.approx(r @ r / 60)
        assert full.value(g) == pytest.approx(r @ r / 30)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError, match="rows"):
            quadratic_from_regression(rng.standard_normal((5, 2)), np.ones(4))

    def test_unknown_scale(self, rng):
        with pytest.raises(ValueError, match="scale"):
            quadratic_from_regression(np.ones((2, 1)), np.ones(2), "sum")


class TestFiniteDiff:
    def test_fd_loss_matches_quadratic(self, rng):
        H, b = _spd(rng, 3), rng.standard_normal(3)
        q = QuadraticLoss(H, b)
        f = FiniteDiffLoss(q.value, 3)
        w = rng.standard_normal(3)
        np.testing.assert_allclose(f.grad(w), q.grad(w), rtol=1e-7, atol=1e-8)
        np.testing.assert_allclose(f.hess(w), H, rtol=1e-5, atol=1e-6)

    def test_overflow(self):
        with pytest.raises(EvaluationOverflow):
            finite_diff_grad(lambda w: np.inf, [0.0])

    def test_bad_step(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda w: 0.0, [0.0], h=0.0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=4))
    def test_fd_gradient_exact_on_quadratics(self, w):
        # central differences are exact (up to rounding) on quadratics
        d = len(w)
        H = np.eye(d) * 2.0 + 0.5
        q = QuadraticLoss(H, np.arange(d, dtype=float))
        np.testing.assert_allclose(finite_diff_grad(q, w), q.grad(w), rtol=1e-7, atol=1e-7)
