import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mamlflow import TaskPool
from mamlflow.task_model import TaskLoss
from mamlflow.datagen import random_quadratic_pool
from mamlflow.losses import FiniteDiffLoss, SinusoidalQuadraticLoss, finite_diff_grad, quadratic_pool
from mamlflow.meta_grad import (
    correction_matrix,
    fo_maml_grad,
    inner_step,
    maml_grad,
    maml_hess,
    maml_loss,
    maml_task_grad,
    monitor,
)
from mamlflow.task_model import DimensionMismatch, expected_grad, expected_loss

# (w, F, F', F'') of the counterexample pool at alpha = 0.4, from a 40-digit
# mpmath evaluation of F(w) = mean_i f_i(w - alpha f_i'(w)) with mp.diff.
COUNTEREXAMPLE_ORACLE = [
    (-2.985, 2.4080852497200717275, -1.053134894121905374, -36.059493553739659299),
    (0.5, -0.17278932204875329638, 0.077153091606156640011, -5.6461680759587896242),
    (1.3, -0.038647048944269221233, 0.40660827170971673643, 6.7006718805053158505),
]


class _Wrapped(TaskLoss):
    def __init__(self, inner):
        super().__init__(inner.dim)
        self.inner = inner

    def _value(self, w):
        return self.inner._value(w)

    def _grad(self, w):
        return self.inner._grad(w)

    def _hess(self, w):
        return self.inner._hess(w)


def _sinusoid_pool():
    return TaskPool([SinusoidalQuadraticLoss(0.6, 0.3, 2.0), SinusoidalQuadraticLoss(0.8, -0.2, 3.0)], [0.3, 0.7])


class TestTwoTaskClosedForm:
    # F(w) = (1 - alpha)^2 (w^2 + 1) / 2 on the two-task pool
    @pytest.mark.parametrize("alpha", [0.0, 0.1, 0.45])
    @pytest.mark.parametrize("w", [-3.0, 0.0, 2.0])
    def test_values(self, two_task, alpha, w):
        s = (1 - alpha) ** 2
        assert maml_loss(two_task, alpha, [w]) == pytest.approx(s * (w * w + 1) / 2, rel=1e-14)
        np.testing.assert_allclose(maml_grad(two_task, alpha, [w]), [s * w], rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(maml_hess(two_task, alpha, [w]), [[s]], rtol=1e-14)


class TestCounterexampleOracle:
    @pytest.mark.parametrize("w, F, dF, d2F", COUNTEREXAMPLE_ORACLE)
    def test_against_mpmath(self, counterexample, w, F, dF, d2F):
        assert maml_loss(counterexample, 0.4, [w]) == pytest.approx(F, rel=1e-13)
        np.testing.assert_allclose(maml_grad(counterexample, 0.4, [w]), [dF], rtol=1e-12)
        np.testing.assert_allclose(maml_hess(counterexample, 0.4, [w]), [[d2F]], rtol=1e-11)

    @pytest.mark.parametrize("w, F, dF, d2F", COUNTEREXAMPLE_ORACLE)
    def test_fd_hessian_path(self, counterexample, w, F, dF, d2F):
        # the 100-frequency task needs a step well below the default 1e-4
        np.testing.assert_allclose(maml_hess(counterexample, 0.4, [w], method="fd", h=1e-6), [[d2F]], rtol=1e-6)


class TestQuadraticPools:
    def _F_oracle(self, pool, alpha, w):
        # independent evaluation: build each inner point explicitly
        total = 0.0
        for p, t in pool:
            u = w - alpha * (t.H @ w + t.b)
            total += p * (0.5 * u @ t.H @ u + t.b @ u + t.c)
        return total

    def test_loss_matches_explicit_sum(self, quad_pool, rng):
        for _ in range(10):
            w = rng.standard_normal(quad_pool.dim)
            assert maml_loss(quad_pool, 0.2, w) == pytest.approx(self._F_oracle(quad_pool, 0.2, w), rel=1e-13)

    def test_gradient_matches_fd(self, quad_pool, rng):
        for _ in range(10):
            w = rng.standard_normal(quad_pool.dim)
            fd = finite_diff_grad(lambda v: self._F_oracle(quad_pool, 0.2, v), w)
            np.testing.assert_allclose(maml_grad(quad_pool, 0.2, w), fd, rtol=1e-7, atol=1e-9)

    def test_hessian_paths_agree(self, quad_pool, rng):
        w = rng.standard_normal(quad_pool.dim)
        exact = maml_hess(quad_pool, 0.2, w)
        np.testing.assert_allclose(maml_hess(quad_pool, 0.2, w, method="analytic"), exact, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(maml_hess(quad_pool, 0.2, w, method="fd"), exact, rtol=1e-6, atol=1e-8)

    def test_quadratic_method_needs_quadratic_pool(self, counterexample):
        with pytest.raises(ValueError, match="quadratic"):
            maml_hess(counterexample, 0.1, [0.0], method="quadratic")

    def test_unknown_method(self, quad_pool):
        with pytest.raises(ValueError, match="unknown method"):
            maml_hess(quad_pool, 0.1, method="newton")

    def test_generic_path_matches_kernels(self, quad_pool, rng):
        # delegating wrappers hide the quadratic structure and force the per-task loop
        plain = TaskPool([_Wrapped(t) for t in quad_pool.tasks], quad_pool.weights)
        assert not plain.is_quadratic
        w = rng.standard_normal(quad_pool.dim)
        np.testing.assert_allclose(maml_grad(plain, 0.3, w), maml_grad(quad_pool, 0.3, w), rtol=1e-12)
        np.testing.assert_allclose(fo_maml_grad(plain, 0.3, w), fo_maml_grad(quad_pool, 0.3, w), rtol=1e-12)
        assert maml_loss(plain, 0.3, w) == pytest.approx(maml_loss(quad_pool, 0.3, w), rel=1e-12)


class TestPieces:
    def test_inner_step_and_correction(self, two_task):
        t = two_task.tasks[0]
        np.testing.assert_allclose(inner_step(t, 0.1, [2.0]), [2.0 - 0.1 * 1.0])
        np.testing.assert_allclose(correction_matrix(t, 0.1, [2.0]), [[0.9]])

    def test_task_grad_chain_rule(self):
        t = SinusoidalQuadraticLoss(0.6, 0.3, 2.0)
        fd = finite_diff_grad(lambda v: t.value(inner_step(t, 0.2, v)), [0.7])
        np.testing.assert_allclose(maml_task_grad(t, 0.2, [0.7]), fd, rtol=1e-8)

    def test_dimension_mismatch(self, quad_pool):
        with pytest.raises(DimensionMismatch):
            maml_grad(quad_pool, 0.1, np.zeros(quad_pool.dim + 1))

    def test_fd_only_pool_uses_fd_hessian(self):
        pool = TaskPool([FiniteDiffLoss(lambda w: float(w @ w), 2)])
        np.testing.assert_allclose(maml_hess(pool, 0.1, [0.5, -0.5]), 2 * 0.8**2 * np.eye(2), rtol=1e-4)


class TestCounting:
    def test_maml_grad_charges_one_hessian_per_task(self, quad_pool):
        maml_grad(quad_pool, 0.1, np.zeros(quad_pool.dim))
        assert quad_pool.totals()["hess_evals"] == quad_pool.M
        assert quad_pool.totals()["grad_evals"] == 2 * quad_pool.M

    def test_fo_maml_charges_no_hessian(self, quad_pool):
        fo_maml_grad(quad_pool, 0.1, np.zeros(quad_pool.dim))
        assert quad_pool.totals()["hess_evals"] == 0

    def test_monitor_uncounted(self, quad_pool, counterexample):
        monitor(quad_pool, 0.1, np.zeros(quad_pool.dim))
        monitor(counterexample, 0.1, [0.0])
        assert quad_pool.totals()["grad_evals"] == 0
        assert counterexample.totals()["hess_evals"] == 0


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-3, 3))
    def test_alpha_zero_reduces_to_f(self, seed, shift):
        pool = random_quadratic_pool(3, 2, seed)
        w = np.array([shift, -shift])
        assert maml_loss(pool, 0.0, w) == pytest.approx(expected_loss(pool, w), rel=1e-12, abs=1e-12)
        np.testing.assert_allclose(maml_grad(pool, 0.0, w), expected_grad(pool, w), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(fo_maml_grad(pool, 0.0, w), expected_grad(pool, w), rtol=1e-12, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.0, 0.4))
    def test_shared_hessian_identity(self, seed, alpha):
        # with a common Hessian H, grad F = (I - alpha H)^2 grad f
        r = np.random.default_rng(seed)
        A = r.standard_normal((3, 3))
        H = A @ A.T / 3 + 0.2 * np.eye(3)
        H *= 1.0 / np.linalg.eigvalsh(H)[-1]
        pool = quadratic_pool([H] * 4, list(r.standard_normal((4, 3))))
        w = r.standard_normal(3)
        C = np.eye(3) - alpha * H
        np.testing.assert_allclose(maml_grad(pool, alpha, w), C @ C @ expected_grad(pool, w), rtol=1e-10, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-2.5, 2.5), st.floats(0.0, 0.3))
    def test_sinusoid_gradient_matches_fd(self, w, alpha):
        pool = _sinusoid_pool()
        fd = finite_diff_grad(lambda v: maml_loss(pool, alpha, v), [w])
        np.testing.assert_allclose(maml_grad(pool, alpha, [w]), fd, rtol=1e-6, atol=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.0, 0.4))
    def test_hessian_symmetric(self, seed, alpha):
        pool = random_quadratic_pool(3, 4, seed)
        Hm = maml_hess(pool, alpha, np.zeros(4))
        np.testing.assert_allclose(Hm, Hm.T, atol=1e-14)
