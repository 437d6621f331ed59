"""The MAML loss F(w) = E_i f_i(w - alpha grad f_i(w)), its gradient, the
first-order approximation, and its Hessian.

The gradient is always the direct chain rule
    grad F(w) = E_i[(I - alpha hess f_i(w)) grad f_i(w - alpha grad f_i(w))].
The mean-value rearrangement grad F = grad f - E_i[B_i grad f_i] used in the
convergence analysis involves an existential intermediate point and is not
computed anywhere.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .losses import finite_diff_jacobian
from .task_model import EvaluationOverflow, TaskLoss, TaskPool, as_vector, expected_grad, uncounted
from .theory_map import register


def _finite_vec(v, what):
    if not np.all(np.isfinite(v)):
        raise EvaluationOverflow(f"non-finite {what}")
    return v


def inner_step(task: TaskLoss, alpha: float, w) -> np.ndarray:
    w = as_vector(w, task.dim)
    return w - alpha * _finite_vec(task.grad(w), "gradient")


def correction_matrix(task: TaskLoss, alpha: float, w) -> np.ndarray:
    """A_i(w) = I - alpha hess f_i(w)."""
    return np.eye(task.dim) - alpha * task.hess(w)


def maml_task_loss(task: TaskLoss, alpha: float, w) -> float:
    return task.value(inner_step(task, alpha, w))


def maml_task_grad(task: TaskLoss, alpha: float, w) -> np.ndarray:
    w = as_vector(w, task.dim)
    g = _finite_vec(task.grad(w), "gradient")
    g2 = _finite_vec(task.grad(w - alpha * g), "gradient at the inner point")
    return g2 - alpha * (task.hess(w) @ g2)


@register("maml-loss", operation="maml_loss")
def maml_loss(pool: TaskPool, alpha: float, w) -> float:
    w = as_vector(w, pool.dim)
    if pool.is_quadratic:
        H, b, c = pool.quadratic_stack
        pool.charge(value=1, grad=1)
        return kernels.maml_loss(H, b, c, pool.weights, alpha, w)
    return math.fsum(p * maml_task_loss(t, alpha, w) for p, t in pool)


@register("maml-loss", operation="maml_grad", check="gradient_fd")
def maml_grad(pool: TaskPool, alpha: float, w) -> np.ndarray:
    """Exact gradient of F; charges one Hessian and two gradients per task."""
    w = as_vector(w, pool.dim)
    if pool.is_quadratic:
        H, b, _ = pool.quadratic_stack
        pool.charge(grad=2, hess=1)
        return _finite_vec(kernels.maml_grad(H, b, pool.weights, alpha, w), "MAML gradient")
    out = np.zeros(pool.dim)
    for p, t in pool:
        out += p * maml_task_grad(t, alpha, w)
    return out


def fo_maml_grad(pool: TaskPool, alpha: float, w) -> np.ndarray:
    """First-order MAML direction E_i[grad f_i(w - alpha grad f_i(w))]; no Hessians."""
    w = as_vector(w, pool.dim)
    if pool.is_quadratic:
        H, b, _ = pool.quadratic_stack
        pool.charge(grad=2)
        return _finite_vec(kernels.fo_maml_grad(H, b, pool.weights, alpha, w), "FO-MAML direction")
    out = np.zeros(pool.dim)
    for p, t in pool:
        out += p * _finite_vec(t.grad(inner_step(t, alpha, w)), "gradient at the inner point")
    return out


def maml_hess(pool: TaskPool, alpha: float, w=None, method: str = "auto", h: float | None = None) -> np.ndarray:
    """Hessian of F at w.

    method="auto" picks the closed form for quadratic pools, the exact chain
    rule when every task provides third derivatives, and central differences
    of ``maml_grad`` otherwise. "analytic" and "fd" force a path.
    """
    d = pool.dim
    w = np.zeros(d) if w is None else as_vector(w, d)
    if method == "auto":
        if pool.is_quadratic:
            method = "quadratic"
        elif all(t.has_third for t in pool.tasks):
            method = "analytic"
        else:
            method = "fd"
    if method == "quadratic":
        if not pool.is_quadratic:
            raise ValueError("closed-form MAML Hessian needs a quadratic pool")
        H = pool.quadratic_stack[0]
        A = np.eye(d)[None] - alpha * H
        return np.einsum("i,iab,ibc,icd->ad", pool.weights, A, H, A)
    if method == "analytic":
        out = np.zeros((d, d))
        for p, t in pool:
            g = t.grad(w)
            u = w - alpha * g
            g2 = t.grad(u)
            A = np.eye(d) - alpha * t.hess(w)
            out += p * (A @ t.hess(u) @ A - alpha * t.third(w, g2))
        return 0.5 * (out + out.T)
    if method == "fd":
        step = 1e-4 * max(1.0, float(np.linalg.norm(w))) if h is None else h
        J = finite_diff_jacobian(lambda v: maml_grad(pool, alpha, v), w, step)
        return 0.5 * (J + J.T)
    raise ValueError(f"unknown method {method!r}")


def monitor(pool: TaskPool, alpha: float, w) -> tuple[float, np.ndarray, np.ndarray]:
    """(F(w), grad F(w), grad f(w)) without touching the evaluation counters."""
    w = as_vector(w, pool.dim)
    with uncounted():
        if pool.is_quadratic:
            H, b, c = pool.quadratic_stack
            return kernels.monitor(H, b, c, pool.weights, alpha, w)
        return maml_loss(pool, alpha, w), maml_grad(pool, alpha, w), expected_grad(pool, w)
