"""Concrete task losses: quadratics (linear regression), the sinusoidal-quadratic
family behind the non-convex MAML loss example, (smoothed) hinge losses, and a
finite-difference fallback for losses given only by their values."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .task_model import EvaluationOverflow, TaskLoss, TaskPool, as_vector

_SYM_TOL = 1e-10


class QuadraticLoss(TaskLoss):
    """f(w) = 1/2 w'Hw + b'w + c with H symmetric positive semidefinite."""

    def __init__(self, H, b, c: float = 0.0):
        H = np.atleast_2d(np.asarray(H, dtype=np.float64))
        b = np.atleast_1d(np.asarray(b, dtype=np.float64)).reshape(-1)
        d = b.shape[0]
        if H.shape != (d, d):
            raise ValueError(f"H has shape {H.shape}, expected {(d, d)}")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(b)) and math.isfinite(c)):
            raise ValueError("quadratic coefficients must be finite")
        scale = max(1.0, float(np.abs(H).max()))
        if np.abs(H - H.T).max() > _SYM_TOL * scale:
            raise ValueError("H must be symmetric")
        H = 0.5 * (H + H.T)
        eig = np.linalg.eigvalsh(H)
        if eig[0] < -1e-10 * scale:
            raise ValueError(f"H must be positive semidefinite (min eigenvalue {eig[0]:.3g})")
        super().__init__(d)
        H.setflags(write=False)
        b.setflags(write=False)
        self.H, self.b, self.c = H, b, float(c)
        self._eig = (float(eig[0]), float(eig[-1]))

    def _value(self, w):
        return 0.5 * w @ self.H @ w + self.b @ w + self.c

    def _grad(self, w):
        return self.H @ w + self.b

    def _hess(self, w):
        return self.H.copy()

    def _third(self, w, v):
        return np.zeros((self.dim, self.dim))

    def curvature_bounds(self):
        return self._eig[0], self._eig[1], 0.0

    def minimizer(self) -> np.ndarray:
        return np.linalg.lstsq(self.H, -self.b, rcond=None)[0]

    def __repr__(self):
        return f"QuadraticLoss(d={self.dim})"


class SinusoidalQuadraticLoss(TaskLoss):
    """Scalar f(w) = a w^2 + amp sin(freq w).

    f'' ranges over [2a - |amp| freq^2, 2a + |amp| freq^2], so the loss is
    strongly convex exactly when 2a > |amp| freq^2.
    """

    def __init__(self, a: float, amp: float, freq: float):
        super().__init__(1)
        self.a, self.amp, self.freq = float(a), float(amp), float(freq)

    def _value(self, w):
        return self.a * w[0] ** 2 + self.amp * math.sin(self.freq * w[0])

    def _grad(self, w):
        return [2.0 * self.a * w[0] + self.amp * self.freq * math.cos(self.freq * w[0])]

    def _hess(self, w):
        return [[2.0 * self.a - self.amp * self.freq**2 * math.sin(self.freq * w[0])]]

    def _third(self, w, v):
        return [[-self.amp * self.freq**3 * math.cos(self.freq * w[0]) * v[0]]]

    def curvature_bounds(self):
        spread = abs(self.amp) * self.freq**2
        return 2.0 * self.a - spread, 2.0 * self.a + spread, abs(self.amp) * abs(self.freq) ** 3

    def __repr__(self):
        return f"SinusoidalQuadraticLoss(a={self.a}, amp={self.amp}, freq={self.freq})"


def _check_labels(y):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be in {-1, +1}")
    return y


def _check_design(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("empty data")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite entries in data")
    return X, y


class SmoothedHingeLoss(TaskLoss):
    """Average quadratically smoothed hinge (1/n) sum_j phi(1 - y_j x_j'w).

    phi(z) = 0 for z <= 0, z^2/(2 delta) on (0, delta), z - delta/2 beyond.
    The loss is piecewise quadratic, so its third derivative vanishes almost
    everywhere; ``third`` returns that a.e. value.
    """

    def __init__(self, X, y, delta: float = 0.1):
        X, y = _check_design(X, y)
        y = _check_labels(y)
        if not delta > 0:
            raise ValueError("delta must be > 0")
        super().__init__(X.shape[1])
        self.X, self.y, self.delta = X, y, float(delta)
        self._YX = y[:, None] * X
        self.n = X.shape[0]

    def _margins(self, w):
        return 1.0 - self._YX @ w

    def _value(self, w):
        z = self._margins(w)
        dl = self.delta
        phi = np.where(z <= 0, 0.0, np.where(z < dl, z * z / (2 * dl), z - dl / 2))
        return phi.mean()

    def _grad(self, w):
        z = self._margins(w)
        dphi = np.clip(z / self.delta, 0.0, 1.0)
        return -(dphi @ self._YX) / self.n

    def _hess(self, w):
        z = self._margins(w)
        active = (z > 0) & (z < self.delta)
        Xa = self.X[active]
        return Xa.T @ Xa / (self.n * self.delta)

    def _third(self, w, v):
        return np.zeros((self.dim, self.dim))

    def curvature_bounds(self):
        top = np.linalg.norm(self.X, 2) ** 2 / (self.n * self.delta)
        return 0.0, float(top), math.inf


class HingeLoss(TaskLoss):
    """Unsmoothed average hinge with a subgradient; the Hessian is zero a.e.

    Not twice differentiable, so it is kept out of every bound check.
    """

    analytic_hessian = False

    def __init__(self, X, y):
        X, y = _check_design(X, y)
        y = _check_labels(y)
        super().__init__(X.shape[1])
        self.X, self.y = X, y
        self._YX = y[:, None] * X
        self.n = X.shape[0]

    def _value(self, w):
        return np.maximum(0.0, 1.0 - self._YX @ w).mean()

    def _grad(self, w):
        active = (1.0 - self._YX @ w) > 0
        return -self._YX[active].sum(axis=0) / self.n

    def _hess(self, w):
        return np.zeros((self.dim, self.dim))


def _fd_step(w, rel):
    return rel * max(1.0, float(np.max(np.abs(w)))) if w.size else rel


def _value_fn(f) -> Callable[[np.ndarray], float]:
    return f.value if isinstance(f, TaskLoss) else f


def _finite(v):
    v = float(v)
    if not math.isfinite(v):
        raise EvaluationOverflow("evaluation overflow")
    return v


def finite_diff_grad(f, w, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of a scalar function (or a TaskLoss's value)."""
    fn = _value_fn(f)
    w = as_vector(w)
    h = _fd_step(w, 1e-5) if h is None else float(h)
    if not h > 0:
        raise ValueError("h must be > 0")
    g = np.empty_like(w)
    for k in range(w.size):
        e = np.zeros_like(w)
        e[k] = h
        g[k] = (_finite(fn(w + e)) - _finite(fn(w - e))) / (2 * h)
    return g


def finite_diff_hess(f, w, h: float | None = None) -> np.ndarray:
    """Central second differences of a scalar function, symmetrized."""
    fn = _value_fn(f)
    w = as_vector(w)
    h = _fd_step(w, 1e-4) if h is None else float(h)
    if not h > 0:
        raise ValueError("h must be > 0")
    d = w.size
    f0 = _finite(fn(w))
    E = np.eye(d) * h
    A = np.empty((d, d))
    for i in range(d):
        A[i, i] = (_finite(fn(w + E[i])) - 2 * f0 + _finite(fn(w - E[i]))) / h**2
        for j in range(i + 1, d):
            A[i, j] = (
                _finite(fn(w + E[i] + E[j]))
                - _finite(fn(w + E[i] - E[j]))
                - _finite(fn(w - E[i] + E[j]))
                + _finite(fn(w - E[i] - E[j]))
            ) / (4 * h**2)
            A[j, i] = A[i, j]
    return 0.5 * (A + A.T)


def finite_diff_jacobian(fn, w, h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of a vector function, rows = outputs."""
    w = as_vector(w)
    h = _fd_step(w, 1e-5) if h is None else float(h)
    cols = []
    for k in range(w.size):
        e = np.zeros_like(w)
        e[k] = h
        hi, lo = np.asarray(fn(w + e), dtype=float), np.asarray(fn(w - e), dtype=float)
        if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
            raise EvaluationOverflow("evaluation overflow")
        cols.append((hi - lo) / (2 * h))
    return np.stack(cols, axis=-1)


class FiniteDiffLoss(TaskLoss):
    """A task defined only by its value; derivatives by central differences."""

    analytic_hessian = False

    def __init__(self, value_fn, dim: int, h_grad: float | None = None, h_hess: float | None = None):
        super().__init__(dim)
        self.value_fn = value_fn
        self.h_grad, self.h_hess = h_grad, h_hess

    def _value(self, w):
        return self.value_fn(w)

    def _grad(self, w):
        return finite_diff_grad(self.value_fn, w, self.h_grad)

    def _hess(self, w):
        return finite_diff_hess(self.value_fn, w, self.h_hess)


def quadratic_from_regression(X, y, scale: str = "half_mean") -> QuadraticLoss:
    """Least-squares risk of a linear model as a quadratic.

    ``scale="half_mean"`` gives (1/(2n))||y - X g||^2, i.e. H = X'X/n,
    b = -X'y/n, c = y'y/(2n). ``scale="mean"`` gives (1/n)||y - X g||^2.
    """
    X, y = _check_design(X, y)
    n = X.shape[0]
    factor = {"half_mean": 1.0, "mean": 2.0}.get(scale)
    if factor is None:
        raise ValueError(f"unknown scale {scale!r}")
    H = factor * (X.T @ X) / n
    b = -factor * (X.T @ y) / n
    c = factor * float(y @ y) / (2 * n)
    return QuadraticLoss(H, b, c)


def smoothed_hinge(X, y, delta: float = 0.1) -> SmoothedHingeLoss:
    return SmoothedHingeLoss(X, y, delta)


def quadratic_pool(Hs, bs, cs=None, weights=None, name: str = "quadratic") -> TaskPool:
    cs = [0.0] * len(Hs) if cs is None else cs
    return TaskPool([QuadraticLoss(H, b, c) for H, b, c in zip(Hs, bs, cs)], weights, name=name)


def two_task_pool() -> TaskPool:
    """{1/2 (w-1)^2, 1/2 (w+1)^2} with uniform weights."""
    return TaskPool(
        [QuadraticLoss([[1.0]], [-1.0], 0.5), QuadraticLoss([[1.0]], [1.0], 0.5)],
        [0.5, 0.5],
        name="two_task",
    )


def counterexample_pool() -> TaskPool:
    """f1 = 0.505 w^2 - sin(w), f2 = 0.505 w^2 - 1e-4 sin(100 w), uniform.

    Both tasks are 0.01-strongly convex and 2.01-smooth, yet for alpha = 0.4
    the MAML loss has regions of negative curvature.
    """
    return TaskPool(
        [SinusoidalQuadraticLoss(0.505, -1.0, 1.0), SinusoidalQuadraticLoss(0.505, -1e-4, 100.0)],
        [0.5, 0.5],
        name="counterexample",
    )
