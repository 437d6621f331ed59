"""Task losses, weighted task pools, run configuration and trajectory records."""

from __future__ import annotations

import contextlib
import contextvars
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

WEIGHT_TOL = 1e-12

# Monitoring evaluations (trajectory bookkeeping, diagnostics) run with counting
# switched off so the counters only reflect what an algorithm actually pays for.
_counting = contextvars.ContextVar("mamlflow_counting", default=True)


class MamlError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(MamlError, ValueError):
    pass


class EvaluationOverflow(MamlError, ArithmeticError):
    pass


class PoolValidationError(MamlError, ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ConfigError(MamlError, ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class HypothesisViolation(MamlError, ValueError):
    """A closed-form bound was requested outside the hypotheses it is proved under."""


@contextlib.contextmanager
def uncounted() -> Iterator[None]:
    token = _counting.set(False)
    try:
        yield
    finally:
        _counting.reset(token)


class EvalCounters:
    """Thread-safe evaluation counters attached to a task loss."""

    __slots__ = ("_lock", "value_evals", "grad_evals", "hess_evals")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.value_evals = 0
        self.grad_evals = 0
        self.hess_evals = 0

    def add(self, value: int = 0, grad: int = 0, hess: int = 0) -> None:
        if not _counting.get():
            return
        with self._lock:
            self.value_evals += value
            self.grad_evals += grad
            self.hess_evals += hess

    def reset(self) -> None:
        with self._lock:
            self.value_evals = self.grad_evals = self.hess_evals = 0

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return {
                "value_evals": self.value_evals,
                "grad_evals": self.grad_evals,
                "hess_evals": self.hess_evals,
            }


def as_vector(w, dim: int | None = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(w, dtype=np.float64))
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d parameter vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


class TaskLoss:
    """One task's risk f_i.

    Subclasses implement ``_value``, ``_grad`` and ``_hess``; the public
    methods validate the input, charge the counters and return float64 data.
    ``_third(w, v)`` may be provided to return the third-derivative tensor
    contracted with ``v`` (a d x d matrix); it enables the exact MAML Hessian.
    """

    analytic_hessian = True

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self.counters = EvalCounters()

    def value(self, w) -> float:
        w = as_vector(w, self.dim)
        self.counters.add(value=1)
        return float(self._value(w))

    def grad(self, w) -> np.ndarray:
        w = as_vector(w, self.dim)
        self.counters.add(grad=1)
        return np.asarray(self._grad(w), dtype=np.float64).reshape(self.dim)

    def hess(self, w) -> np.ndarray:
        w = as_vector(w, self.dim)
        self.counters.add(hess=1)
        return np.asarray(self._hess(w), dtype=np.float64).reshape(self.dim, self.dim)

    @property
    def has_third(self) -> bool:
        return type(self)._third is not TaskLoss._third

    def third(self, w, v) -> np.ndarray:
        w = as_vector(w, self.dim)
        v = as_vector(v, self.dim)
        return np.asarray(self._third(w, v), dtype=np.float64).reshape(self.dim, self.dim)

    def curvature_bounds(self) -> tuple[float, float, float] | None:
        """Certified (mu, L, kappa) valid on all of R^d, when known in closed form."""
        return None

    def _value(self, w):
        raise NotImplementedError

    def _grad(self, w):
        raise NotImplementedError

    def _hess(self, w):
        raise NotImplementedError

    def _third(self, w, v):
        raise NotImplementedError


class TaskPool:
    """M tasks with sampling probabilities; immutable after construction."""

    def __init__(self, tasks: Sequence[TaskLoss], weights=None, name: str = "pool"):
        tasks = tuple(tasks)
        if weights is None:
            weights = np.full(len(tasks), 1.0 / max(len(tasks), 1))
        weights = np.array(weights, dtype=np.float64).reshape(-1)
        problems = _structural_problems(tasks, weights)
        if problems:
            raise PoolValidationError(problems)
        weights.setflags(write=False)
        self.tasks = tasks
        self.weights = weights
        self.name = name
        self._stack = _quadratic_stack(tasks)

    @property
    def dim(self) -> int:
        return self.tasks[0].dim

    @property
    def M(self) -> int:
        return len(self.tasks)

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self):
        return iter(zip(self.weights, self.tasks))

    @property
    def quadratic_stack(self):
        """(H, b, c) arrays of shape (M,d,d), (M,d), (M,) when every task is quadratic."""
        return self._stack

    @property
    def is_quadratic(self) -> bool:
        return self._stack is not None

    def charge(self, value: int = 0, grad: int = 0, hess: int = 0) -> None:
        for task in self.tasks:
            task.counters.add(value=value, grad=grad, hess=hess)

    def totals(self) -> dict[str, int]:
        out = {"value_evals": 0, "grad_evals": 0, "hess_evals": 0}
        for task in self.tasks:
            for k, v in task.counters.snapshot().items():
                out[k] += v
        return out

    def reset_counters(self) -> None:
        for task in self.tasks:
            task.counters.reset()

    def with_weights(self, weights) -> "TaskPool":
        """Same task objects under a different distribution (counters shared)."""
        return TaskPool(self.tasks, weights, name=self.name)


def _structural_problems(tasks, weights) -> list[str]:
    problems = []
    if len(tasks) < 1:
        return ["pool must contain at least one task"]
    if weights.shape[0] != len(tasks):
        problems.append(f"got {weights.shape[0]} weights for {len(tasks)} tasks")
        return problems
    if not np.all(np.isfinite(weights)):
        problems.append("weights must be finite")
    elif np.any(weights < 0):
        problems.append("weights must be non-negative")
    elif abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
        problems.append(f"weights must sum to 1 (sum = {math.fsum(weights)!r})")
    dims = {t.dim for t in tasks}
    if len(dims) > 1:
        problems.append(f"dimension mismatch: tasks have dims {sorted(dims)}")
    return problems


def _quadratic_stack(tasks):
    from .losses import QuadraticLoss

    if not all(isinstance(t, QuadraticLoss) for t in tasks):
        return None
    H = np.ascontiguousarray(np.stack([t.H for t in tasks]))
    b = np.ascontiguousarray(np.stack([t.b for t in tasks]))
    c = np.array([t.c for t in tasks])
    for arr in (H, b, c):
        arr.setflags(write=False)
    return H, b, c


def validate_pool(pool: TaskPool) -> list[str]:
    """Return the list of violated pool invariants (empty when the pool is sound)."""
    problems = _structural_problems(pool.tasks, np.asarray(pool.weights))
    if problems:
        return problems
    origin = np.zeros(pool.dim)
    with uncounted():
        for i, task in enumerate(pool.tasks):
            try:
                v = task.value(origin)
                g = task.grad(origin)
            except (ArithmeticError, ValueError) as exc:
                problems.append(f"task {i}: evaluation at the origin failed ({exc})")
                continue
            if not (math.isfinite(v) and np.all(np.isfinite(g))):
                problems.append(f"task {i}: non-finite evaluation at the origin")
    if pool.is_quadratic:
        H = pool.quadratic_stack[0]
        mins = np.linalg.eigvalsh(H)[:, 0]
        for i in np.flatnonzero(mins <= 1e-12 * max(1.0, float(np.abs(H).max()))):
            problems.append(f"task {i}: not strongly convex (min Hessian eigenvalue {mins[i]:.3g})")
    return problems


def expected_loss(pool: TaskPool, w) -> float:
    w = as_vector(w, pool.dim)
    return math.fsum(p * t.value(w) for p, t in pool)


def expected_grad(pool: TaskPool, w) -> np.ndarray:
    from . import kernels

    w = as_vector(w, pool.dim)
    if pool.is_quadratic:
        H, b, _ = pool.quadratic_stack
        pool.charge(grad=1)
        return kernels.expected_grad(H, b, pool.weights, w)
    out = np.zeros(pool.dim)
    for p, t in pool:
        out += p * t.grad(w)
    return out


def expected_hess(pool: TaskPool, w) -> np.ndarray:
    w = as_vector(w, pool.dim)
    out = np.zeros((pool.dim, pool.dim))
    for p, t in pool:
        out += p * t.hess(w)
    return out


INTEGRATORS = ("euler", "rk4")


@dataclass(frozen=True)
class MamlConfig:
    """Step sizes, tolerances and budgets for one run.

    ``alpha = 0`` and ``beta = 0`` are accepted as degenerate cases (MAML
    reduces to gradient descent on f, resp. a frozen iterate); the command
    line front end is stricter.
    """

    alpha: float = 0.1
    beta: float = 0.05
    eps: float = 1e-6
    eps0: float = 0.1
    max_iters: int = 10_000
    max_time: float = math.inf
    integrator: str = "euler"

    def __post_init__(self):
        for key in ("alpha", "beta"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(key, f"must be finite and >= 0, got {v!r}")
        for key in ("eps", "eps0"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(key, f"must be finite and > 0, got {v!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError("max_iters", "must be a positive integer")
        if not self.max_time > 0:
            raise ConfigError("max_time", "must be > 0")
        if self.integrator not in INTEGRATORS:
            raise ConfigError("integrator", f"must be one of {INTEGRATORS}")

    def replace(self, **changes) -> "MamlConfig":
        return replace(self, **changes)


PHASES = ("expected_loss", "maml")
TERMINATIONS = ("converged", "iter_budget", "time_budget", "diverged")


@dataclass(frozen=True)
class TrajectorySample:
    iter: int
    t: float
    w: np.ndarray
    F_val: float
    gradF_norm: float
    gradf_norm: float
    phase: str
    hess_evals_cum: int
    grad_evals_cum: int
    wall_ns: int


@dataclass
class Trajectory:
    samples: list[TrajectorySample]
    termination: str
    config: MamlConfig | None = None
    algorithm: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.samples:
            raise ValueError("a trajectory holds at least one sample")
        if self.termination not in TERMINATIONS:
            raise ValueError(f"unknown termination {self.termination!r}")

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, i) -> TrajectorySample:
        return self.samples[i]

    @property
    def final(self) -> TrajectorySample:
        return self.samples[-1]

    @property
    def ws(self) -> np.ndarray:
        return np.stack([s.w for s in self.samples])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def first_time_below(self, name: str, threshold: float) -> float | None:
        """Earliest recorded time at which column ``name`` is <= threshold."""
        for s in self.samples:
            if getattr(s, name) <= threshold:
                return s.t
        return None
