"""Gradient-flow limits of MAML and biphasic MAML, and the fixed-step
integrators (forward Euler, classical RK4) that drive every run.

The discrete algorithms in ``optimizers`` are Euler integrations of the
fields defined here and go through the same loop, so one Euler step on the
MAML field and one MAML iteration are the same floating-point operations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .meta_grad import fo_maml_grad, maml_grad, monitor
from .task_model import (
    MamlConfig,
    TaskPool,
    Trajectory,
    TrajectorySample,
    as_vector,
    expected_grad,
)
from .theory_map import register

DIVERGENCE_NORM = 1e12


class VectorField:
    """Right-hand side w' = field(w).

    ``pool``/``alpha`` are used to record F, ||grad F|| and ||grad f|| along
    trajectories; a field without a pool records ||field(w)|| as its
    stopping metric.
    """

    tag = "custom"

    def __init__(self, fn=None, tag: str | None = None, pool: TaskPool | None = None, alpha: float = 0.0):
        self._fn = fn
        if tag is not None:
            self.tag = tag
        self.pool = pool
        self.alpha = float(alpha)

    def __call__(self, w) -> np.ndarray:
        return np.asarray(self._fn(w), dtype=np.float64)

    def eval(self, w) -> np.ndarray:
        return self(as_vector(w))

    @property
    def phase(self) -> str:
        return "maml"

    def begin_step(self, w, t: float) -> None:
        """Hook run once at the start of every accepted step."""

    def stop_metric(self, sample: TrajectorySample) -> float:
        return sample.gradF_norm


class MamlField(VectorField):
    tag = "maml_ode"

    def __init__(self, pool, alpha):
        super().__init__(pool=pool, alpha=alpha)

    def __call__(self, w):
        return -maml_grad(self.pool, self.alpha, w)


class ExpectedLossField(VectorField):
    tag = "expected_loss_flow"

    def __init__(self, pool, alpha=0.0):
        super().__init__(pool=pool, alpha=alpha)

    def __call__(self, w):
        return -expected_grad(self.pool, w)

    @property
    def phase(self):
        return "expected_loss"

    def stop_metric(self, sample):
        return sample.gradf_norm


class FoMamlField(VectorField):
    tag = "fo_maml"

    def __init__(self, pool, alpha):
        super().__init__(pool=pool, alpha=alpha)

    def __call__(self, w):
        return -fo_maml_grad(self.pool, self.alpha, w)


@dataclass
class LatchState:
    switched: bool = False
    switch_time: float | None = None
    switch_iter: int | None = None


class BiMamlField(VectorField):
    """-grad f until ||grad f|| <= eps0 first holds, then -grad F for good.

    The switch condition is tested only in ``begin_step`` so the field stays
    fixed within a step (all four RK4 stages use the same branch).
    """

    tag = "bi_maml_ode"

    def __init__(self, pool, alpha, eps0, latch_state: LatchState | None = None):
        super().__init__(pool=pool, alpha=alpha)
        if not eps0 > 0:
            raise ValueError("eps0 must be > 0")
        self.eps0 = float(eps0)
        self.latch = latch_state if latch_state is not None else LatchState()
        self._steps = 0
        self._cache = None

    @property
    def phase(self):
        return "maml" if self.latch.switched else "expected_loss"

    def begin_step(self, w, t):
        if not self.latch.switched:
            g = expected_grad(self.pool, w)
            if np.linalg.norm(g) <= self.eps0:
                self.latch.switched = True
                self.latch.switch_time = t
                self.latch.switch_iter = self._steps
                self._cache = None
            else:
                self._cache = (w.copy(), g)
        self._steps += 1

    def __call__(self, w):
        if self.latch.switched:
            return -maml_grad(self.pool, self.alpha, w)
        if self._cache is not None and np.array_equal(self._cache[0], w):
            return -self._cache[1]
        return -expected_grad(self.pool, w)

    def stop_metric(self, sample):
        return sample.gradF_norm if self.latch.switched else math.inf


class LiteralBiMamlField(VectorField):
    """Branch condition exactly as printed: descend f when ||grad f|| <= eps0,
    otherwise F. Re-evaluated at every step, no latch; for comparison only."""

    tag = "bi_maml_literal"

    def __init__(self, pool, alpha, eps0):
        super().__init__(pool=pool, alpha=alpha)
        self.eps0 = float(eps0)
        self._phase = "maml"
        self._branch_f = False

    @property
    def phase(self):
        return self._phase

    def begin_step(self, w, t):
        self._branch_f = np.linalg.norm(expected_grad(self.pool, w)) <= self.eps0
        self._phase = "expected_loss" if self._branch_f else "maml"

    def __call__(self, w):
        if self._branch_f:
            return -expected_grad(self.pool, w)
        return -maml_grad(self.pool, self.alpha, w)


@register("maml-ode", operation="maml_ode_field", check="flow_descent")
def maml_ode_field(pool: TaskPool, alpha: float) -> MamlField:
    return MamlField(pool, alpha)


def expected_loss_field(pool: TaskPool, alpha: float = 0.0) -> ExpectedLossField:
    return ExpectedLossField(pool, alpha)


@register("biphasic-ode", operation="bi_maml_field")
def bi_maml_field(pool: TaskPool, alpha: float, eps0: float, latch_state: LatchState | None = None) -> BiMamlField:
    return BiMamlField(pool, alpha, eps0, latch_state)


@dataclass(frozen=True)
class Stop:
    eps: float = 1e-8
    max_time: float = math.inf
    max_iters: int = 1_000_000


def _euler(field, w, beta):
    return w + beta * field(w)


def _rk4(field, w, beta):
    k1 = field(w)
    k2 = field(w + (0.5 * beta) * k1)
    k3 = field(w + (0.5 * beta) * k2)
    k4 = field(w + beta * k3)
    return w + (beta / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS = {"euler": _euler, "rk4": _rk4}


def integrate(
    field: VectorField,
    w0,
    beta: float,
    stop: Stop,
    method: str = "euler",
    *,
    algorithm: str | None = None,
    config: MamlConfig | None = None,
) -> Trajectory:
    """Fixed-step integration with a sample recorded at every step boundary.

    Sample k holds w_k at t = k*beta, the phase of the step taken from it,
    and the evaluation counts spent to reach it. The run stops when the
    field's stopping metric drops to ``stop.eps`` (converged), on budget, or
    when the iterate blows up (||w||_inf > 1e12 or non-finite).
    """
    step = _STEPPERS[method]
    if not beta >= 0:
        raise ValueError("beta must be >= 0")
    w = as_vector(w0).copy()
    pool = field.pool
    base = pool.totals() if pool is not None else None
    start = time.perf_counter_ns()
    samples: list[TrajectorySample] = []
    termination = None
    k = 0
    while True:
        t = k * beta
        blown = not np.all(np.isfinite(w)) or float(np.max(np.abs(w))) > DIVERGENCE_NORM
        if not blown:
            field.begin_step(w, t)
        sample = _record(field, w, k, t, base, start, blown)
        samples.append(sample)
        if blown or not math.isfinite(sample.gradF_norm):
            termination = "diverged"
            break
        if field.stop_metric(sample) <= stop.eps:
            termination = "converged"
            break
        if k >= stop.max_iters:
            termination = "iter_budget"
            break
        if t >= stop.max_time * (1 - 1e-12):
            termination = "time_budget"
            break
        with np.errstate(over="ignore", invalid="ignore"):
            w = step(field, w, beta)
        k += 1
    return Trajectory(samples, termination, config, algorithm or field.tag, meta={"beta": beta, "method": method})


def _record(field, w, k, t, base, start, blown) -> TrajectorySample:
    pool = field.pool
    nan = float("nan")
    if blown:
        F = gF = gf = nan
    elif pool is not None:
        with np.errstate(all="ignore"):
            F, gradF, gradf = monitor(pool, field.alpha, w)
        gF, gf = float(np.linalg.norm(gradF)), float(np.linalg.norm(gradf))
    else:
        F, gf = nan, nan
        gF = float(np.linalg.norm(field(w)))
    if base is not None:
        tot = pool.totals()
        hess = tot["hess_evals"] - base["hess_evals"]
        grad = tot["grad_evals"] - base["grad_evals"]
    else:
        hess = grad = 0
    return TrajectorySample(
        iter=k,
        t=float(t),
        w=w.copy(),
        F_val=float(F),
        gradF_norm=gF,
        gradf_norm=gf,
        phase=field.phase,
        hess_evals_cum=int(hess),
        grad_evals_cum=int(grad),
        wall_ns=time.perf_counter_ns() - start,
    )


def euler_integrate(field: VectorField, w0, beta: float, stop: Stop, **kw) -> Trajectory:
    return integrate(field, w0, beta, stop, "euler", **kw)


@register("maml-ode", operation="rk4_integrate")
def rk4_integrate(field: VectorField, w0, beta: float, stop: Stop, **kw) -> Trajectory:
    return integrate(field, w0, beta, stop, "rk4", **kw)


def _stop_from(config: MamlConfig, eps: float | None = None) -> Stop:
    return Stop(eps=config.eps if eps is None else eps, max_time=config.max_time, max_iters=config.max_iters)


def solve_maml_ode(pool: TaskPool, config: MamlConfig, w0) -> Trajectory:
    """MAML gradient flow w' = -grad F(w) with the configured integrator and step beta."""
    return integrate(
        maml_ode_field(pool, config.alpha), w0, config.beta, _stop_from(config), config.integrator,
        algorithm="maml_ode", config=config,
    )


def solve_bi_maml_ode(pool: TaskPool, config: MamlConfig, w0) -> Trajectory:
    field = bi_maml_field(pool, config.alpha, config.eps0)
    traj = integrate(field, w0, config.beta, _stop_from(config), config.integrator, algorithm="bi_maml_ode", config=config)
    traj.meta["switch_time"] = field.latch.switch_time
    traj.meta["switch_iter"] = field.latch.switch_iter
    return traj
