"""Discrete training loops: gradient descent on the expected loss, MAML,
first-order MAML and biphasic MAML.

Each loop is a forward Euler integration of the matching field in ``flow``
with step ``config.beta``.
"""

from __future__ import annotations

import numpy as np

from .flow import (
    BiMamlField,
    ExpectedLossField,
    FoMamlField,
    LiteralBiMamlField,
    Stop,
    euler_integrate,
    maml_ode_field,
)
from .task_model import MamlConfig, TaskPool, Trajectory
from .theory_map import register


def _stop(config: MamlConfig, eps: float) -> Stop:
    return Stop(eps=eps, max_time=config.max_time, max_iters=config.max_iters)


def run_gd_f(pool: TaskPool, config: MamlConfig, w0) -> Trajectory:
    """w <- w - beta grad f(w) until ||grad f|| <= eps0."""
    field = ExpectedLossField(pool, config.alpha)
    return euler_integrate(field, w0, config.beta, _stop(config, config.eps0), algorithm="gd_f", config=config)


@register("maml-update", operation="run_maml", check="euler_equivalence")
def run_maml(pool: TaskPool, config: MamlConfig, w0) -> Trajectory:
    """w <- w - beta grad F(w) until ||grad F|| <= eps."""
    field = maml_ode_field(pool, config.alpha)
    return euler_integrate(field, w0, config.beta, _stop(config, config.eps), algorithm="maml", config=config)


def run_fo_maml(pool: TaskPool, config: MamlConfig, w0) -> Trajectory:
    """First-order MAML; stops on the true ||grad F|| so runs are comparable with MAML."""
    field = FoMamlField(pool, config.alpha)
    return euler_integrate(field, w0, config.beta, _stop(config, config.eps), algorithm="fo_maml", config=config)


@register("biphasic-discrete", operation="run_bi_maml", check="phase_latch")
@register("synthetic-experiments", check="bi_maml_efficiency")
def run_bi_maml(pool: TaskPool, config: MamlConfig, w0, literal: bool = False) -> Trajectory:
    """Biphasic MAML.

    Gradient descent on f while ||grad f|| > eps0, then (for good) gradient
    descent on F until ||grad F|| <= eps. With ``literal=True`` the branch is
    instead re-decided every iteration with the opposite condition (f when
    ||grad f|| <= eps0); that variant exists for comparison only.
    """
    if literal:
        field = LiteralBiMamlField(pool, config.alpha, config.eps0)
        return euler_integrate(
            field, w0, config.beta, _stop(config, config.eps), algorithm="bi_maml_literal", config=config
        )
    field = BiMamlField(pool, config.alpha, config.eps0)
    traj = euler_integrate(field, w0, config.beta, _stop(config, config.eps), algorithm="bi_maml", config=config)
    traj.meta["switch_iter"] = field.latch.switch_iter
    traj.meta["switch_time"] = field.latch.switch_time
    return traj


ALGORITHMS = {
    "gd_f": run_gd_f,
    "maml": run_maml,
    "fo_maml": run_fo_maml,
    "bi_maml": run_bi_maml,
}


def run(name: str, pool: TaskPool, config: MamlConfig, w0) -> Trajectory:
    from .flow import solve_bi_maml_ode, solve_maml_ode

    table = dict(ALGORITHMS, maml_ode=solve_maml_ode, bi_maml_ode=solve_bi_maml_ode)
    if name == "bi_maml_literal":
        return run_bi_maml(pool, config, w0, literal=True)
    if name not in table:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(table) + ['bi_maml_literal']}")
    return table[name](pool, config, np.asarray(w0, dtype=np.float64))
