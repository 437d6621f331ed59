"""MAML, first-order MAML and biphasic MAML on pools of task losses, their
gradient-flow limits, and numerical checks of the associated convergence bounds."""

from .kernels import BACKEND
from .losses import (
    HingeLoss,
    QuadraticLoss,
    SinusoidalQuadraticLoss,
    SmoothedHingeLoss,
    counterexample_pool,
    quadratic_pool,
    two_task_pool,
)
from .meta_grad import fo_maml_grad, maml_grad, maml_hess, maml_loss
from .optimizers import run_bi_maml, run_fo_maml, run_gd_f, run_maml
from .task_model import MamlConfig, TaskLoss, TaskPool, Trajectory, expected_grad, expected_loss

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HingeLoss",
    "MamlConfig",
    "QuadraticLoss",
    "SinusoidalQuadraticLoss",
    "SmoothedHingeLoss",
    "TaskLoss",
    "TaskPool",
    "Trajectory",
    "counterexample_pool",
    "expected_grad",
    "expected_loss",
    "fo_maml_grad",
    "maml_grad",
    "maml_hess",
    "maml_loss",
    "quadratic_pool",
    "run_bi_maml",
    "run_fo_maml",
    "run_gd_f",
    "run_maml",
    "two_task_pool",
]
