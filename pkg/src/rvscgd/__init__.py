"""Sparse filter learning by relaxed variable splitting coarse gradient descent.

A numpy library for training a one-hidden-layer, non-overlap,
binarized-activation network with a sparsity-promoting splitting variable:
closed-form thresholding operators (l1 / l0 / transformed-l1), Gaussian-input
sample and population quantities, the alternating descent loop with
normalization, and an experiment harness for sparsity sweeps.
"""

from .harness import ExperimentConfig, build_teacher, emit_angle_plot, emit_table, run_experiment
from .model import (
    Dataset,
    coarse_grad_sample,
    empirical_coarse_grad,
    empirical_risk,
    forward,
    sample_loss,
    sample_patches,
)
from .optimizer import (
    HyperParams,
    IterState,
    LimitDiagnostics,
    PreconditionReport,
    RunResult,
    TraceRecord,
    check_preconditions,
    init_weight,
    lagrangian,
    limit_diagnostics,
    run,
    rvscgd_step,
)
from .penalties import (
    PenaltySpec,
    brute_force_prox,
    penalty_value,
    prox_scalar,
    prox_vector,
    tl1_threshold,
)
from .population import angle, expected_coarse_grad, grad_correlation, population_loss, true_grad

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "build_teacher", "emit_angle_plot", "emit_table",
    "run_experiment",
    "Dataset", "coarse_grad_sample", "empirical_coarse_grad", "empirical_risk",
    "forward", "sample_loss", "sample_patches",
    "HyperParams", "IterState", "LimitDiagnostics", "PreconditionReport",
    "RunResult", "TraceRecord", "check_preconditions", "init_weight",
    "lagrangian", "limit_diagnostics", "run", "rvscgd_step",
    "PenaltySpec", "brute_force_prox", "penalty_value", "prox_scalar",
    "prox_vector", "tl1_threshold",
    "angle", "expected_coarse_grad", "grad_correlation", "population_loss",
    "true_grad",
]
