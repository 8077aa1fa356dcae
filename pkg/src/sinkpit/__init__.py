"""Permutation-invariant training losses and their relaxations.

Exact assignment solvers (brute force and Hungarian), log-domain Sinkhorn
balancing with the SinkPIT loss and its analytic cost-matrix gradient, a
log-semiring ProbPIT loss, Birkhoff decomposition of transport plans, an
SI-SDR pairwise cost pipeline with a synthetic mixing model, and a toy
linear-demixer training demo.
"""

from .assignment import (
    MAX_ENUMERATION_N,
    AssignmentResult,
    birkhoff_decompose,
    brute_force_pit,
    hungarian,
    round_plan,
)
from .demo import (
    DemixState,
    DemoConfig,
    TrainingDivergedError,
    best_permutation_mean_si_sdr,
    run_demo,
)
from .gradient import GradResult, finite_diff_grad, sinkpit_value_and_grad
from .matrices import (
    MAX_SIZE,
    CostMatrix,
    LogPlan,
    Permutation,
    TransportPlan,
    check_doubly_stochastic,
    entropy,
    frobenius_inner,
    load_matrix_csv,
    matrix_to_permutation,
    permutation_to_matrix,
    save_matrix_csv,
)
from .probpit import PermutationPrior, log_semiring_add, probpit_loss
from .signals import (
    MixingMatrix,
    Waveform,
    load_waveform,
    mix,
    pairwise_cost_matrix,
    random_mixing_gains,
    save_waveform,
    si_sdr,
)
from .sinkhorn import (
    AnnealSchedule,
    SinkhornConfig,
    SinkhornDivergenceError,
    anneal_beta,
    batch_sinkpit_loss,
    entropic_objective,
    sinkhorn_iterate,
    sinkpit_loss,
)

__version__ = "0.1.0"

__all__ = [
    "MAX_ENUMERATION_N",
    "MAX_SIZE",
    "AnnealSchedule",
    "AssignmentResult",
    "CostMatrix",
    "DemixState",
    "DemoConfig",
    "GradResult",
    "LogPlan",
    "MixingMatrix",
    "Permutation",
    "PermutationPrior",
    "SinkhornConfig",
    "SinkhornDivergenceError",
    "TrainingDivergedError",
    "TransportPlan",
    "Waveform",
    "anneal_beta",
    "batch_sinkpit_loss",
    "best_permutation_mean_si_sdr",
    "birkhoff_decompose",
    "brute_force_pit",
    "check_doubly_stochastic",
    "entropic_objective",
    "entropy",
    "finite_diff_grad",
    "frobenius_inner",
    "hungarian",
    "load_matrix_csv",
    "load_waveform",
    "matrix_to_permutation",
    "mix",
    "pairwise_cost_matrix",
    "permutation_to_matrix",
    "probpit_loss",
    "random_mixing_gains",
    "round_plan",
    "run_demo",
    "save_matrix_csv",
    "save_waveform",
    "si_sdr",
    "sinkhorn_iterate",
    "sinkpit_loss",
    "sinkpit_value_and_grad",
    "log_semiring_add",
]
