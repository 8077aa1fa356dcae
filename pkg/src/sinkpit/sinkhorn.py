"""Log-domain Sinkhorn balancing and the SinkPIT loss.

The iteration starts from Z = -beta * C and alternately subtracts the
column and then the row log-sum-exp, so exp(Z) converges to the doubly
stochastic scaling of exp(-beta * C). Evaluated on the balanced plan,

    loss = (1/n) * <C + Z/beta, exp Z>

is a differentiable surrogate for the exact permutation-invariant loss:
it equals the entropy-regularized assignment objective whenever exp(Z)
is exactly balanced, and tightens to min_P <C, P>/n as beta grows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matrices import CostMatrix, LogPlan, TransportPlan, entropy, frobenius_inner


class SinkhornDivergenceError(ArithmeticError):
    """Non-finite iterate: beta is too large for the cost scale."""

    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(
            f"non-finite Sinkhorn iterate at iteration {iteration}; "
            "beta is likely too large for the cost scale"
        )


@dataclass(frozen=True)
class SinkhornConfig:
    """Inverse temperature and fixed sweep count for the balancing loop.

    One iteration is a full column-then-row normalization pair. n, when
    given, pins the matrix size the config is valid for.
    """

    beta: float
    iterations: int = 200
    n: int | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.n is not None and self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")


@dataclass(frozen=True)
class AnnealSchedule:
    """Cooling schedule beta(epoch) = min(base**epoch, cap)."""

    base: float = 1.02
    cap: float = 10.0

    def __post_init__(self):
        if not self.base > 1:
            raise ValueError(f"base must exceed 1, got {self.base}")
        if not self.cap >= 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")


def _lse_columns(z: np.ndarray) -> np.ndarray:
    """Max-shifted log-sum-exp down each column, shape (1, n)."""
    m = z.max(axis=0, keepdims=True)
    return m + np.log(np.exp(z - m).sum(axis=0, keepdims=True))


def _lse_rows(z: np.ndarray) -> np.ndarray:
    """Max-shifted log-sum-exp along each row, shape (n, 1)."""
    m = z.max(axis=1, keepdims=True)
    return m + np.log(np.exp(z - m).sum(axis=1, keepdims=True))


def _require_size(c: CostMatrix, cfg: SinkhornConfig) -> None:
    if cfg.n is not None and cfg.n != c.n:
        raise ValueError(f"config pins n={cfg.n} but the cost matrix is {c.n}x{c.n}")


def _exp_marginal_deviation(z: np.ndarray) -> float:
    b = np.exp(z)
    return max(
        float(np.abs(b.sum(axis=0) - 1.0).max()),
        float(np.abs(b.sum(axis=1) - 1.0).max()),
    )


def sinkhorn_iterate(
    c: CostMatrix, cfg: SinkhornConfig, stop_tol: float | None = None
) -> LogPlan:
    """Run cfg.iterations column+row normalization sweeps from Z = -beta*C.

    stop_tol, when set, turns cfg.iterations into a maximum: the loop ends
    early once the exponentiated plan's marginal deviation falls below it
    (useful for cold-limit runs at large beta). The deviation is sampled
    every few sweeps, so the loop may run slightly past the minimal count;
    iterations_done on the returned plan records the sweeps performed.
    """
    _require_size(c, cfg)
    with np.errstate(over="ignore"):  # detected and reported below
        z = -cfg.beta * c.entries
    if not np.isfinite(z).all():
        raise SinkhornDivergenceError(0)
    done = 0
    for k in range(1, cfg.iterations + 1):
        z = z - _lse_columns(z)
        z = z - _lse_rows(z)
        if not np.isfinite(z).all():
            raise SinkhornDivergenceError(k)
        done = k
        if (
            stop_tol is not None
            and (k % 8 == 0 or k == cfg.iterations)
            and _exp_marginal_deviation(z) < stop_tol
        ):
            break
    return LogPlan(z, iterations_done=done)


def _loss_given_log_plan(cost_entries: np.ndarray, z: np.ndarray, beta: float) -> float:
    n = cost_entries.shape[0]
    return float(np.sum((cost_entries + z / beta) * np.exp(z)) / n)


def sinkpit_loss(c: CostMatrix, cfg: SinkhornConfig, stop_tol: float | None = None) -> float:
    """Relaxed assignment loss (1/n) * <C + Z/beta, exp Z> on the balanced plan.

    With exp(Z) exactly balanced this equals entropic_objective(c, exp Z,
    beta)/n, since Z is then the elementwise log of the plan; at finite
    iteration counts the expression is evaluated as written, imbalance
    included.
    """
    lp = sinkhorn_iterate(c, cfg, stop_tol=stop_tol)
    return _loss_given_log_plan(c.entries, lp.entries, cfg.beta)


def batch_sinkpit_loss(
    costs: Sequence[CostMatrix], cfg: SinkhornConfig, stop_tol: float | None = None
) -> float:
    """Arithmetic mean of sinkpit_loss over a batch of equal-size cost matrices."""
    if len(costs) == 0:
        raise ValueError("empty batch")
    n = costs[0].n
    for c in costs:
        if c.n != n:
            raise ValueError(f"batch mixes sizes {n} and {c.n}")
    return float(np.mean([sinkpit_loss(c, cfg, stop_tol=stop_tol) for c in costs]))


def entropic_objective(c: CostMatrix, b: TransportPlan, beta: float) -> float:
    """Entropy-regularized assignment objective <C, B> - H(B)/beta."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if c.entries.shape != b.entries.shape:
        raise ValueError(f"shape mismatch: {c.entries.shape} vs {b.entries.shape}")
    return frobenius_inner(c, b) - entropy(b) / beta


def anneal_beta(epoch: int, sched: AnnealSchedule = AnnealSchedule()) -> float:
    """Inverse temperature for a training epoch: min(base**epoch, cap)."""
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")
    return float(min(sched.base**epoch, sched.cap))
