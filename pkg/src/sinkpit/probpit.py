"""Probabilistic relaxation of the exact permutation-invariant loss.

The loss folds lambda_P + <C, P> over every permutation with the
log-semiring addition

    x (+)_gamma y = -gamma * log(exp(-x/gamma) + exp(-y/gamma)),

which interpolates between a soft aggregate (large gamma) and the hard
minimum (tropical limit gamma -> 0). With a flat prior, lambda_P = log n!
for every P and the tropical limit recovers the exact assignment optimum
shifted by log n!.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .assignment import MAX_ENUMERATION_N
from .matrices import CostMatrix


@dataclass(frozen=True)
class PermutationPrior:
    """Prior over permutations: flat, or an explicit table of -log probabilities.

    Explicit tables are keyed by the permutation mapping tuple; permutations
    absent from the table carry probability zero (infinite weight) and drop
    out of the semiring sum.
    """

    kind: str = "flat"
    log_weights: Mapping[tuple[int, ...], float] | None = None

    def __post_init__(self):
        if self.kind not in ("flat", "explicit"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == "flat":
            if self.log_weights is not None:
                raise ValueError("flat prior takes no weight table")
            return
        if not self.log_weights:
            raise ValueError("explicit prior requires a weight table")
        total = sum(math.exp(-lam) for lam in self.log_weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"prior probabilities sum to {total}, expected 1")

    @classmethod
    def flat(cls) -> "PermutationPrior":
        return cls("flat")

    @classmethod
    def from_probabilities(
        cls, probs: Mapping[tuple[int, ...], float]
    ) -> "PermutationPrior":
        for mapping, p in probs.items():
            if not p > 0:
                raise ValueError(f"probability for {mapping} must be positive, got {p}")
        table = {tuple(m): -math.log(p) for m, p in probs.items()}
        return cls("explicit", table)

    def neg_log_prob(self, mapping: tuple[int, ...], n: int) -> float:
        if self.kind == "flat":
            return math.log(math.factorial(n))
        assert self.log_weights is not None
        return self.log_weights.get(tuple(mapping), math.inf)


def log_semiring_add(x: float, y: float, gamma: float) -> float:
    """Stable log-semiring sum min(x, y) - gamma * log(1 + exp(-|x - y|/gamma))."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    lo, hi = (x, y) if x <= y else (y, x)
    if not math.isfinite(hi):
        return lo  # an infinitely heavy term contributes nothing
    return lo - gamma * math.log1p(math.exp(-(hi - lo) / gamma))


def probpit_loss(
    c: CostMatrix, gamma: float, prior: PermutationPrior | None = None
) -> float:
    """Semiring sum of lambda_P + <C, P> over all n! permutations.

    Accumulation is a sequential fold in lexicographic permutation order;
    floating-point semiring addition is only approximately associative, so
    the order is fixed for reproducibility.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if c.n > MAX_ENUMERATION_N:
        raise ValueError(
            f"n={c.n} exceeds the enumeration cap {MAX_ENUMERATION_N}; "
            "the sum runs over n! terms"
        )
    prior = prior if prior is not None else PermutationPrior.flat()
    n = c.n
    rows = np.arange(n)
    acc = math.inf  # additive identity of the semiring
    for mapping in itertools.permutations(range(n)):
        term = prior.neg_log_prob(mapping, n) + float(c.entries[rows, mapping].sum())
        acc = log_semiring_add(acc, term, gamma)
    return acc
