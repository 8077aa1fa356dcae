"""Exact minimum-cost assignment solvers and Birkhoff decomposition.

brute_force_pit scans every permutation and is the ground-truth oracle
for the relaxations; hungarian solves the same problem in O(n^3) with
row/column dual potentials and accepts signed costs (SI-SDR costs are
negative on good matches); birkhoff_decompose writes a (near-)doubly
stochastic plan as a convex combination of permutation matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .matrices import (
    CostMatrix,
    Permutation,
    TransportPlan,
    _as_entries,
    check_doubly_stochastic,
)

# 12! ~ 4.8e8 permutation scans: minutes, not hours. Anything larger is
# a job for hungarian.
MAX_ENUMERATION_N = 12

_CHUNK = 40320  # permutations per vectorized brute-force block


@dataclass(frozen=True)
class AssignmentResult:
    """Minimizing permutation with its summed and per-row cost."""

    permutation: Permutation
    total_cost: float
    mean_cost: float


def _result(cost_entries: np.ndarray, mapping) -> AssignmentResult:
    mapping = tuple(int(j) for j in mapping)
    n = len(mapping)
    total = float(cost_entries[np.arange(n), list(mapping)].sum())
    return AssignmentResult(Permutation(mapping), total, total / n)


def brute_force_pit(c: CostMatrix) -> AssignmentResult:
    """Exact minimizer by scanning all n! permutations in lexicographic order.

    Ties go to the first permutation encountered. Enumeration streams
    through fixed-size blocks so n = 10..12 stays within a few hundred MB
    of index data per block rather than materializing the whole set.
    """
    n = c.n
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"n={n} exceeds the brute-force cap {MAX_ENUMERATION_N}")
    rows = np.arange(n)
    best_cost = np.inf
    best = None
    stream = itertools.permutations(range(n))
    while chunk := list(itertools.islice(stream, _CHUNK)):
        perms = np.array(chunk, dtype=np.intp)
        totals = c.entries[rows, perms].sum(axis=1)
        i = int(np.argmin(totals))
        if totals[i] < best_cost:
            best_cost = float(totals[i])
            best = chunk[i]
    return _result(c.entries, best)


def _solve_lap(cost: np.ndarray) -> np.ndarray:
    """Square min-cost assignment via shortest augmenting paths with potentials.

    Kuhn-Munkres style: maintains row duals u and column duals v, grows one
    augmenting path per row through a virtual root column n. Handles
    negative costs; returns mapping[i] = assigned column of row i.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.full(n + 1, -1, dtype=np.intp)  # match[j] = row held by column j
    way = np.zeros(n, dtype=np.intp)
    for i in range(n):
        match[n] = i
        j0 = n
        minv = np.full(n, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            free = np.flatnonzero(~used[:n])
            cur = cost[i0, free] - u[i0] - v[free]
            upd = cur < minv[free]
            sel = free[upd]
            minv[sel] = cur[upd]
            way[sel] = j0
            t = int(np.argmin(minv[free]))
            j1 = int(free[t])
            delta = minv[j1]
            touched = np.flatnonzero(used)
            u[match[touched]] += delta
            v[touched] -= delta
            minv[free] -= delta
            j0 = j1
            if match[j0] == -1:
                break
        while j0 != n:
            j1 = int(way[j0])
            match[j0] = match[j1]
            j0 = j1
    mapping = np.empty(n, dtype=np.intp)
    mapping[match[:n]] = np.arange(n)
    return mapping


def hungarian(c: CostMatrix) -> AssignmentResult:
    """Exact minimizer in O(n^3); agrees with brute_force_pit in optimal value."""
    return _result(c.entries, _solve_lap(c.entries))


def round_plan(b) -> Permutation:
    """Nearest-permutation rounding: the assignment carrying the most plan mass."""
    return Permutation(tuple(int(j) for j in _solve_lap(-_as_entries(b))))


def birkhoff_decompose(
    b: TransportPlan, tol: float = 1e-9
) -> list[tuple[float, Permutation]]:
    """Greedy convex decomposition of a plan into weighted permutations.

    Repeatedly picks a permutation supported on strictly positive residual
    entries (assignment on -log entries, so large entries are favored),
    subtracts the minimal entry along it, and stops once the unextracted
    mass per row drops below tol. Decompositions are not unique; only the
    reconstruction sum(mu_P * P) is contractual.

    Raises if the input is further than tol from doubly stochastic, if no
    positive-support permutation exists before the mass target is met, or
    if the term count would exceed the Birkhoff bound (n-1)^2 + 1.
    """
    check_doubly_stochastic(b.entries, tol)
    n = b.n
    residual = b.entries.copy()
    rows = np.arange(n)
    big = 1e6  # dominates any -log(entry) at this scale, so zeros are never picked
    terms: list[tuple[float, Permutation]] = []
    extracted = 0.0
    max_terms = (n - 1) * (n - 1) + 1
    while 1.0 - extracted > tol:
        if len(terms) >= max_terms:
            raise ValueError(
                f"decomposition exceeded {max_terms} terms; "
                "input is too far from doubly stochastic for tol"
            )
        positive = residual > 0.0
        with np.errstate(divide="ignore"):
            cost = np.where(positive, -np.log(np.where(positive, residual, 1.0)), big)
        mapping = _solve_lap(cost)
        selected = residual[rows, mapping]
        mu = float(selected.min())
        if mu <= 0.0:
            raise ValueError(
                "no permutation with strictly positive support; "
                "tol is too small for this plan's imbalance"
            )
        terms.append((mu, Permutation(tuple(int(j) for j in mapping))))
        residual[rows, mapping] -= mu
        extracted += mu
    return terms
