"""Dense small-matrix types shared by every solver.

Cost matrices, permutations, transport plans (soft assignments) and the
log-domain iteration state, together with the primitive quantities built
on them: Frobenius inner product, entropy, marginal checks, and a plain
CSV serialization (N lines of N comma-separated floats, no header).

All types are immutable after construction; the wrapped arrays are
float64 copies with the write flag cleared, so values can be shared
freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Soft design limit on matrix size; the intended regime is n <= ~10 and
# nothing here is tuned for large dense problems.
MAX_SIZE = 64


def _as_entries(x) -> np.ndarray:
    """Accept a wrapper type (anything with .entries) or a bare array."""
    return x.entries if hasattr(x, "entries") else np.asarray(x, dtype=float)


def _frozen_square(values, what: str) -> np.ndarray:
    arr = np.array(_as_entries(values), dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    if n == 0:
        raise ValueError(f"{what} must be non-empty")
    if n > MAX_SIZE:
        raise ValueError(f"{what} size {n} exceeds the design limit {MAX_SIZE}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Square matrix of pairwise losses; entry (i, j) scores source i against estimate j."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen_square(self.entries, "cost matrix")
        if not np.isfinite(arr).all():
            raise ValueError("cost matrix entries must be finite")
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..n-1}, stored as mapping[i] = sigma(i). Indices are 0-based."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(j) for j in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise ValueError(f"not a permutation of 0..{len(mapping) - 1}: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @property
    def n(self) -> int:
        return len(self.mapping)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Entrywise non-negative square matrix with row and column sums near one.

    Construction records how far the marginals are from exact double
    stochasticity instead of rejecting imbalance, so that the output of a
    finite-iteration balancing run remains representable as-is.
    """

    entries: np.ndarray
    marginal_deviation: float = field(init=False)

    def __post_init__(self):
        arr = _frozen_square(self.entries, "transport plan")
        if (arr < 0).any():
            raise ValueError("transport plan entries must be non-negative")
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "marginal_deviation", check_doubly_stochastic(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class LogPlan:
    """Log-domain state of the balancing iteration; exp(entries) is the plan."""

    entries: np.ndarray
    iterations_done: int = 0

    def __post_init__(self):
        arr = _frozen_square(self.entries, "log plan")
        if not np.isfinite(arr).all():
            raise ValueError("log plan entries must be finite")
        if self.iterations_done < 0:
            raise ValueError("iterations_done must be non-negative")
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def exp(self) -> TransportPlan:
        return TransportPlan(np.exp(self.entries))


def frobenius_inner(x, y) -> float:
    """Sum of the elementwise product of two same-shape matrices."""
    a = _as_entries(x)
    b = _as_entries(y)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


def entropy(b) -> float:
    """Elementwise entropy -sum(B * log B), with the convention 0 * log 0 = 0."""
    arr = _as_entries(b)
    if (arr < 0).any():
        raise ValueError("entropy requires non-negative entries")
    pos = arr > 0
    return float(-np.sum(arr[pos] * np.log(arr[pos])))


def permutation_to_matrix(p: Permutation) -> TransportPlan:
    """0/1 matrix of a permutation: row i carries a single 1 in column sigma(i)."""
    m = np.zeros((p.n, p.n))
    m[np.arange(p.n), list(p.mapping)] = 1.0
    return TransportPlan(m)


def matrix_to_permutation(m) -> Permutation:
    """Inverse of permutation_to_matrix; rejects anything but an exact 0/1 permutation matrix."""
    arr = _as_entries(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if not np.isin(arr, (0.0, 1.0)).all():
        raise ValueError("matrix entries must be exactly 0 or 1")
    mapping = tuple(int(np.argmax(row)) for row in arr)
    if not (arr.sum(axis=0) == 1.0).all() or not (arr.sum(axis=1) == 1.0).all():
        raise ValueError("matrix is not a permutation matrix")
    return Permutation(mapping)


def check_doubly_stochastic(b, tol: float | None = None) -> float:
    """Largest deviation of any row or column sum from 1.

    Returns the deviation for the caller to compare; when tol is given the
    call additionally raises if the deviation exceeds it.
    """
    arr = _as_entries(b)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    dev = max(
        float(np.abs(arr.sum(axis=0) - 1.0).max()),
        float(np.abs(arr.sum(axis=1) - 1.0).max()),
    )
    if tol is not None and dev > tol:
        raise ValueError(f"matrix marginals deviate by {dev:.3e}, more than tol={tol:.3e}")
    return dev


def save_matrix_csv(path, matrix) -> None:
    """Write a matrix as N lines of N comma-separated floats, no header."""
    arr = _as_entries(matrix)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    with open(path, "w", encoding="ascii") as f:
        for row in arr:
            f.write(",".join(format(v, ".17g") for v in row))
            f.write("\n")


def load_matrix_csv(path) -> np.ndarray:
    """Read a headerless comma-separated matrix; ragged rows are rejected."""
    rows: list[list[float]] = []
    with open(path, "r", encoding="ascii") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                row = [float(v) for v in line.split(",")]
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            if rows and len(row) != len(rows[0]):
                raise ValueError(
                    f"{path}: line {lineno} has {len(row)} values, expected {len(rows[0])}"
                )
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    return np.array(rows)
