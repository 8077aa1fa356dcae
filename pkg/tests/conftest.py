import numpy as np
import pytest

from sinkpit import CostMatrix, Permutation, TransportPlan, permutation_to_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def random_cost(rng, n, sigma=10.0) -> CostMatrix:
    return CostMatrix(rng.normal(0.0, sigma, (n, n)))


def random_permutation(rng, n) -> Permutation:
    return Permutation(tuple(int(j) for j in rng.permutation(n)))


def random_birkhoff_point(rng, n, terms=4) -> TransportPlan:
    """Random convex combination of permutation matrices (always doubly stochastic)."""
    weights = rng.dirichlet(np.ones(terms))
    mat = np.zeros((n, n))
    for w in weights:
        mat += w * permutation_to_matrix(random_permutation(rng, n)).entries
    return TransportPlan(mat)
