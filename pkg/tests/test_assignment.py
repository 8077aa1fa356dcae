import itertools

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from sinkpit import (
    CostMatrix,
    Permutation,
    SinkhornConfig,
    TransportPlan,
    birkhoff_decompose,
    brute_force_pit,
    check_doubly_stochastic,
    frobenius_inner,
    hungarian,
    permutation_to_matrix,
    round_plan,
    sinkhorn_iterate,
)
from conftest import random_birkhoff_point, random_cost


def scipy_total(c: CostMatrix) -> float:
    rows, cols = linear_sum_assignment(c.entries)
    return float(c.entries[rows, cols].sum())


class TestBruteForce:
    def test_cheap_diagonal(self):
        c = CostMatrix(np.ones((4, 4)) - np.eye(4))
        r = brute_force_pit(c)
        assert r.permutation == Permutation((0, 1, 2, 3))
        assert r.total_cost == 0.0
        assert r.mean_cost == 0.0

    def test_two_by_two_by_hand(self):
        r = brute_force_pit(CostMatrix(np.array([[1.0, 2.0], [3.0, 1.0]])))
        assert r.permutation == Permutation((0, 1))
        assert r.total_cost == 2.0

    def test_agrees_with_hungarian_on_7x7(self, rng):
        c = random_cost(rng, 7)
        assert brute_force_pit(c).total_cost == pytest.approx(hungarian(c).total_cost, abs=1e-12)

    def test_cap_enforced(self):
        with pytest.raises(ValueError):
            brute_force_pit(CostMatrix(np.zeros((13, 13))))

    def test_lexicographic_tie_break(self):
        # constant matrix: every permutation ties; identity enumerates first
        r = brute_force_pit(CostMatrix(np.full((4, 4), 2.5)))
        assert r.permutation == Permutation((0, 1, 2, 3))

    def test_total_equals_recomputation(self, rng):
        c = random_cost(rng, 6)
        r = brute_force_pit(c)
        recomputed = float(c.entries[np.arange(6), list(r.permutation.mapping)].sum())
        assert r.total_cost == recomputed
        assert r.mean_cost == recomputed / 6


class TestHungarian:
    def test_cheap_diagonal_n10(self):
        c = CostMatrix(np.ones((10, 10)) - np.eye(10))
        r = hungarian(c)
        assert r.permutation == Permutation(tuple(range(10)))
        assert r.total_cost == 0.0

    def test_constant_matrix_any_permutation(self):
        c0 = -3.25
        r = hungarian(CostMatrix(np.full((5, 5), c0)))
        assert r.total_cost == pytest.approx(5 * c0, abs=1e-12)

    def test_matches_brute_force_on_1000_random_6x6(self, rng):
        for _ in range(1000):
            c = random_cost(rng, 6)
            assert hungarian(c).total_cost == pytest.approx(
                brute_force_pit(c).total_cost, abs=1e-12
            )

    def test_matches_scipy_on_larger_signed_costs(self, rng):
        for n in (10, 17, 30):
            for _ in range(20):
                c = random_cost(rng, n)
                assert hungarian(c).total_cost == pytest.approx(scipy_total(c), abs=1e-9)

    def test_handles_negative_costs_without_shifting(self):
        c = CostMatrix(np.array([[-5.0, -1.0], [-1.0, -5.0]]))
        assert hungarian(c).total_cost == -10.0

    def test_shift_property_of_argmin(self, rng):
        # row/column shifts move every assignment total by the same amount
        c = random_cost(rng, 6)
        xi = rng.normal(0.0, 5.0, 6)
        eta = rng.normal(0.0, 5.0, 6)
        shifted = CostMatrix(c.entries + xi[:, None] + eta[None, :])
        base = hungarian(c)
        moved = hungarian(shifted)
        assert moved.total_cost == pytest.approx(
            base.total_cost + xi.sum() + eta.sum(), rel=1e-12
        )


class TestRelaxationBound:
    def test_vertex_optimum_beats_every_birkhoff_point(self, rng):
        for _ in range(5):
            n = int(rng.integers(2, 7))
            c = random_cost(rng, n)
            best = brute_force_pit(c).mean_cost
            for _ in range(100):
                b = random_birkhoff_point(rng, n, terms=5)
                assert best <= frobenius_inner(c, b) / n + 1e-9


class TestRoundPlan:
    def test_rounding_a_permutation_matrix_is_identity_operation(self, rng):
        p = Permutation((2, 0, 1, 3))
        assert round_plan(permutation_to_matrix(p)) == p

    def test_rounding_recovers_cold_optimum(self, rng):
        c = random_cost(rng, 5)
        lp = sinkhorn_iterate(c, SinkhornConfig(beta=200.0, iterations=8000), stop_tol=1e-9)
        assert round_plan(lp.exp()) == brute_force_pit(c).permutation


class TestBirkhoffDecompose:
    def test_permutation_matrix_single_term(self):
        p = permutation_to_matrix(Permutation((1, 2, 0)))
        terms = birkhoff_decompose(p, tol=1e-9)
        assert len(terms) == 1
        weight, perm = terms[0]
        assert weight == pytest.approx(1.0, abs=1e-12)
        assert perm == Permutation((1, 2, 0))

    def test_uniform_plan_reconstructs(self):
        b = TransportPlan(np.full((3, 3), 1.0 / 3.0))
        terms = birkhoff_decompose(b, tol=1e-9)
        total = sum(w for w, _ in terms)
        assert total == pytest.approx(1.0, abs=1e-9)
        recon = sum(w * permutation_to_matrix(p).entries for w, p in terms)
        assert np.abs(recon - b.entries).max() < 1e-9

    def test_sinkhorn_plan_expansion(self, rng):
        # reconstruction and cost expansion <C,B> = sum mu_P <C,P>;
        # unit-scale costs so the plan balances to machine precision
        c = random_cost(rng, 5, sigma=1.0)
        b = sinkhorn_iterate(c, SinkhornConfig(beta=1.0, iterations=5000), stop_tol=1e-14).exp()
        terms = birkhoff_decompose(b, tol=1e-12)
        recon = sum(w * permutation_to_matrix(p).entries for w, p in terms)
        assert np.abs(recon - b.entries).max() < 1e-6
        expanded = sum(w * frobenius_inner(c, permutation_to_matrix(p)) for w, p in terms)
        assert expanded == pytest.approx(frobenius_inner(c, b), abs=1e-9)

    def test_term_count_within_birkhoff_bound(self, rng):
        for _ in range(10):
            n = int(rng.integers(3, 7))
            c = random_cost(rng, n, sigma=1.0)
            b = sinkhorn_iterate(c, SinkhornConfig(beta=1.0, iterations=5000), stop_tol=1e-14).exp()
            terms = birkhoff_decompose(b, tol=1e-9)
            assert len(terms) <= (n - 1) ** 2 + 1

    def test_rejects_unbalanced_input(self):
        skewed = TransportPlan(np.array([[0.9, 0.0], [0.0, 0.9]]))
        with pytest.raises(ValueError):
            birkhoff_decompose(skewed, tol=1e-6)

    def test_weights_are_positive(self, rng):
        b = random_birkhoff_point(rng, 4, terms=6)
        for w, _ in birkhoff_decompose(b, tol=1e-9):
            assert w > 0


class TestCheckAgainstDecomposition:
    def test_decomposition_output_is_valid_input(self, rng):
        b = random_birkhoff_point(rng, 5, terms=8)
        assert check_doubly_stochastic(b) < 1e-12
        terms = birkhoff_decompose(b, tol=1e-10)
        assert sum(w for w, _ in terms) == pytest.approx(1.0, abs=1e-10)


def test_brute_force_enumeration_order_is_lexicographic():
    # the chunked scan must preserve itertools' ordering guarantees
    seen = list(itertools.islice(itertools.permutations(range(3)), 6))
    assert seen == sorted(seen)
