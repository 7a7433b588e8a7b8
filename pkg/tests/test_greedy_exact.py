"""
Unit tests for the objective, exact gains and the exact greedy.
"""
import itertools

import networkx as nx
import numpy as np
import pytest

from app.errors import InputValidationError
from app.modules.baselines.brute_force import run_brute_force
from app.modules.experiments.corpus import graph_from_networkx, grid
from app.modules.graph.grounded import add_candidate, apply_edges, grounded_laplacian
from app.modules.graph.leaders import make_leader_config
from app.modules.graph.schemas import CandidateEdge
from app.modules.greedy.exact import GAIN_TIE_TOL, best_available, effective_resistance, exact_gains, run_exact
from app.modules.greedy.trajectory import exact_trajectory, objective_trajectory
from app.modules.linalg.dense import dense_inverse


def _system(g, leaders, **kwargs):
    return grounded_laplacian(g, make_leader_config(g, leaders, **kwargs))


def test_effective_resistance_examples(p3, k3, star):
    """Test R_Q on the path, triangle and star examples."""
    assert effective_resistance(_system(p3, [2])) == pytest.approx(3.0)
    assert effective_resistance(_system(k3, [0])) == pytest.approx(4 / 3)
    assert effective_resistance(_system(star, [0])) == pytest.approx(5.0)


def test_effective_resistance_above_cap_is_sketched(karate):
    """Test a zero dense cap falls back to the sketched trace."""
    sys = _system(karate, [0, 33])
    exact = effective_resistance(sys)

    sketched = effective_resistance(sys, dense_cap=0)

    assert sketched != exact
    assert abs(sketched - exact) <= 0.2 * exact


def test_exact_gain_of_path(p3):
    """Test candidate (2, 0) on path 0-1-2 has t=5, r=2 and gain 5/3."""
    sys = _system(p3, [2])

    (estimate,) = exact_gains(sys, dense_inverse(sys))

    assert estimate.edge == CandidateEdge(leader=2, follower=0)
    assert estimate.t_u == pytest.approx(5.0)
    assert estimate.r_u == pytest.approx(2.0)
    assert estimate.gain == pytest.approx(5 / 3)


def test_gain_equals_trace_drop(karate):
    """Test every candidate's gain equals R_Q(S) - R_Q(S + e)."""
    cfg = make_leader_config(karate, [0, 33], weight=1.5)
    sys = apply_edges(grounded_laplacian(karate, cfg), [cfg.candidate_at(3)])
    before = dense_inverse(sys).trace()

    for estimate in exact_gains(sys, dense_inverse(sys)):
        if estimate.edge in sys.added:
            continue
        after = dense_inverse(add_candidate(sys, estimate.edge)).trace()
        assert estimate.gain == pytest.approx(before - after, rel=1e-9, abs=1e-12)


def test_gain_large_weight_limit(p3):
    """Test gain tends to t/r as the weight grows."""
    sys = _system(p3, [2], weight=1e9)

    (estimate,) = exact_gains(sys, dense_inverse(sys))

    assert abs(estimate.gain - estimate.t_u / estimate.r_u) <= 1e-6


def test_gain_independent_of_leader_endpoint(p4):
    sys = _system(p4, [2, 3])

    gains = {(e.edge.leader, e.edge.follower): e.gain for e in exact_gains(sys, dense_inverse(sys))}

    assert gains[(2, 0)] == gains[(3, 0)]


def test_exact_gains_subset(p4):
    sys = _system(p4, [3])
    subset = [CandidateEdge(leader=3, follower=1)]

    estimates = exact_gains(sys, dense_inverse(sys), subset)

    assert [e.edge for e in estimates] == subset


def test_objective_is_monotone_and_supermodular(karate):
    """Test gains shrink as S grows: gain(S) >= gain(T) for S subset of T."""
    rng = np.random.default_rng(1)
    cfg = make_leader_config(karate, [0, 33])
    sys = grounded_laplacian(karate, cfg)
    for _ in range(20):
        positions = rng.choice(cfg.candidate_count, size=5, replace=False)
        edges = [cfg.candidate_at(int(p)) for p in positions]
        small = apply_edges(sys, edges[:1])
        large = apply_edges(sys, edges[:4])
        extra = edges[4]

        gain_small = dense_inverse(small).trace() - dense_inverse(add_candidate(small, extra)).trace()
        gain_large = dense_inverse(large).trace() - dense_inverse(add_candidate(large, extra)).trace()

        assert gain_small > 0
        assert gain_large > 0
        assert gain_small >= gain_large - 1e-10


def test_run_exact_on_path(p3):
    """Test the single candidate is chosen and R_Q goes 3 -> 4/3."""
    result = run_exact(p3, make_leader_config(p3, [2]), 1)

    assert result.chosen == [CandidateEdge(leader=2, follower=0)]
    assert result.trajectory == pytest.approx([3.0, 4 / 3])
    assert result.algorithm == "exact"
    assert result.trace_method == "exact"


def test_run_exact_zero_budget(k3):
    result = run_exact(k3, make_leader_config(k3, [0]), 0)

    assert result.chosen == []
    assert result.trajectory == pytest.approx([4 / 3])


def test_run_exact_picks_farthest_follower(p4):
    """Test path 0-1-2-3 with Q={3}: greedy bumps follower 0, matching brute force over single additions."""
    cfg = make_leader_config(p4, [3])
    sys = grounded_laplacian(p4, cfg)
    best = min(cfg.candidates, key=lambda e: dense_inverse(add_candidate(sys, e)).trace())

    result = run_exact(p4, cfg, 1)

    assert result.chosen == [best]
    assert best.follower == 0


def test_run_exact_rejects_oversized_budget(p3):
    with pytest.raises(InputValidationError):
        run_exact(p3, make_leader_config(p3, [2]), 2)


def test_run_exact_trajectory_matches_refactorization(karate):
    """Test the maintained inverse agrees with fresh inverses along the way."""
    cfg = make_leader_config(karate, [0, 16, 33])
    result = run_exact(karate, cfg, 6)

    fresh = exact_trajectory(grounded_laplacian(karate, cfg), result.chosen)

    assert result.is_strictly_decreasing()
    assert np.allclose(result.trajectory, fresh, rtol=1e-9)
    assert len(set(result.chosen)) == 6
    assert len(result.round_seconds) == 6


def test_run_exact_first_pick_is_max_gain(karate):
    cfg = make_leader_config(karate, [0, 33])
    sys = grounded_laplacian(karate, cfg)
    estimates = exact_gains(sys, dense_inverse(sys))
    top = max(e.gain for e in estimates)
    first_best = next(e.edge for e in estimates if e.gain >= top * (1 - GAIN_TIE_TOL))

    result = run_exact(karate, cfg, 1)

    assert result.chosen[0] == first_best


def test_best_available_breaks_near_ties_by_position():
    """Test gains equal up to rounding resolve to the first position."""
    gains = np.array([0.5, 2.0, 2.0 + 1e-15, 2.0 - 1e-15, 1.0])

    assert best_available(gains, np.ones(5, dtype=bool)) == 1
    assert best_available(gains, np.array([True, False, True, True, True])) == 2
    assert best_available(np.array([1.0, 1.5]), np.array([True, True])) == 1


def test_run_exact_symmetric_star_picks_smallest_follower(star):
    """Test leaves 2..5 tie behind leader leaf 1, so the pair (1, 2) wins, as brute force agrees."""
    cfg = make_leader_config(star, [1])

    greedy = run_exact(star, cfg, 1)
    optimum = run_brute_force(star, cfg, 1)

    assert greedy.chosen == [CandidateEdge(leader=1, follower=2)]
    assert greedy.chosen == optimum.chosen


@pytest.mark.parametrize(
    "graph, leader, follower",
    [
        (grid(5, 5), 12, 0),  # four equivalent corners around the center leader
        (graph_from_networkx(nx.petersen_graph()), 0, 2),  # six equivalent non-neighbors
    ],
)
def test_run_exact_symmetric_graphs_pick_smallest_follower(graph, leader, follower):
    cfg = make_leader_config(graph, [leader])

    greedy = run_exact(graph, cfg, 1)
    optimum = run_brute_force(graph, cfg, 1)

    assert greedy.chosen == [CandidateEdge(leader=leader, follower=follower)]
    assert greedy.final_value == pytest.approx(optimum.final_value, rel=1e-12)


def test_greedy_within_bound_of_optimum(p4):
    """Test greedy reduction is at least (1 - 1/e) of the best pair's reduction."""
    cfg = make_leader_config(p4, [3])
    sys = grounded_laplacian(p4, cfg)
    base = dense_inverse(sys).trace()
    optimum = min(
        dense_inverse(apply_edges(sys, list(pair))).trace()
        for pair in itertools.combinations(cfg.candidates, 2)
    )

    greedy = run_exact(p4, cfg, 2).final_value

    assert base - greedy >= (1 - 1 / np.e) * (base - optimum) - 1e-12


def test_objective_trajectory_methods(karate):
    cfg = make_leader_config(karate, [0, 33])
    sys = grounded_laplacian(karate, cfg)
    chosen = cfg.candidates[:3]

    exact_values, exact_method = objective_trajectory(sys, chosen)
    sketched_values, sketched_method = objective_trajectory(sys, chosen, dense_cap=0)

    assert exact_method == "exact"
    assert sketched_method == "sketched"
    assert len(exact_values) == len(sketched_values) == 4
    assert np.allclose(sketched_values, exact_values, rtol=0.2)
