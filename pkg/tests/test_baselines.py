"""
Unit tests for heuristic baselines, brute force and the polarization oracle.
"""
import math

import numpy as np
import pytest

from app.errors import CapacityError, InputValidationError
from app.modules.baselines.brute_force import exact_polarization, run_brute_force
from app.modules.baselines.heuristics import (
    grounded_resistance,
    rank_ascending,
    resistance_centrality,
    run_random,
    run_top_cent,
    run_top_degree,
)
from app.modules.graph.graph import Graph
from app.modules.graph.grounded import apply_edges, grounded_laplacian
from app.modules.graph.leaders import make_leader_config, sample_leaders
from app.modules.graph.schemas import CandidateEdge
from app.modules.greedy.exact import run_exact
from app.modules.greedy.schemas import ApproxParams
from app.modules.linalg.dense import dense_inverse


def test_random_full_budget_takes_every_candidate(karate):
    """Test k = |E_Q| selects the whole candidate set for any seed."""
    cfg = make_leader_config(karate, [0, 33])

    for seed in (0, 1):
        result = run_random(karate, cfg, cfg.candidate_count, seed)
        assert sorted(result.chosen, key=lambda e: e.sort_key()) == sorted(cfg.candidates, key=lambda e: e.sort_key())


def test_random_is_reproducible(karate):
    cfg = make_leader_config(karate, [0, 33])

    first = run_random(karate, cfg, 5, seed=17)
    second = run_random(karate, cfg, 5, seed=17)

    assert first.chosen == second.chosen
    assert first.params == {"name": "Random", "seed": 17}
    assert first.algorithm == "random"


def test_random_rejects_oversized_budget(p3):
    with pytest.raises(InputValidationError):
        run_random(p3, make_leader_config(p3, [2]), 2, seed=0)


def test_top_degree_on_path(p4):
    """Test path 0-1-2-3 with Q={3}: follower 1 (degree 2, not adjacent to 3) is linked to leader 3."""
    result = run_top_degree(p4, make_leader_config(p4, [3]), 1, seed=0)

    assert result.chosen == [CandidateEdge(leader=3, follower=1)]


def test_top_degree_spills_past_saturated_center(star):
    """Test the center, already adjacent to both leaders, is skipped for the next follower."""
    result = run_top_degree(star, make_leader_config(star, [1, 2]), 1, seed=3)

    (edge,) = result.chosen
    assert edge.follower == 3
    assert edge.leader in (1, 2)


def test_top_degree_links_distinct_leaders(karate):
    """Test the top follower gets min(k, its free pairs) distinct leaders before spilling."""
    leaders = [5, 6, 16]
    cfg = make_leader_config(karate, leaders)

    result = run_top_degree(karate, cfg, 4, seed=1)

    top = result.chosen[0].follower
    first_group = [e for e in result.chosen if e.follower == top]
    assert len({e.leader for e in first_group}) == len(first_group)
    assert karate.degree[top] == max(karate.degree[cfg.followers])


def test_top_degree_zero_budget(p4):
    result = run_top_degree(p4, make_leader_config(p4, [3]), 0, seed=0)

    assert result.chosen == []
    assert len(result.trajectory) == 1


def test_resistance_centrality_of_path(p3):
    """Test R_v sums resistances to all other vertices: 3, 2, 3 on path 0-1-2."""
    assert np.allclose(resistance_centrality(p3), [3.0, 2.0, 3.0])


def test_resistance_centrality_sketched_fallback(karate):
    dense = resistance_centrality(karate)

    sketched = resistance_centrality(karate, dense_cap=0, params=ApproxParams(epsilon=0.2, seed=0))

    assert np.allclose(sketched, dense, rtol=0.2)


def test_top_cent_symmetric_leaves_tie_break_by_id(star):
    """Test equal-score leaves resolve to the smallest id once the center is saturated."""
    result = run_top_cent(star, make_leader_config(star, [1]), 1, seed=0)

    assert result.chosen == [CandidateEdge(leader=1, follower=2)]
    assert result.params == {"name": "TopCent", "seed": 0, "mode": "information"}


def test_rank_ascending_groups_scores_equal_up_to_rounding():
    followers = np.array([7, 3, 5, 9])
    scores = np.array([2.0, 2.0 + 1e-15, 1.0, 2.0 - 1e-15])

    assert rank_ascending(followers, scores).tolist() == [5, 3, 7, 9]


def test_rank_ascending_keeps_distinct_scores_apart():
    followers = np.array([1, 2, 3])

    assert rank_ascending(followers, np.array([3.0, 1.0, 2.0])).tolist() == [2, 3, 1]
    assert rank_ascending(followers[:0], np.array([])).tolist() == []


def test_top_cent_on_cycle_picks_smallest_free_follower():
    """Test every vertex of a 12-cycle is equally central, so the first follower with a free pair wins."""
    cycle = Graph.from_edges(list(range(12)), [(i + 1) % 12 for i in range(12)])

    result = run_top_cent(cycle, make_leader_config(cycle, [0]), 1, seed=0)

    assert result.chosen == [CandidateEdge(leader=0, follower=2)]


def test_top_cent_grounded_mode(p4):
    """Test the grounded reading picks the follower closest to Q that still has a free pair."""
    cfg = make_leader_config(p4, [3])
    scores = grounded_resistance(p4, cfg)

    result = run_top_cent(p4, cfg, 1, seed=0, mode="grounded")

    assert scores.tolist() == pytest.approx([3.0, 2.0, 1.0])
    assert result.chosen == [CandidateEdge(leader=3, follower=1)]


def test_baselines_never_beat_exact_greedy_at_one_step(karate):
    cfg = make_leader_config(karate, sample_leaders(karate, 3, 7))
    greedy = run_exact(karate, cfg, 1).final_value

    for result in (
        run_random(karate, cfg, 1, seed=0),
        run_top_degree(karate, cfg, 1, seed=0),
        run_top_cent(karate, cfg, 1, seed=0),
    ):
        assert result.final_value >= greedy * (1 - 1e-9)


def test_brute_force_on_path(p3):
    """Test the single candidate is optimal with R_Q = 4/3."""
    result = run_brute_force(p3, make_leader_config(p3, [2]), 1)

    assert result.chosen == [CandidateEdge(leader=2, follower=0)]
    assert result.trajectory == pytest.approx([3.0, 4 / 3])


def test_brute_force_full_budget(p4):
    cfg = make_leader_config(p4, [3])

    result = run_brute_force(p4, cfg, cfg.candidate_count)

    assert set(result.chosen) == set(cfg.candidates)


def test_brute_force_values_match_fresh_inverses(karate):
    """Test the Woodbury score of the optimum equals a direct inversion."""
    cfg = make_leader_config(karate, sample_leaders(karate, 3, 11))
    sys = grounded_laplacian(karate, cfg)

    result = run_brute_force(karate, cfg, 2)

    assert result.final_value == pytest.approx(dense_inverse(apply_edges(sys, result.chosen)).trace(), rel=1e-10)
    assert result.trajectory[0] == pytest.approx(dense_inverse(sys).trace(), rel=1e-12)


def test_brute_force_bounds_greedy(karate):
    """Test optimum <= greedy and the greedy reduction is at least (1 - 1/e) of the optimal one."""
    cfg = make_leader_config(karate, sample_leaders(karate, 3, 11))

    optimum = run_brute_force(karate, cfg, 2)
    greedy = run_exact(karate, cfg, 2)

    base = greedy.trajectory[0]
    assert optimum.final_value <= greedy.final_value + 1e-12
    assert base - greedy.final_value >= (1 - 1 / math.e) * (base - optimum.final_value) - 1e-12
    assert optimum.trajectory[1] == pytest.approx(greedy.trajectory[1], rel=1e-10)


def test_brute_force_worker_count_does_not_change_result(karate):
    cfg = make_leader_config(karate, [0, 33])

    serial = run_brute_force(karate, cfg, 2, workers=1)
    parallel = run_brute_force(karate, cfg, 2, workers=3)

    assert serial.chosen == parallel.chosen
    assert serial.trajectory == parallel.trajectory


def test_brute_force_cap(karate):
    cfg = make_leader_config(karate, [0, 33])

    with pytest.raises(CapacityError):
        run_brute_force(karate, cfg, 3, cap=100)


def test_brute_force_prefix_fallback(karate):
    """Test budgets above the cap reuse the prefix of the k-optimum."""
    cfg = make_leader_config(karate, [0, 33])
    n = cfg.candidate_count
    cap = math.comb(n, n - 1)

    result = run_brute_force(karate, cfg, n - 1, cap=cap)

    assert result.params["prefix_budgets"]
    assert len(result.trajectory) == n


def test_exact_polarization_examples(p3, k3):
    """Test P = R_Q / 2 on the path, the triangle and a single weighted follower."""
    pair = Graph.from_edges([0], [1], [2.0])

    assert exact_polarization(p3, make_leader_config(p3, [2])) == pytest.approx(1.5)
    assert exact_polarization(k3, make_leader_config(k3, [0])) == pytest.approx(2 / 3)
    assert exact_polarization(pair, make_leader_config(pair, [0])) == pytest.approx(0.25)


def test_exact_polarization_ignores_vertex_numbering(karate):
    """Test relabeling the vertices of a weighted karate club leaves the leader-group polarization unchanged."""
    rng = np.random.default_rng(8)
    us, vs, _ = (np.array(col) for col in zip(*karate.edges))
    ws = rng.uniform(0.5, 2.0, karate.m)
    perm = rng.permutation(karate.n)
    original = Graph.from_edges(us, vs, ws)
    relabeled = Graph.from_edges(perm[us], perm[vs], ws)

    before = exact_polarization(original, make_leader_config(original, [0, 5, 33]))
    after = exact_polarization(relabeled, make_leader_config(relabeled, perm[[0, 5, 33]].tolist()))

    assert after == pytest.approx(before, rel=1e-10)


def test_random_mean_stays_above_exact_greedy(karate):
    """Test the exact greedy curve is below the 20-draw Random average at every budget."""
    cfg = make_leader_config(karate, sample_leaders(karate, 3, 11))
    k = 5

    greedy = np.asarray(run_exact(karate, cfg, k).trajectory)
    random_mean = np.mean([run_random(karate, cfg, k, seed=seed).trajectory for seed in range(20)], axis=0)

    assert random_mean[0] == pytest.approx(greedy[0])
    assert np.all(random_mean[1:] > greedy[1:])
