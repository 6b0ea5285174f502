import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repeated_irl.gridworld import Maze, compile_maze
from repeated_irl.mdp import (
    Environment,
    InvalidPolicyError,
    PartialPolicy,
    RewardDomainError,
    is_optimal,
    ng_russell_constraints,
    optimal_set,
    policy_matrix,
    policy_values,
    solve_optimal,
    value_iteration,
)

from conftest import brute_force_optimal, brute_force_values, random_env


class TestEnvironment:
    def test_rejects_non_stochastic_rows(self):
        with pytest.raises(ValueError):
            Environment(np.array([[[0.5, 0.4], [0.0, 1.0]]]), 0.5)

    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            Environment(np.array([[[1.5, -0.5], [0.0, 1.0]]]), 0.5)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_discount_outside_unit_interval(self, gamma):
        with pytest.raises(ValueError):
            Environment(np.eye(2)[None], gamma)

    def test_json_round_trip(self, rng):
        env = random_env(rng, 3, 2)
        back = Environment.from_json(env.to_json())
        assert np.array_equal(back.transitions, env.transitions)
        assert back.gamma == env.gamma and back.actions == env.actions
        assert json.loads(env.to_json())["d"] == 3

    def test_successor_table_only_for_deterministic_dynamics(self, rng, two_state):
        assert two_state.successors.tolist() == [[0, 1], [1, 0]]
        assert random_env(rng, 3, 2).successors is None


class TestPolicyMatrix:
    def test_constant_policy_selects_that_action(self, two_state):
        assert np.array_equal(policy_matrix(two_state, [0, 0]), two_state.transitions[0])

    def test_row_substitution(self, two_state):
        assert policy_matrix(two_state, ["a2", "a1"]).tolist() == [[0, 1], [0, 1]]

    def test_rows_sum_to_one(self, rng):
        env = random_env(rng, 4, 3)
        pi = rng.integers(3, size=4)
        assert np.allclose(policy_matrix(env, pi).sum(axis=1), 1.0)

    def test_unknown_action_rejected(self, two_state):
        with pytest.raises(InvalidPolicyError):
            policy_matrix(two_state, [0, 2])
        with pytest.raises(InvalidPolicyError):
            policy_matrix(two_state, [0])


class TestSolveOptimal:
    def test_two_state_example(self, two_state):
        assert solve_optimal(two_state, [0.0, 1.0]).tolist() == [1, 0]

    def test_constant_reward_gives_lowest_action(self, rng):
        env = random_env(rng, 5, 3)
        pi = solve_optimal(env, np.full(5, 2.5))
        assert pi.tolist() == [0] * 5
        for _ in range(10):
            assert is_optimal(env, rng.integers(3, size=5), np.full(5, 2.5))

    def test_bad_reward_shape(self, two_state):
        with pytest.raises(RewardDomainError):
            solve_optimal(two_state, [1.0, 2.0, 3.0])
        with pytest.raises(RewardDomainError):
            solve_optimal(two_state, [1.0, np.nan])

    def test_gridworld_corner_follows_shortest_paths(self):
        env = compile_maze(Maze.open(3, 0.8))
        r = np.zeros(9)
        r[8] = 1.0
        pi = solve_optimal(env, r)
        dist = lambda s: (2 - s // 3) + (2 - s % 3)
        nxt = env.successors
        for s in range(8):
            assert dist(nxt[pi[s], s]) == dist(s) - 1
        assert pi[8] == env.action_index("stay") or nxt[pi[8], 8] == 8

    def test_matches_policy_enumeration(self, rng):
        for _ in range(30):
            env = random_env(rng, 3, 2)
            r = rng.normal(size=3)
            assert tuple(solve_optimal(env, r)) in brute_force_optimal(env, r)

    def test_value_iteration_batch_matches_single(self, rng):
        env = random_env(rng, 4, 3)
        R = rng.normal(size=(4, 5))
        batch = value_iteration(env, R, tol=1e-12)
        for k in range(5):
            assert np.allclose(batch[:, k], value_iteration(env, R[:, k], tol=1e-12), atol=1e-9)


class TestOptimalSet:
    def test_constant_reward_includes_everything(self, rng):
        env = random_env(rng, 3, 2)
        assert optimal_set(env, np.ones(3)) == {(s, a) for s in range(3) for a in range(2)}

    def test_two_state_example(self, two_state):
        assert optimal_set(two_state, [0.0, 1.0]) == {(0, 1), (1, 0)}

    def test_identical_actions_both_optimal(self, rng):
        env = random_env(rng, 4, 2)
        twin = Environment(np.concatenate([env.transitions, env.transitions[:1]]), env.gamma)
        pairs = optimal_set(twin, rng.normal(size=4))
        for s in range(4):
            assert ((s, 0) in pairs) == ((s, 2) in pairs)


class TestNgRussell:
    def test_optimal_policy_satisfies_constraints(self, rng):
        for _ in range(20):
            env = random_env(rng, 4, 3)
            r = rng.uniform(-10, 10, 4)
            rows = ng_russell_constraints(env, solve_optimal(env, r))
            assert np.all(rows @ r >= -1e-8)

    def test_zero_reward_always_feasible(self, rng):
        env = random_env(rng, 4, 3)
        rows = ng_russell_constraints(env, rng.integers(3, size=4))
        assert np.all(rows @ np.zeros(4) == 0.0)

    def test_two_state_rows_separate_the_rewards(self, two_state):
        rows = ng_russell_constraints(two_state, [1, 0])
        assert np.all(rows @ [0.0, 1.0] >= 0)
        assert np.any(rows @ [1.0, 0.0] < 0)

    def test_row_count_and_index(self, rng):
        env = random_env(rng, 3, 3)
        pi = [2, 0, 1]
        rows, idx = ng_russell_constraints(env, pi, return_index=True)
        assert rows.shape == (6, 3)
        assert all(a != pi[s] for s, a in idx)

    def test_rows_measure_q_gaps(self, rng):
        env = random_env(rng, 4, 3)
        r = rng.normal(size=4)
        pi = rng.integers(3, size=4)
        V = policy_values(env, pi, r)
        rows, idx = ng_russell_constraints(env, pi, return_index=True)
        for row, (s, a) in zip(rows, idx):
            gap = env.transitions[pi[s], s] @ V - env.transitions[a, s] @ V
            assert row @ r == pytest.approx(gap, abs=1e-9)


class TestIsOptimal:
    def test_zero_reward(self, rng):
        env = random_env(rng, 3, 2)
        assert is_optimal(env, [1, 0, 1], np.zeros(3))

    def test_two_state_stay_is_suboptimal(self, two_state):
        assert not is_optimal(two_state, [0, 0], [0.0, 1.0])

    def test_self_consistency(self, rng):
        for _ in range(100):
            d, A = rng.integers(2, 6), rng.integers(2, 4)
            env = random_env(rng, d, A)
            r = rng.uniform(-10, 10, d)
            assert is_optimal(env, solve_optimal(env, r), r)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_agrees_with_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        env = random_env(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), sparse=bool(rng.integers(2)))
        r = rng.uniform(-1, 1, env.num_states)
        best = brute_force_optimal(env, r)
        for pi in brute_force_values(env, r):
            assert is_optimal(env, pi, r) == (pi in best)


def test_partial_policy_completion():
    obs = PartialPolicy({1: 2, 3: 1})
    assert obs.domain == {1, 3}
    pi = obs.complete(4)
    assert pi.tolist() == [0, 2, 0, 1]
    assert obs.agrees_with(pi) and not obs.agrees_with([0, 1, 0, 1])
