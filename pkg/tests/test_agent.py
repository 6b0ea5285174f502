import numpy as np
import pytest

from repeated_irl.agent import Agent, Trajectory
from repeated_irl.gridworld import Maze, compile_maze
from repeated_irl.mdp import solve_optimal
from repeated_irl.omnipotent import STAY, comparison_environment

from conftest import random_env


def test_constant_reward_lowest_action(rng):
    env = random_env(rng, 4, 3)
    assert Agent(np.full(4, -2.0)).respond_policy(env).tolist() == [0, 0, 0, 0]


def test_two_state_example(two_state):
    assert Agent([0.0, 1.0])(two_state).tolist() == [1, 0]


def test_stays_at_the_better_state():
    agent = Agent([1.0, 5.0, 2.0, 0.0])
    pi = agent.respond_policy(comparison_environment(4, [(1, 2), (0, 3)]))
    assert pi[1] == STAY and pi[0] == STAY and pi[2] != STAY and pi[3] != STAY


def test_rejects_reward_outside_box():
    with pytest.raises(ValueError):
        Agent([0.0, 11.0], bounds=(-10, 10))


def test_rejects_mismatched_environment(two_state):
    with pytest.raises(ValueError):
        Agent(np.zeros(3)).respond_policy(two_state)


class TestTrajectories:
    def setup_method(self):
        self.env = compile_maze(Maze.open(4))
        r = np.zeros(16)
        r[15] = 10.0
        self.agent = Agent(r)
        self.pi = solve_optimal(self.env, r)

    def test_same_start_same_path(self):
        start = np.zeros(16)
        start[5] = 1.0
        trajs = self.agent.respond_trajectories(self.env, 5, 8, start, seed=0)
        assert len({t.steps for t in trajs}) == 1

    def test_horizon_one(self):
        trajs = self.agent.respond_trajectories(self.env, 10, 1, seed=1)
        for t in trajs:
            (s, a), = t.steps
            assert a == self.pi[s]

    def test_domain_is_the_visited_states(self):
        trajs = self.agent.respond_trajectories(self.env, 20, 30, seed=2)
        for t in trajs:
            s = t.steps[0][0]
            path = {s}
            for _ in range(29):
                s = int(self.env.successors[self.pi[s], s])
                path.add(s)
            assert t.domain == path
            assert t.horizon == 30

    def test_default_horizon(self):
        (t,) = self.agent.respond_trajectories(self.env, 1, seed=3)
        assert t.horizon == 48

    def test_seeded(self):
        a = self.agent.respond_trajectories(self.env, 4, 5, seed=9)
        b = self.agent.respond_trajectories(self.env, 4, 5, seed=9)
        assert a == b

    def test_json_round_trip(self):
        (t,) = self.agent.respond_trajectories(self.env, 1, 6, seed=4)
        assert Trajectory.from_json(t.to_json()).steps == t.steps

    def test_bad_start_distribution(self):
        with pytest.raises(ValueError):
            self.agent.respond_trajectories(self.env, 1, 3, np.ones(16))

    def test_stochastic_dynamics(self, rng):
        env = random_env(rng, 5, 2)
        r = rng.normal(size=5)
        trajs = Agent(r).respond_trajectories(env, 3, 10, seed=0)
        pi = solve_optimal(env, r)
        assert all(t.horizon == 10 and all(a == pi[s] for s, a in t.steps) for t in trajs)
