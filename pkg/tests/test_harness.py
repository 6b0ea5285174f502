import csv
import json

import numpy as np
import pytest

from repeated_irl.cli import main
from repeated_irl.harness import (
    FULL_LAMBDAS,
    PlacementError,
    RunConfig,
    final_errors,
    generate_scenario,
    profile_config,
    run_benchmark,
    run_omnipotent,
    run_simulation,
    run_single_env_sweep,
)

TINY = dict(grid_n=3, sims=2, budget=3, num_candidates=2, num_samples=60, burn_in=100, sweep_envs=3, sweep_lambdas=(0.05, 10.0))


class TestScenario:
    def test_reward_counts(self):
        r, agent = generate_scenario(RunConfig(), 0)
        assert r.size == 100
        assert np.sum(r == 10) == 1 and np.sum(r == 1) == 5 and np.sum(r == 0) == 94
        assert np.array_equal(agent.hidden_reward, r)

    def test_seeds_change_placements(self):
        a, _ = generate_scenario(RunConfig(), 1)
        b, _ = generate_scenario(RunConfig(), 2)
        assert not np.array_equal(a, b)

    def test_too_small_grid(self):
        with pytest.raises(PlacementError):
            generate_scenario(RunConfig(grid_n=2), 0)

    def test_values_must_fit_the_box(self):
        with pytest.raises(ValueError):
            RunConfig(r_max=5.0)

    def test_profiles(self):
        desk = profile_config("desk")
        assert (desk.grid_n, desk.sims, desk.budget, desk.num_candidates, desk.num_samples) == (6, 10, 15, 5, 500)
        assert profile_config("paper").sweep_lambdas == FULL_LAMBDAS
        assert profile_config("paper", sims=3).sims == 3


class TestBenchmark:
    def test_rows_are_reproducible(self, tmp_path):
        config = RunConfig(**TINY)
        run_benchmark(config, out_dir=tmp_path / "a", lambdas=[0.5, 10.0])
        run_benchmark(config, out_dir=tmp_path / "b", lambdas=[0.5, 10.0])

        def rows(path):
            with open(path) as fh:
                return [{k: v for k, v in row.items() if k != "wall_clock_ms"} for row in csv.DictReader(fh)]

        a, b = rows(tmp_path / "a" / "rounds.csv"), rows(tmp_path / "b" / "rounds.csv")
        assert a == b and len(a) == 3 * 2 * 3 * 2
        assert (tmp_path / "a" / "summary.csv").read_text() == (tmp_path / "b" / "summary.csv").read_text()
        header = (tmp_path / "a" / "rounds.csv").read_text().splitlines()[0]
        assert header.startswith("algorithm,sim,lambda,round,chosen_env_id,est_gain,f_estimate,lp_error_linf")

    def test_large_lambda_selects_zero(self):
        records, _ = run_benchmark(RunConfig(**TINY), ["uniform"], lambdas=[1e4])
        assert np.allclose(final_errors(records, "uniform"), 10.0)

    def test_transcript(self, tmp_path):
        run_benchmark(RunConfig(**TINY), ["greedy"], out_dir=tmp_path)
        data = json.loads((tmp_path / "transcript.json").read_text())
        assert len(data) == 2 and len(data[0]["experiments"]) == 3
        assert set(data[0]["experiments"][0]) == {"round", "env_id", "maze", "observed_policy"}
        assert data[0]["eliminated_round"] is None

    def test_policy_mode_keeps_hidden_reward(self):
        res = run_simulation("varied", RunConfig(**TINY), 0)
        assert res.eliminated_round is None

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            run_simulation("oracle", RunConfig(**TINY), 0)

    def test_trajectory_mode_runs(self):
        res = run_simulation("greedy", RunConfig(**TINY, mode="trajectory", num_traj=2, horizon=4), 0)
        assert len(res.records) == 3


def test_single_env_sweep_is_deterministic():
    a = run_single_env_sweep(RunConfig(**TINY))
    b = run_single_env_sweep(RunConfig(**TINY))
    assert np.array_equal(a["table"], b["table"])
    assert a["table"].shape == (3, 2) and a["lambdas"] == (0.05, 10.0)


def test_omnipotent_rows():
    rows = run_omnipotent(20, 0.05, 2)
    assert all(r["canonical_error"] <= 0.05 and r["experiments_used"] <= r["experiment_bound"] for r in rows)


class TestCli:
    def test_omnipotent(self, tmp_path, capsys):
        assert main(["omnipotent", "--d", "10", "--epsilon", "0.1", "--sims", "2", "--out", str(tmp_path)]) == 0
        assert "max experiments" in capsys.readouterr().out
        for name in ("rounds.csv", "summary.csv", "transcript.json"):
            assert (tmp_path / name).exists()

    @pytest.mark.parametrize(
        "argv",
        [
            ["greedy", "--budget", "2"],
            ["baseline", "--kind", "varied", "--budget", "2", "--mode", "trajectory"],
            ["bench", "--budget", "1", "--lambda", "0.5", "10"],
            ["sweep", "--envs", "2"],
        ],
    )
    def test_run_commands(self, tmp_path, argv):
        assert main(argv + ["--grid-n", "3", "--sims", "2", "--seed", "4", "--out", str(tmp_path)]) == 0
        for name in ("rounds.csv", "summary.csv", "transcript.json"):
            assert (tmp_path / name).exists()

    def test_rejects_unknown_profile(self):
        with pytest.raises(SystemExit):
            main(["greedy", "--profile", "huge"])
