"""Benchmark scenarios, simulation runs and their CSV/JSON output.

A scenario hides a reward on an ``n x n`` grid: one cell worth ``high_value``,
``num_low`` cells worth ``low_value``, zero elsewhere. Each algorithm shows the
agent a sequence of mazes; after every round the multi-experiment selection
program picks an estimate and its sup-norm error against the hidden reward
is recorded.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .agent import Agent
from .design import GreedyConfig, ExperimentLog, policy_observer, run_greedy, run_nonadaptive, trajectory_observer
from .gridworld import MazeDistribution, compile_maze
from .lp import DEFAULT_LAMBDA, FULL_LAMBDAS, select_classic, select_generalized
from .omnipotent import experiment_bound, identify
from .mdp import ng_russell_constraints
from .polytope import MEMBERSHIP_TOL, Box
from .rewards import identification_error

log = logging.getLogger(__name__)

ALGORITHMS = ("greedy", "uniform", "varied")
ROUND_FIELDS = (
    "algorithm",
    "sim",
    "lambda",
    "round",
    "chosen_env_id",
    "est_gain",
    "f_estimate",
    "lp_error_linf",
    "canonical_error",
    "wall_clock_ms",
)


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    grid_n: int = 10
    r_max: float = 10.0
    num_high: int = 1
    high_value: float = 10.0
    num_low: int = 5
    low_value: float = 1.0
    gamma: float = 0.8
    lam: float = DEFAULT_LAMBDA
    budget: int = 25
    sims: int = 20
    mode: str = "policy"
    seed: int = 0
    num_candidates: int = 10
    num_samples: int = 1000
    burn_in: int = 1000
    thinning: int = 10
    num_traj: int = 10
    horizon: int | None = None
    sweep_envs: int = 100
    sweep_lambdas: tuple = FULL_LAMBDAS
    sweep_kind: str = "uniform"

    def __post_init__(self):
        if self.mode not in ("policy", "trajectory"):
            raise ValueError(f"unknown observation mode {self.mode!r}")
        if max(abs(self.high_value), abs(self.low_value)) > self.r_max:
            raise ValueError("reward values must lie inside the box")

    @property
    def box(self) -> Box:
        return Box(-self.r_max, self.r_max)

    @property
    def num_states(self) -> int:
        return self.grid_n**2


PROFILES = {
    "desk": dict(grid_n=6, sims=10, budget=15, num_candidates=5, num_samples=500, sweep_envs=10, sweep_lambdas=(0.05, 0.5, 10.0)),
    "paper": dict(grid_n=10, sims=20, budget=25, num_candidates=10, num_samples=1000, sweep_envs=100, sweep_lambdas=FULL_LAMBDAS),
}


def profile_config(name: str, **overrides) -> RunConfig:
    return RunConfig(**{**PROFILES[name], **overrides})


def _seeds(config: RunConfig, sim: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.seed, sim])


def _int_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(2))


def generate_scenario(config: RunConfig, seed) -> tuple[np.ndarray, Agent]:
    """Hidden reward with distinct random placements, and an agent holding it."""
    d = config.num_states
    k = config.num_high + config.num_low
    if d < k:
        raise PlacementError(f"{d} cells cannot hold {k} distinct rewarding states")
    rng = np.random.default_rng(seed)
    cells = rng.choice(d, size=k, replace=False)
    r = np.zeros(d)
    r[cells[: config.num_high]] = config.high_value
    r[cells[config.num_high :]] = config.low_value
    return r, Agent(r, bounds=(config.box.low, config.box.high))


@dataclass
class RoundRecord:
    algorithm: str
    sim: int
    lam: float
    round: int
    chosen_env_id: str
    est_gain: float
    f_estimate: float
    lp_error_linf: float
    canonical_error: float
    wall_clock_ms: float

    def row(self) -> list:
        return [getattr(self, f) for f in ("algorithm", "sim", "lam", "round", "chosen_env_id", "est_gain", "f_estimate", "lp_error_linf", "canonical_error", "wall_clock_ms")]


@dataclass
class SimulationResult:
    algorithm: str
    sim: int
    hidden_reward: np.ndarray
    records: list = field(default_factory=list)
    transcript: list = field(default_factory=list)
    eliminated_round: int | None = None


def first_elimination(exp_log: ExperimentLog, hidden: np.ndarray, tol: float = MEMBERSHIP_TOL) -> int | None:
    """First round whose constraints exclude ``hidden``, or None if it survives them all."""
    for rnd, (env, pi) in enumerate(exp_log.experiments, start=1):
        if np.any(ng_russell_constraints(env, pi) @ hidden < -tol):
            return rnd
    return None


def evaluate_log(
    exp_log: ExperimentLog, hidden: np.ndarray, lambdas: Iterable[float], box: Box, algorithm: str, sim: int
) -> list[RoundRecord]:
    """Solve the selection program after every round, for every lambda."""
    out = []
    for rnd in range(1, len(exp_log) + 1):
        prefix = exp_log.experiments[:rnd]
        for lam in lambdas:
            r_hat = select_generalized(prefix, lam, box).reward
            out.append(
                RoundRecord(
                    algorithm,
                    sim,
                    float(lam),
                    rnd,
                    str(exp_log.env_ids[rnd - 1]),
                    float(exp_log.gains[rnd - 1]),
                    float(exp_log.f_estimates[rnd - 1]),
                    float(np.max(np.abs(hidden - r_hat))),
                    identification_error(hidden, r_hat),
                    float(exp_log.wall_ms[rnd - 1]),
                )
            )
    return out


def run_simulation(algorithm: str, config: RunConfig, sim: int, lambdas: Sequence[float] | None = None) -> SimulationResult:
    """One simulated agent, one algorithm. The hidden reward depends only on ``(seed, sim)``."""
    scenario_ss, algo_ss, observe_ss = _seeds(config, sim).spawn(3)
    hidden, agent = generate_scenario(config, scenario_ss)
    if config.mode == "policy":
        observe = policy_observer(agent)
    else:
        observe = trajectory_observer(agent, config.num_traj, config.horizon, _int_seed(observe_ss))
    algo_seed = _int_seed(algo_ss)
    if algorithm == "greedy":
        gcfg = GreedyConfig(config.budget, config.num_candidates, config.num_samples, config.burn_in, config.thinning, algo_seed)
        exp_log = run_greedy(gcfg, MazeDistribution("varied"), observe, config.grid_n, config.gamma, config.box)
    elif algorithm in ("uniform", "varied"):
        exp_log = run_nonadaptive(algorithm, config.budget, observe, config.grid_n, config.gamma, config.box, algo_seed)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    lambdas = [config.lam] if lambdas is None else list(lambdas)
    records = evaluate_log(exp_log, hidden, lambdas, config.box, algorithm, sim)
    transcript = [
        {
            "round": i + 1,
            "env_id": str(eid),
            "maze": src.to_dict() if src is not None else None,
            "observed_policy": [int(a) for a in pi],
        }
        for i, ((_, pi), eid, src) in enumerate(zip(exp_log.experiments, exp_log.env_ids, exp_log.sources))
    ]
    eliminated = first_elimination(exp_log, hidden)
    if eliminated is not None:
        log.info("%s sim %d: hidden reward eliminated in round %d", algorithm, sim, eliminated)
    return SimulationResult(algorithm, sim, hidden, records, transcript, eliminated)


def _run_task(args):
    algorithm, config, sim, lambdas = args
    try:
        return run_simulation(algorithm, config, sim, lambdas)
    except Exception as exc:
        raise RuntimeError(f"{algorithm} simulation {sim} failed: {exc}") from exc


def max_workers() -> int:
    env = os.environ.get("IRL_EXP_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def _map(fn, tasks: list):
    workers = min(max_workers(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, tasks))


def summarize(records: Sequence[RoundRecord]) -> list[dict]:
    """Per (algorithm, lambda, round): mean error and its standard error across simulations."""
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.algorithm, rec.lam, rec.round), []).append(rec)
    out = []
    for (alg, lam, rnd), recs in sorted(groups.items()):
        errs = np.array([r.lp_error_linf for r in recs])
        canon = np.array([r.canonical_error for r in recs])
        se = float(errs.std(ddof=1) / np.sqrt(errs.size)) if errs.size > 1 else 0.0
        out.append(
            dict(
                algorithm=alg,
                **{"lambda": lam},
                round=rnd,
                sims=errs.size,
                mean_error=float(errs.mean()),
                std_error=se,
                mean_canonical_error=float(canon.mean()),
            )
        )
    return out


def final_errors(records: Sequence[RoundRecord], algorithm: str, lam: float | None = None) -> np.ndarray:
    """Last-round raw error per simulation, ordered by simulation index."""
    last: dict = {}
    for rec in records:
        if rec.algorithm == algorithm and (lam is None or np.isclose(rec.lam, lam)):
            if rec.sim not in last or rec.round > last[rec.sim].round:
                last[rec.sim] = rec
    return np.array([last[s].lp_error_linf for s in sorted(last)])


def run_benchmark(
    config: RunConfig,
    algorithms: Sequence[str] = ALGORITHMS,
    out_dir: str | Path | None = None,
    lambdas: Sequence[float] | None = None,
) -> tuple[list[RoundRecord], list[dict]]:
    """Every requested algorithm over ``config.sims`` simulated agents."""
    tasks = [(alg, config, sim, lambdas) for alg in algorithms for sim in range(config.sims)]
    results = _map(_run_task, tasks)
    records = [rec for res in results for rec in res.records]
    summary = summarize(records)
    if out_dir is not None:
        write_outputs(out_dir, records, summary, results)
    return records, summary


def write_rounds_csv(path, records: Sequence[RoundRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROUND_FIELDS)
        writer.writerows(rec.row() for rec in records)


def write_dicts_csv(path, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def write_outputs(out_dir, records, summary, results) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rounds_csv(out / "rounds.csv", records)
    write_dicts_csv(out / "summary.csv", summary)
    transcript = [
        {
            "algorithm": r.algorithm,
            "sim": r.sim,
            "hidden_reward": r.hidden_reward.tolist(),
            "eliminated_round": r.eliminated_round,
            "experiments": r.transcript,
        }
        for r in results
    ]
    (out / "transcript.json").write_text(json.dumps(transcript))


def _sweep_task(args):
    config, sim, envs = args
    hidden, agent = generate_scenario(config, _seeds(config, sim).spawn(3)[0])
    errors = np.empty((len(envs), len(config.sweep_lambdas)))
    for i, env in enumerate(envs):
        pi = agent.respond_policy(env)
        for j, lam in enumerate(config.sweep_lambdas):
            r_hat = select_classic(env, pi, lam, config.box).reward
            errors[i, j] = np.max(np.abs(hidden - r_hat))
    return errors


def run_single_env_sweep(config: RunConfig) -> dict:
    """Best mean error of single-environment selection over random mazes and lambdas.

    Every (maze, lambda) pair is scored by its mean raw error over
    ``config.sims`` simulated agents; the same agents as in :func:`run_benchmark`.
    """
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2**31 - 1]))
    dist = MazeDistribution(config.sweep_kind)
    envs = [compile_maze(dist.sample(config.grid_n, config.gamma, rng)) for _ in range(config.sweep_envs)]
    per_sim = _map(_sweep_task, [(config, sim, envs) for sim in range(config.sims)])
    mean = np.mean(per_sim, axis=0)
    i, j = np.unravel_index(np.argmin(mean), mean.shape)
    return {
        "best_env": int(i),
        "best_lambda": float(config.sweep_lambdas[j]),
        "best_mean_error": float(mean[i, j]),
        "table": mean,
        "lambdas": tuple(config.sweep_lambdas),
    }


def run_omnipotent(d: int, epsilon: float, sims: int, seed: int = 0, r_max: float = 10.0, gamma: float = 0.8) -> list[dict]:
    """Identify random hidden rewards in ``[-r_max, r_max]^d`` by constructed experiments."""
    rows = []
    for sim in range(sims):
        rng = np.random.default_rng([seed, sim])
        hidden = rng.uniform(-r_max, r_max, d)
        agent = Agent(hidden)
        res = identify(agent.respond_policy, d, epsilon, gamma)
        rows.append(
            {
                "sim": sim,
                "d": d,
                "epsilon": epsilon,
                "experiments_used": res.experiments_used,
                "experiment_bound": experiment_bound(d, epsilon),
                "canonical_error": identification_error(hidden, res.estimate),
                "s_min": res.s_min,
                "s_max": res.s_max,
                "hidden_reward": hidden.tolist(),
                "estimate": res.estimate.tolist(),
                "transcript": res.transcript,
            }
        )
    return rows
