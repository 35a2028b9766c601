"""Experiment runners: each produces a run directory with config, CSVs, summary.

Every runner is deterministic given (config, seed): CSV floats are written
with repr-faithful precision and wall-clock timings never enter the artifact,
so re-running a stored config reproduces the outputs byte for byte.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .. import game
from ..data import CsvColumns, RawSeries, TimeSeriesDataset, load_birmingham_csv, make_windows, synthesize_series
from ..drl import (
    IncentiveEnv,
    MarlHyperparams,
    capacity_reward,
    fixed_capacity_schedule,
    forecast_capacity_schedule,
    greedy_rollout,
    train_marl,
)
from ..federated import (
    FederationConfig,
    RoundReport,
    run_federation,
    run_isolated_baseline,
    weighted_mean_test_mse,
)
from ..neural import init_model, to_bytes
from .config import ExperimentConfig, config_to_dict, validate
from .presets import CAPACITY_CASES, preset_population

__all__ = [
    "RunArtifact",
    "build_datasets",
    "run_fed_train",
    "run_game_solve",
    "run_drl_train",
    "run_case_study",
    "compare_linear_pricing",
    "run_best_response_sweep",
]


@dataclass
class RunArtifact:
    out_dir: Path
    config: ExperimentConfig
    summary: dict
    csv_paths: dict[str, Path]
    failures: list[str]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _prepare_dir(cfg: ExperimentConfig, out_dir: str | Path | None) -> Path:
    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir) / cfg.mode
    out.mkdir(parents=True, exist_ok=True)
    with (out / "config.json").open("w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def _finish(
    out: Path, cfg: ExperimentConfig, summary: dict, csvs: dict[str, Path], failures: list[str]
) -> RunArtifact:
    summary = dict(summary)
    summary["seed"] = cfg.seed
    summary["failures"] = failures
    with (out / "summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunArtifact(out_dir=out, config=cfg, summary=summary, csv_paths=csvs, failures=failures)


def build_datasets(cfg: ExperimentConfig) -> dict[str, TimeSeriesDataset]:
    """Window the configured data source into one dataset per lot."""
    fc = cfg.forecast
    series: list[RawSeries]
    if fc.source == "csv":
        columns = CsvColumns(**fc.csv_columns) if fc.csv_columns else None
        series = load_birmingham_csv(fc.csv_path, list(fc.lot_ids), columns)
    else:
        series = [
            synthesize_series(
                cfg.seed * 101 + k,
                days=fc.synthetic_days,
                slots_per_day=fc.synthetic_slots_per_day,
                noise_std=fc.synthetic_noise_std,
                lot_id=lot,
            )
            for k, lot in enumerate(fc.lot_ids)
        ]
    return {
        s.lot_id: make_windows(s, fc.window, fc.train_fraction) for s in series
    }


def _fed_cfg(cfg: ExperimentConfig) -> FederationConfig:
    fc = cfg.forecast
    return FederationConfig(
        rounds=fc.rounds,
        client_ids=tuple(fc.lot_ids),
        seed=cfg.seed,
        local_epochs=fc.local_epochs,
        batch_size=fc.batch_size,
        learning_rate=fc.learning_rate,
        hidden_size=fc.hidden_size,
        head_hidden=fc.head_hidden,
    )


def _round_rows(reports: list[RoundReport]) -> list[list]:
    rows = []
    for rep in reports:
        for client in sorted(rep.train_mse):
            rows.append(
                [
                    rep.round_index,
                    client,
                    rep.train_mse[client],
                    rep.test_mse[client],
                    rep.global_test_mse[client],
                ]
            )
    return rows


def run_fed_train(cfg: ExperimentConfig, out_dir=None) -> RunArtifact:
    """Collaborative training plus (optionally) per-lot isolated baselines."""
    validate(cfg)
    out = _prepare_dir(cfg, out_dir)
    datasets = build_datasets(cfg)
    fed_cfg = _fed_cfg(cfg)
    model, reports = run_federation(datasets, fed_cfg)
    csvs = {"rounds": out / "federated_rounds.csv"}
    _write_csv(
        csvs["rounds"],
        ["round", "client", "train_mse", "test_mse", "global_test_mse"],
        _round_rows(reports),
    )
    (out / "global_model.bin").write_bytes(to_bytes(model))

    summary: dict = {
        "final_global_test_mse": reports[-1].global_test_mse,
        "final_weighted_test_mse": weighted_mean_test_mse(reports[-1], datasets),
        "n_train": {c: ds.n_train for c, ds in datasets.items()},
    }
    if cfg.forecast.run_isolated_baseline:
        iso_rows = []
        iso_final = {}
        for client, ds in sorted(datasets.items()):
            _, iso_reports = run_isolated_baseline(ds, fed_cfg)
            for rep in iso_reports:
                iso_rows.append(
                    [rep.round_index, client, rep.train_mse[client], rep.test_mse[client]]
                )
            iso_final[client] = iso_reports[-1].test_mse[client]
        csvs["isolated"] = out / "isolated_rounds.csv"
        _write_csv(csvs["isolated"], ["round", "client", "train_mse", "test_mse"], iso_rows)
        summary["isolated_final_test_mse"] = iso_final
    return _finish(out, cfg, summary, csvs, [])


def run_game_solve(cfg: ExperimentConfig, out_dir=None) -> RunArtifact:
    """Analytic equilibrium via gradient play, optionally grid-certified."""
    validate(cfg)
    out = _prepare_dir(cfg, out_dir)
    plos, vehicles = preset_population(cfg.seed, cfg.population)
    _, mu = game.demand_coefficients(vehicles, plos)
    trace: list[np.ndarray] = []
    report = game.jacobi_solve(
        plos,
        vehicles,
        learning_rate=cfg.game.learning_rate,
        delta=cfg.game.delta,
        max_iters=cfg.game.max_iters,
        tol=cfg.game.tol,
        mode=cfg.game.mode,
        trace=trace,
    )
    J = len(plos)
    rows = []
    for it, vals in enumerate(trace, start=1):
        utilities = [game.plo_expected_utility_reduced(j, vals, mu, plos) for j in range(J)]
        rows.append([it, *vals.tolist(), *utilities])
    csvs = {"trace": out / "solver_trace.csv"}
    header = (
        ["iteration"]
        + [f"r_{j + 1}" for j in range(J)]
        + [f"utility_{j + 1}" for j in range(J)]
    )
    _write_csv(csvs["trace"], header, rows)

    summary = {"equilibrium": report.to_dict()}
    failures = [] if report.converged else ["solver did not converge"]
    if cfg.game.grid_cross_check:
        oracle = game.grid_oracle_equilibrium(plos, vehicles, cfg.game.grid_points)
        gap = np.abs(oracle.r_star.values - report.r_star.values)
        summary["grid_oracle"] = {
            "r_star": oracle.r_star.values.tolist(),
            "converged": oracle.converged,
            "cycle_detected": oracle.cycle_detected,
            "max_gap": float(gap.max()),
            "grid_step": oracle.grid_step.tolist(),
        }
        if np.any(gap > oracle.grid_step + 1e-12):
            failures.append("grid oracle disagrees with gradient play beyond one cell")
    return _finish(out, cfg, summary, csvs, failures)


def _marl_hp(cfg: ExperimentConfig) -> MarlHyperparams:
    d = cfg.drl
    return MarlHyperparams(
        episodes=d.episodes,
        horizon=d.horizon,
        gamma=d.gamma,
        clip_eps=d.clip_eps,
        ppo_epochs=d.ppo_epochs,
        minibatch=d.minibatch,
        actor_lr=d.actor_lr,
        critic_lr=d.critic_lr,
        history_len=d.history_len,
        init_log_std=d.init_log_std,
        log_std_cap=d.log_std_cap,
        log_std_cap_fraction=d.log_std_cap_fraction,
        seed=cfg.seed,
    )


def _capacity_schedule(cfg: ExperimentConfig, capacities):
    if cfg.drl.capacity_source == "forecast":
        datasets = build_datasets(cfg)
        fed_cfg = _fed_cfg(cfg)
        model, _ = run_federation(datasets, fed_cfg)
        lots = sorted(datasets)
        windows = [datasets[lot].test_pairs()[0] for lot in lots]
        return forecast_capacity_schedule(
            [model] * len(lots), windows, list(cfg.drl.total_spaces)
        )
    return fixed_capacity_schedule(capacities)


def run_drl_train(
    cfg: ExperimentConfig, out_dir=None, capacities=None
) -> RunArtifact:
    """Train the operator agents and emit learning curves plus the greedy readout."""
    validate(cfg)
    out = _prepare_dir(cfg, out_dir)
    plos, vehicles = preset_population(cfg.seed, cfg.population)
    caps = capacities if capacities is not None else cfg.drl.capacities
    schedule = _capacity_schedule(cfg, caps)
    hp = _marl_hp(cfg)
    result = train_marl(plos, vehicles, schedule, hp=hp)

    csvs = {"curves": out / "learning_curves.csv"}
    _write_csv(
        csvs["curves"],
        ["episode", "agent", "mean_reward", "mean_r", "expected_arrivals"],
        [
            [r.episode, r.agent, r.mean_reward, r.mean_r, r.expected_arrivals]
            for r in result.curves
        ],
    )
    eval_env = IncentiveEnv(
        plos, vehicles, history_len=hp.history_len, capacity_schedule=schedule
    )
    greedy = greedy_rollout(result.agents, eval_env, steps=cfg.drl.greedy_steps)
    np.savez(
        out / "policies.npz",
        **{
            f"agent{j}_{k}": arr
            for j, agent in enumerate(result.agents)
            for k, arr in enumerate(agent.policy.param_arrays())
        },
    )
    summary = {
        "greedy_rewards_r": greedy["rewards_r"].tolist(),
        "greedy_payoffs": greedy["payoffs"].tolist(),
        "greedy_expected_arrivals": greedy["expected_arrivals"].tolist(),
        "capacities": None if caps is None else list(caps),
        "final_log_std": [float(a.policy.log_std[0]) for a in result.agents],
    }
    return _finish(out, cfg, summary, csvs, [])


def run_case_study(case: int, cfg: ExperimentConfig, out_dir=None) -> RunArtifact:
    """One of the three fixed capacity scenarios (requires three operators)."""
    if case not in CAPACITY_CASES:
        raise ValueError("case must be 1, 2 or 3")
    if cfg.population.n_plos != 3:
        raise ValueError("case studies are defined for exactly 3 operators")
    caps = CAPACITY_CASES[case]
    cfg = replace(cfg, case=case, drl=replace(cfg.drl, capacities=caps))
    artifact = run_drl_train(cfg, out_dir=out_dir, capacities=caps)
    arrivals = np.asarray(artifact.summary["greedy_expected_arrivals"])
    ratios = arrivals / np.asarray(caps)
    artifact.summary["case"] = case
    artifact.summary["arrival_to_capacity_ratio"] = ratios.tolist()
    with (artifact.out_dir / "summary.json").open("w") as fh:
        json.dump(artifact.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return artifact


def compare_linear_pricing(
    cfg: ExperimentConfig, out_dir=None, policy_rewards=None
) -> RunArtifact:
    """Sweep linear capacity-proportional pricing against the game policy.

    Linear pricing sets operator 1's reward to scale * capacity and keeps the
    opponents at the game solution; the sweep scans the scale over its full
    feasible interval. ``policy_rewards`` overrides the game-based joint
    strategy (e.g. to evaluate a trained learner instead of gradient play).
    """
    validate(cfg)
    out = _prepare_dir(cfg, out_dir)
    plos, vehicles = preset_population(cfg.seed, cfg.population)
    caps = np.asarray(CAPACITY_CASES[3], dtype=np.float64)

    if policy_rewards is None:
        report = game.jacobi_solve(
            plos,
            vehicles,
            learning_rate=cfg.game.learning_rate,
            delta=cfg.game.delta,
            max_iters=cfg.game.max_iters,
            tol=min(cfg.game.tol, 1e-5),
            mode=cfg.game.mode,
        )
        base = report.r_star.values
    else:
        base = np.asarray(policy_rewards, dtype=np.float64)

    n1 = caps[0]
    plo1 = plos[0]
    zeta_lo = plo1.reward_min / n1
    zeta_hi = plo1.reward_max / n1
    zetas = np.linspace(zeta_lo, zeta_hi, cfg.game.grid_points)
    rows = []
    best = (-np.inf, zeta_lo)
    for zeta in zetas:
        r1 = zeta * n1
        joint = base.copy()
        joint[0] = r1
        utility = capacity_reward(0, joint, vehicles, plo1, float(caps[0]))
        rows.append([zeta, r1, utility])
        if utility > best[0]:
            best = (utility, zeta)
    game_utility = capacity_reward(0, base, vehicles, plo1, float(caps[0]))
    csvs = {"sweep": out / "linear_pricing_sweep.csv"}
    _write_csv(csvs["sweep"], ["zeta", "r_1", "utility_1"], rows)
    ratio = game_utility / best[0] if best[0] > 0 else float("nan")
    summary = {
        "game_rewards": base.tolist(),
        "game_utility_1": game_utility,
        "best_linear_utility_1": best[0],
        "best_zeta": best[1],
        "utility_ratio": ratio,
        "capacities": caps.tolist(),
    }
    failures = []
    if not np.isfinite(ratio) or ratio < 0.9:
        failures.append(
            f"game-based utility fell below 0.9x the best linear sweep (ratio {ratio:.4f})"
        )
    return _finish(out, cfg, summary, csvs, failures)


def run_best_response_sweep(cfg: ExperimentConfig, out_dir=None) -> RunArtifact:
    """Tabulate the vehicle best response over (preference, duration, energy) grids."""
    validate(cfg)
    out = _prepare_dir(cfg, out_dir)
    # reference follower and lot: mid-range task stream, fig-style focal values
    period = cfg.population.service_period_min
    workload = 2.0 * 3.5 * period
    plo = game.PloProfile(
        revenue_rate=4.0,
        workload_gcycles=workload,
        reward_min=cfg.population.reward_min,
        reward_max=cfg.population.reward_max,
    )
    ref = {"preference": 0.6, "duration": 60.0, "energy": 6.0}
    rewards = np.linspace(plo.reward_min, plo.reward_max, 15)

    def responder(p: float, d: float, kappa: float, r: float) -> float:
        v = game.VehicleProfile(
            preferences=np.array([p]), duration_min=d, energy_coeff=kappa
        )
        f_star, _ = game.vehicle_best_response(v, 0, plo, r)
        return f_star

    grids = {
        "preference": np.linspace(0.1, 0.9, 9),
        "duration": np.linspace(20.0, 100.0, 9),
        "energy": np.linspace(1.0, 10.0, 10),
    }
    csvs = {}
    for name, grid in grids.items():
        rows = []
        for val in grid:
            args = dict(ref)
            args[name] = float(val)
            for r in rewards:
                rows.append(
                    [
                        val,
                        r,
                        responder(args["preference"], args["duration"], args["energy"], r),
                    ]
                )
        path = out / f"best_response_vs_{name}.csv"
        csvs[name] = path
        _write_csv(path, [name, "reward", "f_star"], rows)
    summary = {
        "reference": ref,
        "workload_gcycles": workload,
        "grids": {k: v.tolist() for k, v in grids.items()},
    }
    return _finish(out, cfg, summary, csvs, [])
