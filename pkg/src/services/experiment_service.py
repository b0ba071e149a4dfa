"""
Experiment orchestration behind the CLI: single runs, multi-seed protocol
comparison, weight sweeps, agent and surrogate training, dataset building and
one-shot solves. Every writer goes under the caller's output directory.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.domain.errors import MissingArtifactError
from src.domain.models import ClusteringSolution, MilpWeights, NetworkState, SimResult, StopRule
from src.infrastructure.artifacts import (
    CSV_SCHEMAS,
    write_matrix_csv,
    write_rounds_csv,
    write_schema_manifest,
    write_summary,
)
from src.infrastructure.config import ExperimentConfig
from src.services import analysis, dqn_agent, surrogate
from src.services.clustering_opt import cluster_count, solve_exact
from src.services.net_model import dump_topology, generate_topology, load_topology
from src.utils.svg_charts import write_bar_chart, write_heatmap, write_line_chart, write_scatter
from src.workers.run_handlers import SimulationJob, handle_simulation, run_jobs
from sb_utils.file_utils import write_csv, write_json
from sb_utils.logger_utils import logger


def _job(exp: ExperimentConfig, protocol: str, seed: int, stop: StopRule, weights: Optional[MilpWeights] = None, period: int = 1) -> SimulationJob:
    policy = exp.resolve(exp.paths.policy)
    topology = exp.resolve(exp.paths.topology)
    return SimulationJob(
        protocol=protocol,
        network=exp.network.model_copy(update={"seed": seed}),
        radio=exp.radio,
        weights=weights or exp.weights,
        stop=stop,
        policy_path=str(policy) if policy else None,
        topology_path=str(topology) if topology else None,
        period=period,
    )


def _geometry(exp: ExperimentConfig, seed: int) -> NetworkState:
    """The deployment a run with ``seed`` used."""
    if exp.paths.topology:
        return load_topology(exp.resolve(exp.paths.topology), exp.network)
    return generate_topology(exp.network.model_copy(update={"seed": seed}))


def _alive_series(result: SimResult) -> Tuple[List[int], List[float]]:
    xs = [0] + [m.round for m in result.per_round]
    ys = [float(result.n_nodes)] + [float(m.alive) for m in result.per_round]
    return xs, ys


def _energy_series(result: SimResult, e0: float) -> Tuple[List[int], List[float]]:
    xs = [0] + [m.round for m in result.per_round]
    ys = [result.n_nodes * e0] + [m.e_net for m in result.per_round]
    return xs, ys


def _dissipated_series(result: SimResult) -> Tuple[List[int], List[float]]:
    return [m.round for m in result.per_round], [m.e_dissipated_avg for m in result.per_round]


def _label(result: SimResult) -> str:
    return f"{result.protocol} (seed {result.seed})"


def _write_lifetime_charts(out_dir: Path, runs: Sequence[SimResult], e0: float) -> None:
    write_line_chart(
        out_dir / "alive.svg", "Alive nodes", "round", "alive nodes",
        [(_label(r), *_alive_series(r)) for r in runs],
    )
    write_line_chart(
        out_dir / "energy.svg", "Remaining energy", "round", "E_net (J)",
        [(_label(r), *_energy_series(r, e0)) for r in runs],
    )
    write_line_chart(
        out_dir / "dissipated.svg", "Average energy dissipated per round", "round", "J per node",
        [(_label(r), *_dissipated_series(r)) for r in runs],
    )


def _write_decision_artifacts(out_dir: Path, results: Dict[str, List[SimResult]], window: int) -> None:
    """Action log, state/action correlation and re-cluster frequency artifacts."""
    decisions = {proto: [row for r in runs for row in analysis.action_log(r)] for proto, runs in results.items()}
    write_csv(
        out_dir / "actions.csv",
        CSV_SCHEMAS["actions"]["columns"],
        (row.as_row() for rows in decisions.values() for row in rows),
    )
    labels = list(analysis.CORRELATION_LABELS)
    for proto, rows in decisions.items():
        matrix = analysis.state_action_correlation(rows)
        write_matrix_csv(out_dir / f"state_action_correlation_{proto}.csv", matrix, labels, labels)
        write_heatmap(
            out_dir / f"state_action_correlation_{proto}.svg",
            f"State/action correlation: {proto}", matrix, labels, labels,
        )

    windows = {
        proto: [analysis.recluster_frequency(r, window) for r in runs] for proto, runs in results.items()
    }
    write_csv(
        out_dir / "recluster_frequency.csv",
        CSV_SCHEMAS["recluster_frequency"]["columns"],
        (w.as_row() for per_run in windows.values() for ws in per_run for w in ws),
    )
    first_runs = [per_run[0] for per_run in windows.values() if per_run and per_run[0]]
    if not first_runs:
        return
    write_line_chart(
        out_dir / "recluster_frequency.svg",
        f"New cluster-head frequency ({window}-round windows)",
        "round",
        "fraction of rounds re-clustered",
        [(f"{ws[0].protocol} (seed {ws[0].seed})", [w.window_end for w in ws], [w.frequency for w in ws]) for ws in first_runs],
    )
    write_scatter(
        out_dir / "energy_vs_frequency.svg",
        f"Energy vs new cluster-head frequency ({window}-round windows)",
        "fraction of rounds re-clustered",
        "energy dissipated in window (J)",
        [
            (proto, [w.frequency for ws in per_run for w in ws], [w.energy for ws in per_run for w in ws])
            for proto, per_run in windows.items()
            if any(per_run)
        ],
    )


def write_topology(state: NetworkState, out_dir: Path) -> Path:
    """``topology.csv`` plus a field plot with the base station."""
    out_dir = Path(out_dir)
    path = dump_topology(state, out_dir / "topology.csv")
    cfg = state.cfg
    write_scatter(
        out_dir / "topology.svg",
        f"Deployment: {state.n_nodes} nodes, seed {cfg.seed}",
        "x (m)",
        "y (m)",
        [("sensor nodes", state.x.tolist(), state.y.tolist()), ("base station", [cfg.bs_x], [cfg.bs_y])],
    )
    return path


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------
def simulate(exp: ExperimentConfig, protocol: str, seed: int, out_dir: Path) -> SimResult:
    """One run to all-dead: per-round metrics, summary, decision analysis and plots."""
    out_dir = Path(out_dir)
    result = handle_simulation(_job(exp, protocol, seed, StopRule.all_dead()))
    write_rounds_csv(out_dir / "rounds.csv", result)
    write_summary(out_dir / "summary.json", result)
    _write_lifetime_charts(out_dir, [result], exp.network.e0)
    if result.per_round:
        _write_decision_artifacts(out_dir, {protocol: [result]}, exp.compare.frequency_window)
    write_topology(_geometry(exp, seed), out_dir)
    write_schema_manifest(out_dir)
    return result


# ----------------------------------------------------------------------
# compare
# ----------------------------------------------------------------------
@dataclass
class CompareReport:
    results: Dict[str, List[SimResult]] = field(default_factory=dict)

    def medians(self) -> Dict[str, dict]:
        out = {}
        for protocol, runs in self.results.items():
            def med(values):
                arr = np.array([np.nan if v is None else v for v in values], dtype=float)
                return None if np.isnan(arr).all() else float(np.nanmedian(arr))
            out[protocol] = {
                "fnd": med(r.fnd for r in runs),
                "hnd": med(r.hnd for r in runs),
                "lnd": med(r.lnd for r in runs),
                "pdr": med(r.pdr for r in runs),
                "control_packets_total": int(sum(r.total_control_packets for r in runs)),
                "control_packets_median": med(r.total_control_packets for r in runs),
                "seeds": [r.seed for r in runs],
            }
        return out


def selection_heatmap(
    results: Sequence[SimResult], geometries: Sequence[NetworkState], side: float, bins: int
) -> np.ndarray:
    """
    CH selections per spatial cell, averaged over runs; each run is binned on
    its own deployment. Row 0 is the top (largest y) of the field.
    """
    grids = [
        np.histogram2d(g.y, g.x, bins=bins, range=[[0.0, side], [0.0, side]], weights=r.ch_selection_count)[0]
        for r, g in zip(results, geometries)
    ]
    return np.mean(grids, axis=0)[::-1]


def compare(exp: ExperimentConfig, seeds: Sequence[int], out_dir: Path, workers: int = 1) -> CompareReport:
    out_dir = Path(out_dir)
    protocols = list(exp.compare.protocols)
    if "leach-rlc" in protocols:
        policy = exp.resolve(exp.paths.policy)
        if not policy.exists():
            raise MissingArtifactError(
                f"no trained LEACH-RLC policy at {policy}; run the train-agent command first"
            )
    jobs = [_job(exp, proto, seed, StopRule.all_dead()) for proto in protocols for seed in seeds]
    flat = run_jobs(handle_simulation, jobs, workers)

    report = CompareReport()
    for job, result in zip(jobs, flat):
        report.results.setdefault(job.protocol, []).append(result)

    write_csv(
        out_dir / "compare.csv",
        CSV_SCHEMAS["compare"]["columns"],
        (
            [r.protocol, r.seed, r.fnd, r.hnd, r.lnd, r.pdr, r.total_control_packets, r.recluster_count, r.rounds]
            for r in flat
        ),
    )
    hist_rows = []
    for proto, runs in report.results.items():
        merged: Dict[int, int] = {}
        for r in runs:
            for k, v in r.ch_count_histogram.items():
                merged[k] = merged.get(k, 0) + v
        hist_rows.extend([proto, k, v] for k, v in sorted(merged.items()))
    write_csv(out_dir / "ch_histogram.csv", CSV_SCHEMAS["ch_histogram"]["columns"], hist_rows)

    bins = exp.compare.heatmap_bins
    side = exp.network.side_length
    edges = [f"{side * i / bins:g}" for i in range(bins)]
    geometries = {seed: _geometry(exp, seed) for seed in seeds}
    for proto, runs in report.results.items():
        grid = selection_heatmap(runs, [geometries[r.seed] for r in runs], side, bins)
        title = f"CH selections: {proto} (mean of {len(runs)} seeds)"
        write_matrix_csv(out_dir / f"ch_selection_{proto}.csv", grid, edges[::-1], edges)
        write_heatmap(out_dir / f"ch_selection_{proto}.svg", title, grid, edges[::-1], edges)

    pdr = analysis.pdr_spread(report.results)
    write_csv(out_dir / "pdr.csv", CSV_SCHEMAS["pdr"]["columns"], pdr)
    write_bar_chart(
        out_dir / "pdr.svg",
        f"Packet delivery ratio (median, min-max over {len(seeds)} seeds)",
        "PDR",
        [row[0] for row in pdr],
        [row[2] for row in pdr],
        [(row[3], row[4]) for row in pdr],
    )

    _write_lifetime_charts(out_dir, [runs[0] for runs in report.results.values()], exp.network.e0)
    _write_decision_artifacts(out_dir, report.results, exp.compare.frequency_window)
    write_json(out_dir / "compare_summary.json", report.medians())
    write_schema_manifest(out_dir)
    return report


# ----------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------
PROJECTIONS = (("alpha", "beta"), ("alpha", "gamma"), ("beta", "gamma"))

_SWEEP_STOP = {"fnd": StopRule.fnd, "hnd": StopRule.all_dead, "lnd": StopRule.all_dead}


@dataclass
class SweepReport:
    rows: List[Tuple[float, float, float, int, Optional[int]]]
    metric: str = "fnd"

    def projection(self, a: str, b: str, axes: Dict[str, List[float]]) -> np.ndarray:
        """Mean metric over the remaining axis and seeds, shape (len(axes[a]), len(axes[b]))."""
        pos = {"alpha": 0, "beta": 1, "gamma": 2}
        grid = np.full((len(axes[a]), len(axes[b])), np.nan)
        for i, va in enumerate(axes[a]):
            for j, vb in enumerate(axes[b]):
                vals = [r[4] for r in self.rows if r[pos[a]] == va and r[pos[b]] == vb and r[4] is not None]
                if vals:
                    grid[i, j] = float(np.mean(vals))
        return grid

    def best(self) -> Tuple[float, float, float, int, Optional[int]]:
        return max(self.rows, key=lambda r: (-1 if r[4] is None else r[4]))

    def csv_rows(self) -> List[list]:
        return [[a, b, g, seed, self.metric, value] for a, b, g, seed, value in self.rows]


def sweep(exp: ExperimentConfig, out_dir: Path, workers: int = 1) -> SweepReport:
    """Lifetime metric of the periodic exact protocol on every (alpha, beta, gamma, seed) grid point."""
    out_dir = Path(out_dir)
    sw = exp.sweep
    stop = _SWEEP_STOP[sw.metric](sw.max_rounds)
    points = list(itertools.product(sw.alpha, sw.beta, sw.gamma, sw.seeds))
    jobs = [
        _job(exp, "milp", seed, stop, MilpWeights(alpha=a, beta=b, gamma=g), sw.period)
        for a, b, g, seed in points
    ]
    results = run_jobs(handle_simulation, jobs, workers)
    report = SweepReport(
        rows=[(a, b, g, seed, getattr(r, sw.metric)) for (a, b, g, seed), r in zip(points, results)],
        metric=sw.metric,
    )
    write_csv(out_dir / "sweep.csv", CSV_SCHEMAS["sweep"]["columns"], report.csv_rows())

    axes = {"alpha": list(sw.alpha), "beta": list(sw.beta), "gamma": list(sw.gamma)}
    for a, b in PROJECTIONS:
        grid = report.projection(a, b, axes)
        rows = [f"{a}={v:g}" for v in axes[a]]
        cols = [f"{b}={v:g}" for v in axes[b]]
        write_matrix_csv(out_dir / f"sweep_{a}_{b}.csv", grid, rows, cols)
        write_heatmap(out_dir / f"sweep_{a}_{b}.svg", f"Mean {sw.metric.upper()}: {a} vs {b}", grid, rows, cols)
    write_schema_manifest(out_dir)
    logger.info(
        "Sweep finished",
        extra={"component": "experiments", "points": len(points), "metric": sw.metric, "best": list(report.best())},
    )
    return report


# ----------------------------------------------------------------------
# training and datasets
# ----------------------------------------------------------------------
def train_agent(exp: ExperimentConfig, out_dir: Path) -> dqn_agent.TrainingOutcome:
    out_dir = Path(out_dir)
    topology = None
    if exp.paths.topology:
        topology = load_topology(exp.resolve(exp.paths.topology), exp.network)
    if exp.surrogate.backend == "surrogate":
        ch_model, assign_model = _load_surrogates(exp)
        backend = dqn_agent.surrogate_backend(ch_model, assign_model, exp.radio, exp.weights)
    else:
        backend = dqn_agent.exact_backend(exp.radio, exp.weights)
    cfg = topology.cfg if topology is not None else exp.network
    outcome = dqn_agent.train(cfg, exp.radio, backend, exp.dqn, topology)
    outcome.agent.qnet.save(out_dir / Path(exp.paths.policy).name)
    dqn_agent.save_training_log(outcome, out_dir / "training_log.jsonl")
    return outcome


def _load_surrogates(exp: ExperimentConfig):
    directory = exp.resolve(exp.paths.surrogate_dir)
    try:
        return surrogate.load_surrogates(directory)
    except MissingArtifactError as e:
        raise MissingArtifactError(f"{e}; run the train-surrogate command first") from e


def build_dataset(exp: ExperimentConfig, out_dir: Path, workers: int = 1) -> Path:
    scenario = surrogate.DatasetScenario(
        network=exp.network,
        weights=[exp.weights],
        seeds=exp.surrogate.dataset_seeds,
        max_rounds=exp.surrogate.max_rounds,
    )
    ds = surrogate.build_dataset([scenario], exp.radio, workers)
    return surrogate.save_dataset(ds, Path(out_dir) / Path(exp.paths.dataset).name)


def train_surrogate(exp: ExperimentConfig, out_dir: Path) -> surrogate.SurrogateEvaluation:
    out_dir = Path(out_dir)
    path = exp.resolve(exp.paths.dataset)
    try:
        ds = surrogate.load_dataset(path)
    except MissingArtifactError as e:
        raise MissingArtifactError(f"{e}; run the build-dataset command first") from e
    train, test = ds.split(exp.surrogate.seed, exp.surrogate.test_fraction)
    profile = surrogate.PROFILES[exp.surrogate.profile]
    ch_model = surrogate.train_ch_predictor(train, profile, exp.surrogate.seed)
    assign_model = surrogate.train_assign_predictor(train, profile, exp.surrogate.seed)
    surrogate.save_surrogates(ch_model, assign_model, out_dir)

    evaluation = surrogate.evaluate_surrogates(ch_model, assign_model, test if len(test) else train)
    write_csv(
        out_dir / "accuracy.csv",
        CSV_SCHEMAS["accuracy"]["columns"],
        [
            ["ch", "test", len(test), evaluation.ch_accuracy],
            ["assign", "test", len(test), evaluation.assign_accuracy],
        ],
    )
    write_matrix_csv(out_dir / "ch_confusion.csv", evaluation.ch_confusion, ["0", "1"], ["0", "1"])
    slots = [str(i) for i in range(ds.ch_max)]
    write_matrix_csv(out_dir / "assign_confusion.csv", evaluation.assign_confusion, slots, slots)
    return evaluation


def solve(
    exp: ExperimentConfig, state_file: Path, weights: Optional[MilpWeights] = None, k: Optional[int] = None
) -> ClusteringSolution:
    """Exact solution for a node file (``id,x,y[,energy]``)."""
    state = load_topology(Path(state_file), exp.network)
    if k is None:
        k = cluster_count(state.cfg.k_fraction, state.alive_count)
    return solve_exact(state, exp.radio, weights or exp.weights, k)
