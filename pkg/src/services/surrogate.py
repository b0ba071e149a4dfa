"""
Learned stand-ins for the exact solver, used to speed up agent training.

Two predictors are trained on solver-labelled rounds:

* the CH predictor scores every node as a cluster head (sigmoid head, BCE);
* the assignment predictor gives, per node, a softmax over CH slots (CCE).

Feature rows are scaled to O(1): weights / 100, energies / E0, transmit
energies / tx_energy(B, d0), CH counts / CH_max, node ids / N. Entries that
refer to non-candidates or unused CH slots are exactly 0.

CH slots are ordered by ascending node id, which fixes label semantics across rows.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.domain.errors import EmptyNetworkError, MissingArtifactError, SchemaError
from src.domain.models import (
    ClusteringSolution,
    MilpWeights,
    MlpSpec,
    NetworkConfig,
    NetworkState,
    RadioParams,
    StopRule,
    TrainConfig,
)
from src.services.clustering_opt import cluster_count, objective, optimal_assignment
from src.services.net_model import potential_heads
from src.services.nn_core import Mlp
from src.services.protocol_milp import MilpProtocol
from src.services.radio_energy import ch_tx_energy, rx_energy, tx_energy
from src.services.sim_engine import run_simulation
from src.utils.rng import stream
from sb_utils.file_utils import content_digest, write_csv, write_json
from sb_utils.logger_utils import logger

DATASET_SCHEMA = "wsn-rlc-surrogate-dataset"
DATASET_SCHEMA_VERSION = 1
WEIGHT_SCALE = 100.0


# ----------------------------------------------------------------------
# feature rows
# ----------------------------------------------------------------------
def ch_feature_dim(n_nodes: int) -> int:
    return 4 * n_nodes + 5


def assign_feature_dim(n_nodes: int, ch_max: int) -> int:
    return 4 + n_nodes + ch_max + n_nodes * ch_max + ch_max


def _energy_ref(p: RadioParams) -> float:
    return float(tx_energy(p, p.b_data, p.d0))


def _common_prefix(s: NetworkState, w: MilpWeights) -> List[np.ndarray]:
    cfg = s.cfg
    energies = np.clip(s.energy, 0.0, None) / cfg.e0
    return [
        np.array([w.alpha, w.beta, w.gamma]) / WEIGHT_SCALE,
        np.array([s.e_net / (s.n_nodes * cfg.e0)]),
        energies,
    ]


def ch_features(s: NetworkState, p: RadioParams, w: MilpWeights) -> np.ndarray:
    """Weights, E_net, energies, candidate flags, expected CH tx/rx energies, expected CH count."""
    n = s.n_nodes
    ref = _energy_ref(p)
    flags = np.zeros(n)
    heads = sorted(potential_heads(s))
    idx = np.array(heads, dtype=np.int64) - 1
    flags[idx] = 1.0
    k_hat = cluster_count(s.cfg.k_fraction, s.alive_count)

    tx = np.zeros(n)
    rx = np.zeros(n)
    if idx.size:
        tx[idx] = ch_tx_energy(p, p.b_data, s.dist_bs[idx]) / ref
        # expected members per cluster, excluding the CH itself
        members = max(s.alive_count / k_hat - 1.0, 0.0)
        rx[idx] = rx_energy(p, p.b_data) * members / ref
    return np.concatenate(
        _common_prefix(s, w) + [flags, tx, rx, np.array([k_hat / s.cfg.ch_max])]
    )


def assign_features(
    s: NetworkState, p: RadioParams, w: MilpWeights, chs: Sequence[int]
) -> np.ndarray:
    """Weights, E_net, energies, CH-to-BS energies, node-to-CH energies and CH ids, zero-padded to CH_max."""
    n = s.n_nodes
    ch_max = s.cfg.ch_max
    heads = sorted(chs)
    if len(heads) > ch_max:
        raise SchemaError(f"{len(heads)} cluster heads exceed CH_max = {ch_max}")
    ref = _energy_ref(p)
    head_idx = np.array(heads, dtype=np.int64) - 1

    sink = np.zeros(ch_max)
    pair = np.zeros((n, ch_max))
    ids = np.zeros(ch_max)
    if head_idx.size:
        sink[: head_idx.size] = ch_tx_energy(p, p.b_data, s.dist_bs[head_idx]) / ref
        alive = np.flatnonzero(s.alive)
        pair[np.ix_(alive, np.arange(head_idx.size))] = (
            tx_energy(p, p.b_data, s.dist[np.ix_(alive, head_idx)]) / ref
        )
        ids[: head_idx.size] = (head_idx + 1) / n
    return np.concatenate(_common_prefix(s, w) + [sink, pair.reshape(-1), ids])


def ch_label(sol: ClusteringSolution, n_nodes: int) -> np.ndarray:
    y = np.zeros(n_nodes)
    y[np.array(sol.chs, dtype=np.int64) - 1] = 1.0
    return y


def assign_label(sol: ClusteringSolution, n_nodes: int, ch_max: int) -> np.ndarray:
    """One-hot CH slot per alive node; dead nodes get an all-zero row."""
    y = np.zeros((n_nodes, ch_max))
    slots = {ch: sol.slot_of(ch) for ch in sol.chs}
    for node, ch in sol.assignment.items():
        y[node - 1, slots[ch]] = 1.0
    return y.reshape(-1)


# ----------------------------------------------------------------------
# dataset
# ----------------------------------------------------------------------
class DatasetScenario(BaseModel):
    """One deployment family: every (weights, seed) pair is simulated to FND."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    network: NetworkConfig = Field(default_factory=NetworkConfig)
    weights: List[MilpWeights] = Field(default_factory=lambda: [MilpWeights()])
    seeds: List[int] = Field(default_factory=lambda: [0])
    max_rounds: int = Field(100_000, ge=1)


@dataclass
class SolutionDataset:
    n_nodes: int
    ch_max: int
    seeds: np.ndarray
    ch_X: np.ndarray
    ch_Y: np.ndarray
    assign_X: np.ndarray
    assign_Y: np.ndarray
    duplicates_dropped: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return int(self.seeds.shape[0])

    def subset(self, idx: np.ndarray) -> "SolutionDataset":
        return SolutionDataset(
            self.n_nodes, self.ch_max, self.seeds[idx],
            self.ch_X[idx], self.ch_Y[idx], self.assign_X[idx], self.assign_Y[idx],
        )

    def split(self, seed: int = 0, test_fraction: float = 0.2) -> Tuple["SolutionDataset", "SolutionDataset"]:
        """Disjoint train/test split, drawn separately inside every seed group."""
        train, test = [], []
        for group in np.unique(self.seeds):
            rows = np.flatnonzero(self.seeds == group)
            rows = stream(seed, f"dataset-split-{int(group)}").permutation(rows)
            n_test = int(round(test_fraction * rows.size))
            test.extend(rows[:n_test].tolist())
            train.extend(rows[n_test:].tolist())
        return self.subset(np.sort(np.array(train, dtype=np.int64))), self.subset(
            np.sort(np.array(test, dtype=np.int64))
        )

    def columns(self) -> List[str]:
        n, c = self.n_nodes, self.ch_max
        return (
            ["seed"]
            + [f"ch_x{i}" for i in range(ch_feature_dim(n))]
            + [f"ch_y{i}" for i in range(1, n + 1)]
            + [f"as_x{i}" for i in range(assign_feature_dim(n, c))]
            + [f"as_y{i}_{slot}" for i in range(1, n + 1) for slot in range(c)]
        )


def _collect(job: Tuple[NetworkConfig, RadioParams, MilpWeights, int]):
    """Simulate one (network, weights, seed) to FND, logging a labelled row per round."""
    cfg, p, w, max_rounds = job
    rows = []

    class _Recording(MilpProtocol):
        def decide(self, state):
            sol = super().decide(state)
            rows.append(
                (
                    ch_features(state, p, w),
                    ch_label(sol, state.n_nodes),
                    assign_features(state, p, w, sol.chs),
                    assign_label(sol, state.n_nodes, state.cfg.ch_max),
                )
            )
            return sol

    run_simulation(cfg, _Recording(p, w), p, StopRule.fnd(max_rounds))
    return cfg.seed, rows


def build_dataset(
    scenarios: Sequence[DatasetScenario], p: RadioParams, workers: int = 1
) -> SolutionDataset:
    """Solver-labelled rows for every scenario; duplicate rows are dropped by content digest."""
    jobs = [
        (sc.network.model_copy(update={"seed": seed}), p, w, sc.max_rounds)
        for sc in scenarios
        for w in sc.weights
        for seed in sc.seeds
    ]
    if not jobs:
        raise ValueError("build_dataset needs at least one scenario with seeds")
    n_set = {job[0].n_nodes for job in jobs}
    ch_set = {job[0].ch_max for job in jobs}
    if len(n_set) != 1 or len(ch_set) != 1:
        raise SchemaError("all scenarios of a dataset must share n_nodes and CH_max")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_collect, jobs))
    else:
        results = [_collect(job) for job in jobs]

    seen = set()
    seeds, cx, cy, ax, ay = [], [], [], [], []
    dropped = 0
    for seed, rows in results:
        for row in rows:
            digest = content_digest(np.concatenate(row))
            if digest in seen:
                dropped += 1
                continue
            seen.add(digest)
            seeds.append(seed)
            cx.append(row[0]); cy.append(row[1]); ax.append(row[2]); ay.append(row[3])
    if dropped:
        logger.warning(
            "Dropped duplicate dataset rows",
            extra={"component": "surrogate", "duplicates": dropped},
        )

    n, c = n_set.pop(), ch_set.pop()
    ds = SolutionDataset(
        n_nodes=n,
        ch_max=c,
        seeds=np.array(seeds, dtype=np.int64),
        ch_X=np.array(cx).reshape(-1, ch_feature_dim(n)),
        ch_Y=np.array(cy).reshape(-1, n),
        assign_X=np.array(ax).reshape(-1, assign_feature_dim(n, c)),
        assign_Y=np.array(ay).reshape(-1, n * c),
        duplicates_dropped=dropped,
    )
    logger.info(
        "Dataset built",
        extra={"component": "surrogate", "rows": len(ds), "jobs": len(jobs)},
    )
    return ds


def dataset_schema(ds: SolutionDataset) -> dict:
    return {
        "schema": DATASET_SCHEMA,
        "version": DATASET_SCHEMA_VERSION,
        "n_nodes": ds.n_nodes,
        "ch_max": ds.ch_max,
        "ch_feature_dim": ch_feature_dim(ds.n_nodes),
        "assign_feature_dim": assign_feature_dim(ds.n_nodes, ds.ch_max),
        "columns": ds.columns(),
    }


def _schema_path(path: Path) -> Path:
    return path.with_name(path.stem + ".schema.json")


def save_dataset(ds: SolutionDataset, path: Path) -> Path:
    """CSV (one row per labelled round) plus a JSON schema sidecar."""
    path = Path(path)
    rows = (
        [int(ds.seeds[i])]
        + ds.ch_X[i].tolist()
        + ds.ch_Y[i].astype(int).tolist()
        + ds.assign_X[i].tolist()
        + ds.assign_Y[i].astype(int).tolist()
        for i in range(len(ds))
    )
    write_csv(path, ds.columns(), rows)
    write_json(_schema_path(path), dataset_schema(ds))
    return path


def load_dataset(path: Path) -> SolutionDataset:
    path = Path(path)
    sidecar = _schema_path(path)
    if not path.exists() or not sidecar.exists():
        raise MissingArtifactError(f"dataset or schema sidecar missing: {path}")
    schema = json.loads(sidecar.read_text(encoding="utf-8"))
    if schema.get("schema") != DATASET_SCHEMA or schema.get("version") != DATASET_SCHEMA_VERSION:
        raise SchemaError(f"{sidecar}: unsupported dataset schema")
    n, c = int(schema["n_nodes"]), int(schema["ch_max"])
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    if header != schema["columns"]:
        raise SchemaError(f"{path}: header does not match schema sidecar")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = np.zeros((0, len(header)))
    bounds = np.cumsum([1, ch_feature_dim(n), n, assign_feature_dim(n, c), n * c])
    seeds, cx, cy, ax, ay = np.split(data, bounds[:-1], axis=1)
    return SolutionDataset(
        n_nodes=n, ch_max=c, seeds=seeds[:, 0].astype(np.int64),
        ch_X=cx, ch_Y=cy, assign_X=ax, assign_Y=ay,
    )


# ----------------------------------------------------------------------
# training
# ----------------------------------------------------------------------
class SurrogateProfile(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(200, ge=0)
    hidden: int = Field(256, ge=1)
    ch_learning_rate: float = Field(1e-3, gt=0)
    assign_learning_rate: float = Field(1e-3, gt=0)
    batch_size: int = Field(16, ge=1)
    dropout_rate: float = Field(0.2, ge=0, lt=1)
    log_every: int = Field(10, ge=1)


PROFILES: Dict[str, SurrogateProfile] = {
    "desk": SurrogateProfile(),
    "full": SurrogateProfile(
        epochs=1000, hidden=2000, ch_learning_rate=1e-4, assign_learning_rate=1e-6
    ),
}


def _require_rows(ds: SolutionDataset) -> None:
    if len(ds) == 0:
        raise ValueError("cannot train a surrogate on an empty dataset")


def train_ch_predictor(ds: SolutionDataset, profile: SurrogateProfile = PROFILES["desk"], seed: int = 0) -> Mlp:
    _require_rows(ds)
    net = Mlp(
        MlpSpec(
            layer_sizes=[ch_feature_dim(ds.n_nodes), profile.hidden, ds.n_nodes],
            output_activation="sigmoid",
            dropout_rate=profile.dropout_rate,
        ),
        seed,
    )
    cfg = TrainConfig(
        learning_rate=profile.ch_learning_rate,
        batch_size=profile.batch_size,
        epochs=profile.epochs,
        loss="bce",
        seed=seed,
    )
    net.fit(ds.ch_X, ds.ch_Y, cfg, profile.log_every)
    return net


def train_assign_predictor(ds: SolutionDataset, profile: SurrogateProfile = PROFILES["desk"], seed: int = 0) -> Mlp:
    _require_rows(ds)
    net = Mlp(
        MlpSpec(
            layer_sizes=[assign_feature_dim(ds.n_nodes, ds.ch_max), profile.hidden, ds.n_nodes * ds.ch_max],
            output_activation="softmax-rows",
            row_width=ds.ch_max,
            dropout_rate=profile.dropout_rate,
        ),
        seed + 1,
    )
    cfg = TrainConfig(
        learning_rate=profile.assign_learning_rate,
        batch_size=profile.batch_size,
        epochs=profile.epochs,
        loss="cce",
        seed=seed + 1,
    )
    net.fit(ds.assign_X, ds.assign_Y, cfg, profile.log_every)
    return net


# ----------------------------------------------------------------------
# inference
# ----------------------------------------------------------------------
def predict_solution(
    ch_model: Mlp, assign_model: Mlp, s: NetworkState, p: RadioParams, w: MilpWeights
) -> ClusteringSolution:
    """
    Top-k CH scores among alive potential heads, then per-node argmax slot.
    Predictions pointing at an unused slot fall back to the optimal assignment
    for the chosen CH set; CHs always keep themselves. The objective is exact.
    """
    heads = sorted(potential_heads(s))
    if not heads:
        raise EmptyNetworkError("no potential cluster heads")
    k = cluster_count(s.cfg.k_fraction, s.alive_count)
    k_eff = min(k, len(heads))

    scores = ch_model.forward(ch_features(s, p, w))
    ranked = sorted(heads, key=lambda j: (-float(scores[j - 1]), j))
    chs = tuple(sorted(ranked[:k_eff]))

    probs = assign_model.forward(assign_features(s, p, w, chs)).reshape(s.n_nodes, s.cfg.ch_max)
    fallback = optimal_assignment(s, p, w, chs)
    assignment: Dict[int, int] = {}
    repaired = 0
    for node in s.alive_ids:
        slot = int(np.argmax(probs[node - 1]))
        if node in chs:
            target = node
            repaired += int(slot >= len(chs) or chs[slot] != node)
        elif slot < len(chs):
            target = chs[slot]
        else:
            target = fallback[node]
            repaired += 1
        assignment[node] = target

    if repaired:
        logger.warning(
            "Repaired infeasible surrogate assignments",
            extra={"component": "surrogate", "round": s.round, "repaired": repaired},
        )
    draft = ClusteringSolution(chs=chs, assignment=assignment)
    return ClusteringSolution(
        chs=chs,
        assignment=assignment,
        objective=objective(s, p, w, draft),
        k_requested=k,
        clamped=k > len(heads),
        source="surrogate",
        repaired=repaired,
    )


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------
@dataclass
class SurrogateEvaluation:
    ch_accuracy: float
    assign_accuracy: float
    ch_confusion: np.ndarray  # [[tn, fp], [fn, tp]]
    assign_confusion: np.ndarray  # true slot x predicted slot

    def summary(self) -> dict:
        return {
            "ch_accuracy": self.ch_accuracy,
            "assign_accuracy": self.assign_accuracy,
            "ch_confusion": self.ch_confusion.tolist(),
        }


def ch_confusion(model: Mlp, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    pred = (model.forward(X) >= 0.5).astype(np.int64).reshape(-1)
    true = Y.astype(np.int64).reshape(-1)
    out = np.zeros((2, 2), dtype=np.int64)
    np.add.at(out, (true, pred), 1)
    return out


def assign_confusion(model: Mlp, X: np.ndarray, Y: np.ndarray, ch_max: int) -> np.ndarray:
    """Counts over alive nodes only (rows with a label)."""
    probs = model.forward(X).reshape(-1, ch_max)
    labels = Y.reshape(-1, ch_max)
    has_label = labels.sum(axis=1) > 0
    out = np.zeros((ch_max, ch_max), dtype=np.int64)
    np.add.at(out, (labels[has_label].argmax(axis=1), probs[has_label].argmax(axis=1)), 1)
    return out


def _accuracy(confusion: np.ndarray) -> float:
    total = confusion.sum()
    return float(np.trace(confusion)) / total if total else 0.0


def evaluate_surrogates(ch_model: Mlp, assign_model: Mlp, test: SolutionDataset) -> SurrogateEvaluation:
    """Held-out per-node accuracy and confusion matrices for both predictors."""
    cc = ch_confusion(ch_model, test.ch_X, test.ch_Y)
    ac = assign_confusion(assign_model, test.assign_X, test.assign_Y, test.ch_max)
    result = SurrogateEvaluation(_accuracy(cc), _accuracy(ac), cc, ac)
    logger.info(
        "Surrogate evaluation",
        extra={
            "component": "surrogate",
            "rows": len(test),
            "ch_accuracy": result.ch_accuracy,
            "assign_accuracy": result.assign_accuracy,
        },
    )
    return result


def load_surrogates(directory: Path) -> Tuple[Mlp, Mlp]:
    directory = Path(directory)
    return Mlp.load(directory / "ch_predictor.npz"), Mlp.load(directory / "assign_predictor.npz")


def save_surrogates(ch_model: Mlp, assign_model: Mlp, directory: Path) -> None:
    directory = Path(directory)
    ch_model.save(directory / "ch_predictor.npz")
    assign_model.save(directory / "assign_predictor.npz")
