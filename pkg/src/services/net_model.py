from __future__ import annotations

import csv
from pathlib import Path
from typing import Set, Tuple

import numpy as np

from src.domain.errors import TopologyMismatchError
from src.domain.models import NetworkConfig, NetworkState, Role
from src.utils.rng import stream
from sb_utils.file_utils import write_text_atomic
from sb_utils.logger_utils import logger

TOPOLOGY_HEADER = ("id", "x", "y")


def generate_topology(cfg: NetworkConfig) -> NetworkState:
    """Uniform deployment in [0, L]^2, every node at E0, round 0."""
    rng = stream(cfg.seed, "topology")
    xy = rng.uniform(0.0, cfg.side_length, size=(cfg.n_nodes, 2))
    state = _fresh_state(cfg, xy[:, 0].copy(), xy[:, 1].copy())
    logger.debug(
        "Generated topology",
        extra={"component": "net_model", "n_nodes": cfg.n_nodes, "seed": cfg.seed},
    )
    return state


def _fresh_state(cfg: NetworkConfig, x: np.ndarray, y: np.ndarray) -> NetworkState:
    n = x.shape[0]
    return NetworkState(
        cfg=cfg,
        x=x.astype(float),
        y=y.astype(float),
        energy=np.full(n, cfg.e0, dtype=float),
        role=np.full(n, int(Role.DIRECT_TO_BS), dtype=np.int8),
        cluster_head=np.zeros(n, dtype=np.int64),
        ch_selection_count=np.zeros(n, dtype=np.int64),
    )


def reset_energies(state: NetworkState) -> NetworkState:
    """Same geometry, fresh batteries and no clustering (episode start)."""
    fresh = _fresh_state(state.cfg, state.x, state.y)
    fresh.dist, fresh.dist_bs = state.dist, state.dist_bs
    return fresh


def potential_heads(s: NetworkState) -> Set[int]:
    """Alive nodes whose residual energy is at least the mean (alive-only by default)."""
    alive = s.alive
    if not alive.any():
        return set()
    if s.cfg.mean_over_all_nodes:
        e_bar = float(np.clip(s.energy, 0.0, None).sum()) / s.n_nodes
    else:
        e_bar = float(s.energy[alive].mean())
    mask = alive & (s.energy >= e_bar)
    return {int(i) + 1 for i in np.flatnonzero(mask)}


def network_stats(s: NetworkState, prev: NetworkState) -> Tuple[float, float, float, int]:
    """(E_net, mean alive energy, mean dissipation over |N| since prev, alive count)."""
    if s.n_nodes != prev.n_nodes or not (
        np.array_equal(s.x, prev.x) and np.array_equal(s.y, prev.y)
    ):
        raise TopologyMismatchError("network_stats needs two states of the same deployment")
    alive = s.alive
    e_net = float(s.energy[alive].sum())
    e_bar = float(s.energy[alive].mean()) if alive.any() else 0.0
    e_bar_d = float((prev.energy - s.energy).sum()) / s.n_nodes
    return e_net, e_bar, e_bar_d, int(alive.sum())


def topology_csv(s: NetworkState) -> str:
    lines = [",".join(TOPOLOGY_HEADER)]
    for idx in range(s.n_nodes):
        lines.append(f"{idx + 1},{s.x[idx]:.6f},{s.y[idx]:.6f}")
    return "\n".join(lines) + "\n"


def dump_topology(s: NetworkState, path: Path) -> Path:
    return write_text_atomic(Path(path), topology_csv(s))


def load_topology(path: Path, cfg: NetworkConfig) -> NetworkState:
    """
    Load ``id,x,y`` rows; ids must be exactly 1..N. ``cfg.n_nodes`` is overridden.
    An optional trailing ``energy`` column sets residual energies (state files).
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = tuple(reader.fieldnames or ())
        if header not in (TOPOLOGY_HEADER, TOPOLOGY_HEADER + ("energy",)):
            raise TopologyMismatchError(f"{path}: expected header {','.join(TOPOLOGY_HEADER)}[,energy]")
        rows = sorted(
            (int(r["id"]), float(r["x"]), float(r["y"]), float(r.get("energy") or cfg.e0))
            for r in reader
        )
    ids = [r[0] for r in rows]
    if ids != list(range(1, len(rows) + 1)):
        raise TopologyMismatchError(f"{path}: node ids must be 1..N without gaps")
    cfg = cfg.model_copy(update={"n_nodes": len(rows)})
    x = np.array([r[1] for r in rows])
    y = np.array([r[2] for r in rows])
    state = _fresh_state(cfg, x, y)
    state.energy[:] = np.clip([r[3] for r in rows], 0.0, None)
    return state
