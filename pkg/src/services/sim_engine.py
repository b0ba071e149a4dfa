"""
Round-based simulator: clustering phase, steady-state data phase, depletion
handling and metric collection.
"""
from __future__ import annotations

import math
from collections import Counter
from typing import Optional, Tuple

import numpy as np

from src.domain.models import (
    ClusteringSolution,
    NetworkConfig,
    NetworkState,
    RadioParams,
    Role,
    RoundMetrics,
    SimResult,
    StopRule,
)
from src.domain.protocols import IClusteringProtocol
from src.services.net_model import generate_topology
from src.services.radio_energy import ch_tx_energy, control_rx_energy, rx_energy, tx_energy
from sb_utils.logger_utils import logger


class _Ledger:
    """Applies charges under the depletion rule and keeps the running total."""

    def __init__(self, energy: np.ndarray):
        self.energy = energy
        self.charged = 0.0

    def charge(self, idx: int, cost: float) -> bool:
        """
        Deduct ``cost`` from node ``idx``. Returns True if the action completed.
        A node that reaches zero dies and the action fails; residual energy is
        clamped at zero.
        """
        e = self.energy[idx]
        if e <= 0:
            return False
        deducted = cost if cost < e else e
        left = e - deducted
        self.charged += deducted
        if left <= 0:
            self.energy[idx] = 0.0
            return False
        self.energy[idx] = left
        return True


def apply_solution(s: NetworkState, sol: ClusteringSolution) -> None:
    """Install roles and CH pointers for every alive node."""
    s.role[:] = int(Role.DIRECT_TO_BS)
    s.cluster_head[:] = 0
    for i, j in sol.assignment.items():
        if i == j:
            continue
        s.role[i - 1] = int(Role.MEMBER)
        s.cluster_head[i - 1] = j
    for j in sol.chs:
        s.role[j - 1] = int(Role.CLUSTER_HEAD)
        s.cluster_head[j - 1] = j
        s.ch_selection_count[j - 1] += 1
    s.solution = sol


def _refresh_roles(s: NetworkState) -> None:
    """Members of a dead CH fall back to direct transmission; dead nodes lose their role."""
    alive = s.alive
    dead_idx = np.flatnonzero(~alive)
    s.role[dead_idx] = int(Role.DIRECT_TO_BS)
    s.cluster_head[dead_idx] = 0
    members = np.flatnonzero(alive & (s.role == int(Role.MEMBER)))
    for idx in members:
        if not alive[s.cluster_head[idx] - 1]:
            s.role[idx] = int(Role.DIRECT_TO_BS)
            s.cluster_head[idx] = 0


def _charge_control(s: NetworkState, p: RadioParams, ledger: _Ledger) -> int:
    """
    Re-cluster signalling of a centralized protocol: each alive node reports its
    status and receives its assignment. Returns the number of control packets.
    """
    ctrl_rx = control_rx_energy(p)
    alive_idx = np.flatnonzero(s.alive)
    for idx in alive_idx:
        if p.control_uplink == "direct" and not ledger.charge(idx, tx_energy(p, p.b_ctrl, float(s.dist_bs[idx]))):
            continue
        ledger.charge(idx, ctrl_rx)
    return 2 * int(alive_idx.size)


def _terminal_row(s: NetworkState) -> RoundMetrics:
    return RoundMetrics(
        round=s.round,
        alive=0,
        e_net=0.0,
        e_dissipated_avg=0.0,
        data_sent=0,
        data_delivered=0,
        control_packets=0,
        reclustered=False,
        ch_count=0,
    )


def run_round(
    s: NetworkState, protocol: IClusteringProtocol, p: RadioParams
) -> Tuple[NetworkState, RoundMetrics]:
    """Advance ``s`` by one round in place and return it with the round's metrics."""
    if s.alive_count == 0:
        return s, _terminal_row(s)

    prev_energy = s.energy.copy()
    ledger = _Ledger(s.energy)
    control_packets = 0

    # (1) clustering phase
    sol = protocol.decide(s)
    reclustered = sol is not None
    if reclustered:
        apply_solution(s, sol)
        s.rounds_since_recluster = 0
        if protocol.centralized:
            control_packets = _charge_control(s, p, ledger)
    else:
        s.rounds_since_recluster += 1
    _refresh_roles(s)

    # (2) steady state: non-CH nodes first, then cluster heads, ascending id
    alive = s.alive
    ch_idx = np.flatnonzero(alive & (s.role == int(Role.CLUSTER_HEAD)))
    others = np.flatnonzero(alive & (s.role != int(Role.CLUSTER_HEAD)))
    data_sent = int(alive.sum())
    delivered = 0
    buffered = {int(j): 0 for j in ch_idx}
    rx_cost = rx_energy(p, p.b_data)

    for idx in others:
        if s.role[idx] == int(Role.MEMBER):
            j = int(s.cluster_head[idx]) - 1
            if not ledger.charge(idx, tx_energy(p, p.b_data, float(s.dist[idx, j]))):
                continue
            if s.energy[j] <= 0:
                continue
            if ledger.charge(j, rx_cost):
                buffered[j] += 1
        elif ledger.charge(idx, tx_energy(p, p.b_data, float(s.dist_bs[idx]))):
            delivered += 1

    for j in ch_idx:
        if s.energy[j] <= 0:
            continue
        if ledger.charge(j, ch_tx_energy(p, p.b_data, float(s.dist_bs[j]))):
            delivered += 1 + buffered[int(j)]

    # (3) deaths already recorded by the ledger; drop roles of the newly dead
    _refresh_roles(s)
    s.round += 1

    metrics = RoundMetrics(
        round=s.round,
        alive=s.alive_count,
        e_net=s.e_net,
        e_dissipated_avg=float((prev_energy - s.energy).sum()) / s.n_nodes,
        data_sent=data_sent,
        data_delivered=delivered,
        control_packets=control_packets,
        reclustered=reclustered,
        ch_count=int(ch_idx.size),
        energy_charged=float(ledger.charged),
    )
    logger.debug(
        "Round complete",
        extra={"component": "sim_engine", "round": metrics.round, "alive": metrics.alive},
    )
    return s, metrics


def run_simulation(
    cfg: NetworkConfig,
    protocol: IClusteringProtocol,
    p: RadioParams,
    stop: StopRule = StopRule(),
    state: Optional[NetworkState] = None,
) -> SimResult:
    """Iterate run_round until the stop rule fires; fills FND/HND/LND."""
    s = state if state is not None else generate_topology(cfg)
    protocol.reset(s)
    n = s.n_nodes
    half = math.ceil(n / 2)
    result = SimResult(protocol=protocol.name, seed=cfg.seed, n_nodes=n)

    while len(result.per_round) < stop.max_rounds and s.alive_count > 0:
        s, m = run_round(s, protocol, p)
        result.per_round.append(m)
        if result.fnd is None and m.alive < n:
            result.fnd = m.round
        if result.hnd is None and m.alive <= half:
            result.hnd = m.round
        if result.lnd is None and m.alive == 0:
            result.lnd = m.round
        if stop.kind == "fnd" and result.fnd is not None:
            break

    sent = sum(m.data_sent for m in result.per_round)
    delivered = sum(m.data_delivered for m in result.per_round)
    result.pdr = delivered / sent if sent else 0.0
    result.total_control_packets = sum(m.control_packets for m in result.per_round)
    result.ch_count_histogram = dict(sorted(Counter(m.ch_count for m in result.per_round).items()))
    result.ch_selection_count = [int(c) for c in s.ch_selection_count]

    logger.info(
        "Simulation finished",
        extra={
            "component": "sim_engine",
            "protocol": protocol.name,
            "seed": cfg.seed,
            "rounds": result.rounds,
            "fnd": result.fnd,
            "hnd": result.hnd,
            "lnd": result.lnd,
            "control_packets": result.total_control_packets,
        },
    )
    return result
