"""
Derived series for the run and comparison reports: the per-round decision log,
its state/action correlation matrix, windowed re-cluster frequency and PDR
spread across seeds.

Everything here is computed from ``SimResult.per_round``. A round's action is
a1 exactly when it re-clustered, and the state the decision saw is the state
left by the previous round.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.domain.models import Action, SimResult

CORRELATION_LABELS = (
    "action_a1",
    "rounds_since_recluster",
    "alive",
    "e_net_j",
    "e_dissipated_avg_j",
    "ch_count",
)


@dataclass(frozen=True)
class DecisionRow:
    protocol: str
    seed: int
    round: int
    action: Action
    rounds_since_recluster: int  # CH_tau observed before deciding
    alive_before: int
    e_net_before: float
    e_dissipated_avg: float
    ch_count: int

    def as_row(self) -> list:
        return [
            self.protocol,
            self.seed,
            self.round,
            self.action.value,
            self.rounds_since_recluster,
            self.alive_before,
            self.e_net_before,
            self.e_dissipated_avg,
            self.ch_count,
        ]


def action_log(result: SimResult) -> List[DecisionRow]:
    rows: List[DecisionRow] = []
    tau = 0
    alive_before = result.n_nodes
    for m in result.per_round:
        action = Action.A1 if m.reclustered else Action.A2
        rows.append(
            DecisionRow(
                protocol=result.protocol,
                seed=result.seed,
                round=m.round,
                action=action,
                rounds_since_recluster=tau,
                alive_before=alive_before,
                # depleted nodes are charged their full residual, so nothing leaks
                e_net_before=float(m.e_net + m.energy_charged),
                e_dissipated_avg=m.e_dissipated_avg,
                ch_count=m.ch_count,
            )
        )
        tau = 0 if m.reclustered else tau + 1
        alive_before = m.alive
    return rows


def state_action_correlation(rows: Sequence[DecisionRow]) -> np.ndarray:
    """
    Pearson correlation between the action and the observed state variables,
    ordered as ``CORRELATION_LABELS``. Constant columns (for example the action
    of a protocol that re-clusters every round) give NaN entries.
    """
    n = len(CORRELATION_LABELS)
    if len(rows) < 2:
        return np.full((n, n), np.nan)
    data = np.array(
        [
            [
                1.0 if r.action is Action.A1 else 0.0,
                r.rounds_since_recluster,
                r.alive_before,
                r.e_net_before,
                r.e_dissipated_avg,
                r.ch_count,
            ]
            for r in rows
        ],
        dtype=float,
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.atleast_2d(np.corrcoef(data, rowvar=False))


@dataclass(frozen=True)
class FrequencyWindow:
    protocol: str
    seed: int
    window_end: int
    reclusters: int
    frequency: float
    energy: float  # joules dissipated network-wide inside the window

    def as_row(self) -> list:
        return [self.protocol, self.seed, self.window_end, self.reclusters, self.frequency, self.energy]


def recluster_frequency(result: SimResult, window: int) -> List[FrequencyWindow]:
    """Fraction of rounds that installed new cluster heads, per block of ``window`` rounds."""
    if window < 1:
        raise ValueError("window must be at least one round")
    out = []
    per_round = result.per_round
    for start in range(0, len(per_round), window):
        block = per_round[start:start + window]
        reclusters = sum(1 for m in block if m.reclustered)
        out.append(
            FrequencyWindow(
                protocol=result.protocol,
                seed=result.seed,
                window_end=block[-1].round,
                reclusters=reclusters,
                frequency=reclusters / len(block),
                energy=float(sum(m.energy_charged for m in block)),
            )
        )
    return out


def pdr_spread(results: Dict[str, List[SimResult]]) -> List[Tuple[str, int, float, float, float]]:
    """(protocol, runs, median, min, max) of the packet delivery ratio."""
    rows = []
    for protocol, runs in results.items():
        values = np.array([r.pdr for r in runs], dtype=float)
        rows.append((protocol, len(runs), float(np.median(values)), float(values.min()), float(values.max())))
    return rows
