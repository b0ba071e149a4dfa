from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

ROUNDS_CSV_COLUMNS = [
    "round",
    "alive",
    "e_net_j",
    "e_dissipated_avg_j",
    "data_sent",
    "data_delivered",
    "control_packets",
    "reclustered",
    "ch_count",
]


@dataclass
class RoundMetrics:
    round: int
    alive: int
    e_net: float
    e_dissipated_avg: float
    data_sent: int
    data_delivered: int
    control_packets: int
    reclustered: bool
    ch_count: int
    # Joules actually deducted this round; feeds the conservation check.
    energy_charged: float = 0.0

    def as_row(self) -> list:
        return [
            self.round,
            self.alive,
            self.e_net,
            self.e_dissipated_avg,
            self.data_sent,
            self.data_delivered,
            self.control_packets,
            self.reclustered,
            self.ch_count,
        ]


@dataclass
class SimResult:
    protocol: str
    seed: int
    n_nodes: int
    per_round: List[RoundMetrics] = field(default_factory=list)
    fnd: Optional[int] = None
    hnd: Optional[int] = None
    lnd: Optional[int] = None
    ch_selection_count: List[int] = field(default_factory=list)
    ch_count_histogram: Dict[int, int] = field(default_factory=dict)
    total_control_packets: int = 0
    pdr: float = 0.0

    @property
    def rounds(self) -> int:
        return len(self.per_round)

    @property
    def recluster_count(self) -> int:
        return sum(1 for m in self.per_round if m.reclustered)

    def summary(self) -> dict:
        return {
            "protocol": self.protocol,
            "seed": self.seed,
            "n_nodes": self.n_nodes,
            "rounds": self.rounds,
            "fnd": self.fnd,
            "hnd": self.hnd,
            "lnd": self.lnd,
            "pdr": self.pdr,
            "control_packets": self.total_control_packets,
            "reclusters": self.recluster_count,
            "ch_count_histogram": {str(k): v for k, v in sorted(self.ch_count_histogram.items())},
            "ch_selection_count": list(self.ch_selection_count),
        }


class StopRule(BaseModel):
    """When run_simulation stops. ``max_rounds`` also caps the other rules."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["fnd", "all-dead", "max-rounds"] = "all-dead"
    max_rounds: int = Field(100_000, ge=0)

    @classmethod
    def fnd(cls, cap: int = 100_000) -> "StopRule":
        return cls(kind="fnd", max_rounds=cap)

    @classmethod
    def all_dead(cls, cap: int = 100_000) -> "StopRule":
        return cls(kind="all-dead", max_rounds=cap)

    @classmethod
    def rounds(cls, n: int) -> "StopRule":
        return cls(kind="max-rounds", max_rounds=n)
