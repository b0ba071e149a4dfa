from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import List, Optional, TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

if TYPE_CHECKING:
    from .clustering import ClusteringSolution


class Role(IntEnum):
    DIRECT_TO_BS = 0
    MEMBER = 1
    CLUSTER_HEAD = 2


class Action(str, Enum):
    A1 = "a1"  # generate a new clustering solution
    A2 = "a2"  # keep the current one


class NetworkConfig(BaseModel):
    """Deployment parameters (reference scenario defaults)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_nodes: int = Field(100, ge=2)
    side_length: float = Field(100.0, gt=0)
    bs_x: float = 50.0
    bs_y: float = 175.0
    e0: float = Field(0.5, gt=0)
    k_fraction: float = Field(0.05, gt=0, le=1)
    seed: int = Field(0, ge=0, lt=2**64)
    # Sensitivity switch: average energy over all |N| nodes instead of alive nodes.
    mean_over_all_nodes: bool = False

    @model_validator(mode="after")
    def _at_least_one_head(self):
        if self.k_fraction * self.n_nodes < 1:
            raise ValueError("k_fraction * n_nodes must be at least 1")
        return self

    @property
    def ch_max(self) -> int:
        """Largest cluster-head count any re-cluster can request."""
        return max(1, int(np.floor(self.k_fraction * self.n_nodes + 0.5)))


@dataclass
class NetworkState:
    """
    Per-round snapshot. Per-node data lives in arrays indexed by ``id - 1``.
    """
    cfg: NetworkConfig
    x: np.ndarray
    y: np.ndarray
    energy: np.ndarray
    role: np.ndarray
    cluster_head: np.ndarray  # 0 means no cluster head
    ch_selection_count: np.ndarray
    round: int = 0
    rounds_since_recluster: int = 0
    last_action: Optional[Action] = None
    solution: Optional["ClusteringSolution"] = None
    dist: Optional[np.ndarray] = field(default=None, repr=False)
    dist_bs: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.dist is not None and self.dist_bs is not None:
            return
        dx = self.x[:, None] - self.x[None, :]
        dy = self.y[:, None] - self.y[None, :]
        self.dist = np.sqrt(dx * dx + dy * dy)
        self.dist_bs = np.sqrt((self.x - self.cfg.bs_x) ** 2 + (self.y - self.cfg.bs_y) ** 2)

    @property
    def n_nodes(self) -> int:
        return int(self.x.shape[0])

    @property
    def ids(self) -> np.ndarray:
        return np.arange(1, self.n_nodes + 1)

    @property
    def alive(self) -> np.ndarray:
        return self.energy > 0

    @property
    def alive_ids(self) -> List[int]:
        return [int(i) + 1 for i in np.flatnonzero(self.alive)]

    @property
    def alive_count(self) -> int:
        return int(np.count_nonzero(self.alive))

    @property
    def e_net(self) -> float:
        return float(self.energy[self.alive].sum())

    def distance(self, a: int, b: int) -> float:
        return float(self.dist[a - 1, b - 1])

    def distance_to_bs(self, node_id: int) -> float:
        return float(self.dist_bs[node_id - 1])

    def copy(self) -> "NetworkState":
        clone = NetworkState(
            cfg=self.cfg,
            x=self.x.copy(),
            y=self.y.copy(),
            energy=self.energy.copy(),
            role=self.role.copy(),
            cluster_head=self.cluster_head.copy(),
            ch_selection_count=self.ch_selection_count.copy(),
            round=self.round,
            rounds_since_recluster=self.rounds_since_recluster,
            last_action=self.last_action,
            solution=self.solution,
            dist=self.dist,
            dist_bs=self.dist_bs,
        )
        return clone
