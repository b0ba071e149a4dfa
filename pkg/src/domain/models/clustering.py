from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

from pydantic import BaseModel, ConfigDict, Field

from src.domain.errors import InfeasibleSolutionError


class MilpWeights(BaseModel):
    """Objective weights; defaults are the tuned optimum used for agent training."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(54.83, ge=0)
    beta: float = Field(14.54, ge=0)
    gamma: float = Field(35.31, ge=0)

    def scaled(self, factor: float) -> "MilpWeights":
        """All three weights times ``factor``; the optimal heads do not move."""
        return MilpWeights(alpha=self.alpha * factor, beta=self.beta * factor, gamma=self.gamma * factor)


@dataclass(frozen=True)
class ClusteringSolution:
    """
    Cluster-head set plus node -> CH assignment.

    ``objective`` is the criterion the producer minimised: the weighted energy
    objective for the exact/surrogate backends, the squared-distance sum for the
    annealing baseline, 0 for distributed self-election.
    """
    chs: Tuple[int, ...]
    assignment: Dict[int, int]
    objective: float = 0.0
    k_requested: int = 0
    clamped: bool = False
    source: str = "exact"
    repaired: int = field(default=0, compare=False)

    def validate(self, alive_ids: Iterable[int]) -> None:
        """Raise if the solution breaks the one-CH-per-node or CH-consistency rules."""
        ch_set = set(self.chs)
        alive = set(alive_ids)
        if not ch_set:
            raise InfeasibleSolutionError("solution has no cluster heads")
        if not ch_set <= alive:
            raise InfeasibleSolutionError(f"dead cluster heads: {sorted(ch_set - alive)}")
        if set(self.assignment) != alive:
            raise InfeasibleSolutionError("assignment must cover every alive node exactly once")
        bad = {i: j for i, j in self.assignment.items() if j not in ch_set}
        if bad:
            raise InfeasibleSolutionError(f"assignment references non cluster heads: {bad}")
        for j in self.chs:
            if self.assignment[j] != j:
                raise InfeasibleSolutionError(f"cluster head {j} must be assigned to itself")

    def slot_of(self, ch: int) -> int:
        """Slot index of a CH (ascending node id order)."""
        return sorted(self.chs).index(ch)

    def to_dict(self) -> dict:
        return {
            "chs": list(self.chs),
            "assignment": {str(i): j for i, j in sorted(self.assignment.items())},
            "objective": self.objective,
            "k_requested": self.k_requested,
            "clamped": self.clamped,
        }
