"""Centralized LEACH-C baseline: simulated annealing on within-cluster squared distances."""
from __future__ import annotations

import math
from typing import Iterable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.domain.errors import InfeasibleSolutionError
from src.domain.models import ClusteringSolution, NetworkState
from src.domain.protocols import IClusteringProtocol
from src.services.clustering_opt import cluster_count
from src.services.net_model import potential_heads
from src.services.protocol_leach import leach_assign
from src.utils.rng import stream
from sb_utils.logger_utils import logger


class AnnealSchedule(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    iterations: int = Field(1000, ge=0)
    initial_temperature_fraction: float = Field(0.1, gt=0)
    cooling: float = Field(0.99, gt=0, le=1)


def _ssd_indices(d2: np.ndarray, head_idx: np.ndarray, alive_idx: np.ndarray) -> float:
    # CH rows contribute zero on their own column, so summing over all alive nodes is exact.
    return float(d2[np.ix_(head_idx, alive_idx)].min(axis=0).sum())


def ssd(s: NetworkState, chs: Iterable[int]) -> float:
    heads = sorted(chs)
    if not heads:
        raise InfeasibleSolutionError("ssd needs at least one cluster head")
    alive_idx = np.flatnonzero(s.alive)
    return _ssd_indices(s.dist ** 2, np.array(heads) - 1, alive_idx)


def leach_c_cluster(
    s: NetworkState,
    k: int,
    rng: np.random.Generator,
    schedule: AnnealSchedule = AnnealSchedule(),
    trace: Optional[List[float]] = None,
) -> ClusteringSolution:
    """
    Anneal over k-subsets of the potential heads. A move swaps one CH for one
    non-CH candidate; worse moves pass with probability exp(-delta/T).
    ``trace`` (if given) receives the best-seen SSD after every iteration.
    """
    candidates = sorted(potential_heads(s))
    if not candidates:
        raise InfeasibleSolutionError("no potential cluster heads")
    k_req = k
    k = min(max(k, 1), len(candidates))
    alive_idx = np.flatnonzero(s.alive)
    d2 = s.dist ** 2
    cand = np.array(candidates) - 1

    if k == len(candidates):
        best = list(range(len(candidates)))
        best_cost = _ssd_indices(d2, cand[best], alive_idx)
    else:
        current = sorted(rng.choice(len(candidates), size=k, replace=False).tolist())
        cost = _ssd_indices(d2, cand[current], alive_idx)
        best, best_cost = list(current), cost
        temperature = cost * schedule.initial_temperature_fraction
        for _ in range(schedule.iterations):
            outside = [c for c in range(len(candidates)) if c not in current]
            out_slot = int(rng.integers(k))
            incoming = outside[int(rng.integers(len(outside)))]
            proposal = sorted(current[:out_slot] + current[out_slot + 1:] + [incoming])
            new_cost = _ssd_indices(d2, cand[proposal], alive_idx)
            delta = new_cost - cost
            u = rng.random()
            if delta <= 0 or (temperature > 0 and u < math.exp(-delta / temperature)):
                current, cost = proposal, new_cost
                if cost < best_cost:
                    best, best_cost = list(current), cost
            temperature *= schedule.cooling
            if trace is not None:
                trace.append(best_cost)

    chs = [candidates[c] for c in sorted(best)]
    return ClusteringSolution(
        chs=tuple(chs),
        assignment=leach_assign(s, chs),
        objective=best_cost,
        k_requested=k_req,
        clamped=k_req > len(candidates),
        source="leach-c",
    )


class LeachCProtocol(IClusteringProtocol):
    """Re-clusters every round, so it pays control cost every round."""
    name = "leach-c"
    centralized = True

    def __init__(self, schedule: AnnealSchedule = AnnealSchedule()):
        self.schedule = schedule
        self._rng: Optional[np.random.Generator] = None

    def reset(self, state: NetworkState) -> None:
        self._rng = stream(state.cfg.seed, "leach-c-anneal")

    def decide(self, state: NetworkState) -> ClusteringSolution:
        k = cluster_count(state.cfg.k_fraction, state.alive_count)
        sol = leach_c_cluster(state, k, self._rng, self.schedule)
        if sol.clamped:
            logger.debug(
                "LEACH-C clamped cluster count",
                extra={"component": "leach_c", "round": state.round, "k": k, "chs": len(sol.chs)},
            )
        return sol
