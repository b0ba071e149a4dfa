"""Distributed LEACH baseline: threshold self-election and nearest-CH joining."""
from __future__ import annotations

import math
from typing import Dict, Iterable, Optional, Set

import numpy as np

from src.domain.models import ClusteringSolution, NetworkState
from src.domain.protocols import IClusteringProtocol
from src.utils.rng import stream


def epoch_length(p_frac: float) -> int:
    return math.ceil(1.0 / p_frac)


def leach_threshold(p_frac: float, r: int) -> float:
    """T(n) for a node still eligible in the current epoch."""
    period = epoch_length(p_frac)
    phase = r % period
    if phase == period - 1:
        return 1.0
    return min(1.0, p_frac / (1.0 - p_frac * phase))


def leach_elect(
    s: NetworkState, p_frac: float, rng: np.random.Generator, eligible: Optional[np.ndarray] = None
) -> Set[int]:
    """
    One uniform draw per node (alive or not, so the stream advances identically
    every round); alive eligible nodes with u < T(n) become cluster heads.
    """
    if not 0 < p_frac < 1:
        raise ValueError("p_frac must be in (0, 1)")
    if eligible is None:
        eligible = np.ones(s.n_nodes, dtype=bool)
    u = rng.random(s.n_nodes)
    mask = s.alive & eligible & (u < leach_threshold(p_frac, s.round))
    return {int(i) + 1 for i in np.flatnonzero(mask)}


def leach_assign(s: NetworkState, chs: Iterable[int]) -> Dict[int, int]:
    """Nearest alive CH per alive node; equidistant ties go to the lower CH id."""
    heads = sorted(j for j in chs if s.energy[j - 1] > 0)
    if not heads:
        return {}
    head_idx = np.array(heads) - 1
    assignment = {j: j for j in heads}
    alive_idx = np.flatnonzero(s.alive)
    nearest = np.argmin(s.dist[np.ix_(head_idx, alive_idx)], axis=0)
    for idx, slot in zip(alive_idx, nearest):
        node = int(idx) + 1
        if node not in assignment:
            assignment[node] = heads[int(slot)]
    return assignment


class LeachProtocol(IClusteringProtocol):
    name = "leach"
    centralized = False

    def __init__(self, p_frac: Optional[float] = None):
        self.p_frac = p_frac
        self._rng: Optional[np.random.Generator] = None
        self._eligible: Optional[np.ndarray] = None

    def reset(self, state: NetworkState) -> None:
        if self.p_frac is None:
            self.p_frac = state.cfg.k_fraction
        self._rng = stream(state.cfg.seed, "leach-election")
        self._eligible = np.ones(state.n_nodes, dtype=bool)

    def decide(self, state: NetworkState) -> ClusteringSolution:
        if state.round % epoch_length(self.p_frac) == 0:
            self._eligible[:] = True
        chs = leach_elect(state, self.p_frac, self._rng, self._eligible)
        for j in chs:
            self._eligible[j - 1] = False
        assignment = leach_assign(state, chs)
        return ClusteringSolution(
            chs=tuple(sorted(chs)),
            assignment=assignment,
            objective=0.0,
            k_requested=len(chs),
            source="leach",
        )
