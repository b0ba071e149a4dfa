"""
Exact cluster-head selection and assignment.

Choose k cluster heads among the potential heads H and assign every alive node
to one of them, minimising

    alpha * sum_i E_tx(i -> CH(i)) + beta * sum_{j in CH} E_tx^ch(j) + gamma * sum_i E_rx(i)

Structurally this is a k-facility location problem with opening costs. Once the
CH set is fixed the assignment decomposes per node (cheapest transmit energy),
so the search only ranges over CH subsets: ``solve_exact`` is a depth-first
branch-and-bound over those subsets, ``solve_bruteforce`` is the enumeration
oracle it is tested against.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.domain.errors import EmptyNetworkError, InfeasibleSolutionError, SolverLimitError
from src.domain.models import ClusteringSolution, MilpWeights, NetworkState, RadioParams
from src.services.net_model import potential_heads
from src.services.radio_energy import ch_tx_energy, rx_energy, tx_energy
from sb_utils.logger_utils import logger

MAX_BRUTEFORCE_SUBSETS = 10**6

# Relative slack when pruning, so floating-point noise in a bound never discards
# a subset that ties the incumbent exactly.
_PRUNE_RTOL = 1e-9
_PRUNE_ATOL = 1e-15

_SUBGRADIENT_ITERATIONS = 150
_SUBGRADIENT_PATIENCE = 12
_LOCAL_SEARCH_ROUNDS = 50


def cluster_count(k_fraction: float, alive: int) -> int:
    """k = max(1, round(k_fraction * |D|)), halves rounded up."""
    return max(1, int(math.floor(k_fraction * alive + 0.5)))


def _compose(member_sum: float, open_sum: float, rx_total: float, w: MilpWeights) -> float:
    return w.alpha * member_sum + w.beta * open_sum + w.gamma * rx_total


def _rx_total(p: RadioParams, n_assigned: int) -> float:
    return float(np.full(n_assigned, rx_energy(p, p.b_data)).sum())


@dataclass
class _Instance:
    alive_ids: np.ndarray
    cand_ids: np.ndarray  # ascending node ids
    member_cost: np.ndarray  # (|H|, |D|)
    open_cost: np.ndarray  # (|H|,)
    rx_total: float
    w: MilpWeights

    def evaluate(self, positions: Sequence[int]) -> float:
        """Objective of a CH subset given as ascending candidate positions."""
        pos = np.asarray(positions, dtype=np.int64)
        mins = self.member_cost[pos].min(axis=0)
        return _compose(float(mins.sum()), float(self.open_cost[pos].sum()), self.rx_total, self.w)

    def ids_of(self, positions: Iterable[int]) -> Tuple[int, ...]:
        return tuple(int(self.cand_ids[q]) for q in sorted(positions))


def _build_instance(
    s: NetworkState, p: RadioParams, w: MilpWeights, candidates: Optional[Iterable[int]] = None
) -> _Instance:
    alive_idx = np.flatnonzero(s.alive)
    if alive_idx.size == 0:
        raise EmptyNetworkError("no alive nodes to cluster")
    cand = sorted(potential_heads(s) if candidates is None else candidates)
    if not cand:
        raise EmptyNetworkError("no potential cluster heads")
    cand_idx = np.array(cand, dtype=np.int64) - 1
    if not s.alive[cand_idx].all():
        raise InfeasibleSolutionError("candidate cluster heads must be alive")
    return _Instance(
        alive_ids=alive_idx + 1,
        cand_ids=cand_idx + 1,
        member_cost=tx_energy(p, p.b_data, s.dist[np.ix_(cand_idx, alive_idx)]),
        open_cost=ch_tx_energy(p, p.b_data, s.dist_bs[cand_idx]),
        rx_total=_rx_total(p, alive_idx.size),
        w=w,
    )


def objective(s: NetworkState, p: RadioParams, w: MilpWeights, sol: ClusteringSolution) -> float:
    """Weighted energy objective of a complete solution (CHs self-assigned at d = 0)."""
    ch_set = set(sol.chs)
    if not ch_set:
        raise InfeasibleSolutionError("solution has no cluster heads")
    bad = sorted(i for i, j in sol.assignment.items() if j not in ch_set)
    if bad:
        raise InfeasibleSolutionError(f"nodes {bad} are assigned to non cluster heads")
    nodes = sorted(sol.assignment)
    src = np.array(nodes, dtype=np.int64) - 1
    dst = np.array([sol.assignment[i] for i in nodes], dtype=np.int64) - 1
    member = tx_energy(p, p.b_data, s.dist[src, dst])
    heads = np.array(sorted(ch_set), dtype=np.int64) - 1
    opening = ch_tx_energy(p, p.b_data, s.dist_bs[heads])
    return _compose(float(member.sum()), float(opening.sum()), _rx_total(p, len(nodes)), w)


def optimal_assignment(
    s: NetworkState, p: RadioParams, w: MilpWeights, chs: Iterable[int]
) -> Dict[int, int]:
    """
    Best assignment for a fixed CH set. The gamma term does not depend on the
    chosen CH, so each node simply takes its cheapest transmit target; ties go
    to the lower CH id and CHs keep themselves.
    """
    heads = sorted(chs)
    if not heads:
        raise InfeasibleSolutionError("optimal_assignment needs at least one cluster head")
    head_idx = np.array(heads, dtype=np.int64) - 1
    if not s.alive[head_idx].all():
        raise InfeasibleSolutionError("cluster heads must be alive")
    alive_idx = np.flatnonzero(s.alive)
    cost = tx_energy(p, p.b_data, s.dist[np.ix_(head_idx, alive_idx)])
    best = np.argmin(cost, axis=0)
    assignment = {int(idx) + 1: heads[int(slot)] for idx, slot in zip(alive_idx, best)}
    for j in heads:
        assignment[j] = j
    return assignment


def _finalize(
    s: NetworkState,
    p: RadioParams,
    w: MilpWeights,
    chs: Sequence[int],
    k_requested: int,
    clamped: bool,
    source: str,
) -> ClusteringSolution:
    assignment = optimal_assignment(s, p, w, chs)
    draft = ClusteringSolution(chs=tuple(chs), assignment=assignment)
    return ClusteringSolution(
        chs=tuple(chs),
        assignment=assignment,
        objective=objective(s, p, w, draft),
        k_requested=k_requested,
        clamped=clamped,
        source=source,
    )


def _effective_k(k: int, m: int) -> Tuple[int, bool]:
    k_eff = min(max(k, 1), m)
    return k_eff, k > m


def solve_bruteforce(
    s: NetworkState,
    p: RadioParams,
    w: MilpWeights,
    k: int,
    candidates: Optional[Iterable[int]] = None,
) -> ClusteringSolution:
    """Enumerate every k-subset of H; ties resolve to the smallest sorted id list."""
    inst = _build_instance(s, p, w, candidates)
    m = inst.cand_ids.size
    k_eff, clamped = _effective_k(k, m)
    if math.comb(m, k_eff) > MAX_BRUTEFORCE_SUBSETS:
        raise SolverLimitError(
            f"C({m}, {k_eff}) = {math.comb(m, k_eff)} subsets exceeds {MAX_BRUTEFORCE_SUBSETS}"
        )
    best_pos: Optional[Tuple[int, ...]] = None
    best_obj = math.inf
    # combinations() yields ascending positions in lexicographic order, so the
    # first subset reaching the minimum is also the lexicographically smallest.
    for combo in itertools.combinations(range(m), k_eff):
        value = inst.evaluate(combo)
        if value < best_obj:
            best_obj, best_pos = value, combo
    return _finalize(s, p, w, inst.ids_of(best_pos), k, clamped, "bruteforce")


class _BranchAndBound:
    """
    Depth-first search over CH subsets with a Lagrangian bound.

    Relaxing "every node is assigned exactly once" with multipliers lam gives,
    for any lam,

        LB = gamma-term + sum(lam) + sum over chosen heads of rho_j
        rho_j = beta * open_j + sum_i min(0, alpha * cost_ji - lam_i)

    which the k smallest rho minimise. lam is tuned once at the root by
    subgradient ascent against a greedy + swap incumbent. Candidates whose best
    completion already exceeds the incumbent are dropped up front; the rest are
    searched in rho order, so the cheapest completion of a prefix is a
    contiguous run of rho. Children are also checked against an assignment
    bound: every node at its cheapest head among the chosen and still-reachable
    candidates.
    """

    def __init__(self, inst: _Instance, k: int):
        self.inst = inst
        self.k = k
        w = inst.w
        self.const = w.gamma * inst.rx_total
        self.c = w.alpha * inst.member_cost
        self.f = w.beta * inst.open_cost
        self.m = self.c.shape[0]
        self.best_obj = math.inf
        self.best_ids: Tuple[int, ...] = ()
        self.root_bound = -math.inf
        self.kept = self.m
        self.expanded = 0
        self.evaluated = 0

    def _threshold(self) -> float:
        return self.best_obj + abs(self.best_obj) * _PRUNE_RTOL + _PRUNE_ATOL

    def _offer(self, positions: Iterable[int]) -> None:
        """Exact evaluation of a complete subset (candidate positions)."""
        ordered = sorted(int(q) for q in positions)
        value = self.inst.evaluate(ordered)
        ids = self.inst.ids_of(ordered)
        self.evaluated += 1
        if value < self.best_obj or (value == self.best_obj and ids < self.best_ids):
            self.best_obj, self.best_ids = value, ids

    def _local_search(self) -> None:
        """Greedy construction, then best-improvement single swaps."""
        c, f, k = self.c, self.f, self.k
        chosen: List[int] = []
        current = np.full(c.shape[1], np.inf)
        for _ in range(k):
            scores = np.minimum(current, c).sum(axis=1) + f
            scores[chosen] = np.inf
            pick = int(np.argmin(scores))
            chosen.append(pick)
            current = np.minimum(current, c[pick])
        value = float(current.sum() + f[chosen].sum())

        for _ in range(_LOCAL_SEARCH_ROUNDS):
            sel = np.array(chosen)
            sub = c[sel]
            owner = sel[np.argmin(sub, axis=0)]
            ranked = np.sort(sub, axis=0)
            best = ranked[0]
            second = ranked[1] if k > 1 else np.full_like(best, np.inf)
            rest = np.setdiff1d(np.arange(self.m), sel)
            open_sum = float(f[sel].sum())
            move, move_value = None, value
            for t, j in enumerate(chosen):
                base = np.where(owner == j, second, best)
                vals = np.minimum(c[rest], base).sum(axis=1) + (open_sum - f[j]) + f[rest]
                q = int(np.argmin(vals))
                if vals[q] < move_value - abs(move_value) * 1e-12:
                    move, move_value = (t, int(rest[q])), float(vals[q])
            if move is None:
                break
            chosen[move[0]] = move[1]
            value = move_value
        self._offer(chosen)

    def _tune_multipliers(self) -> None:
        c, f, k = self.c, self.f, self.k
        target = self.best_obj - self.const
        lam = c.min(axis=0)
        best_lb, best_lam = -math.inf, lam
        step_scale, stall = 2.0, 0
        for _ in range(_SUBGRADIENT_ITERATIONS):
            reduced = np.minimum(c - lam, 0.0)
            rho = f + reduced.sum(axis=1)
            pick = np.argpartition(rho, k - 1)[:k]
            lb = float(lam.sum() + rho[pick].sum())
            if lb > best_lb:
                best_lb, best_lam, stall = lb, lam, 0
            else:
                stall += 1
                if stall >= _SUBGRADIENT_PATIENCE:
                    step_scale, stall = step_scale / 2.0, 0
            if target - best_lb <= abs(target) * _PRUNE_RTOL or step_scale < 1e-3:
                break
            g = 1.0 - (reduced[pick] < 0.0).sum(axis=0)
            norm = float(g @ g)
            if norm == 0.0:
                break
            lam = lam + (step_scale * (target - lb) / norm) * g

        self.lag_base = self.const + float(best_lam.sum())
        self.rho = f + np.minimum(c - best_lam, 0.0).sum(axis=1)
        smallest = np.partition(self.rho, k - 1)[:k]
        self.root_bound = self.lag_base + float(smallest.sum())

    def _restrict(self) -> None:
        """Drop candidates that cannot appear in any subset within the incumbent."""
        rho, k = self.rho, self.k
        kth = float(np.partition(rho, k - 1)[k - 1])
        completion = self.root_bound + np.maximum(rho - kth, 0.0)
        keep = np.flatnonzero(completion <= self._threshold())
        if keep.size < k:
            keep = np.arange(self.m)
        keep = keep[np.lexsort((self.inst.cand_ids[keep], rho[keep]))]
        self.kept = int(keep.size)
        self.pos = keep
        self.R = rho[keep]
        self.cumR = np.concatenate([[0.0], np.cumsum(self.R)])
        self.C = self.c[keep]
        self.F = self.f[keep]
        m, n = self.C.shape
        self.suffix_min = np.full((m + 1, n), np.inf)
        self.suffix_min_f = np.full(m + 1, np.inf)
        for q in range(m - 1, -1, -1):
            self.suffix_min[q] = np.minimum(self.C[q], self.suffix_min[q + 1])
            self.suffix_min_f[q] = min(self.F[q], self.suffix_min_f[q + 1])

    def run(self) -> Tuple[int, ...]:
        self._local_search()
        self._tune_multipliers()
        self._restrict()
        k, m = self.k, self.R.size
        stack: List[tuple] = [((), 0, None, 0.0, 0.0, -math.inf)]
        while stack:
            chosen, nxt, min_s, open_s, rho_s, bound = stack.pop()
            limit = self._threshold()
            if bound > limit:
                continue
            self.expanded += 1
            r = k - len(chosen)
            qs = np.arange(nxt, m - r + 1)
            lag = self.lag_base + rho_s + self.R[qs] + (self.cumR[qs + r] - self.cumR[qs + 1])
            ok = lag <= limit
            qs, lag = qs[ok], lag[ok]
            if qs.size == 0:
                continue
            child_min = self.C[qs] if min_s is None else np.minimum(min_s, self.C[qs])

            if r == 1:
                values = child_min.sum(axis=1) + open_s + self.F[qs] + self.const
                prefix = [int(self.pos[q]) for q in chosen]
                for t in np.argsort(values, kind="stable"):
                    if values[t] > self._threshold():
                        break
                    self._offer(prefix + [int(self.pos[qs[t]])])
                continue

            reach = np.minimum(child_min, self.suffix_min[qs + 1]).sum(axis=1)
            assign = reach + open_s + self.F[qs] + (r - 1) * self.suffix_min_f[qs + 1] + self.const
            bounds = np.maximum(lag, assign)
            for t in range(qs.size - 1, -1, -1):
                if bounds[t] <= limit:
                    q = int(qs[t])
                    stack.append(
                        (
                            chosen + (q,),
                            q + 1,
                            child_min[t],
                            open_s + float(self.F[q]),
                            rho_s + float(self.R[q]),
                            float(bounds[t]),
                        )
                    )
        return self.best_ids


def solve_exact(
    s: NetworkState,
    p: RadioParams,
    w: MilpWeights,
    k: int,
    candidates: Optional[Iterable[int]] = None,
) -> ClusteringSolution:
    """Objective-optimal solution; same tie-break as the brute-force oracle."""
    inst = _build_instance(s, p, w, candidates)
    m = inst.cand_ids.size
    k_eff, clamped = _effective_k(k, m)
    if clamped:
        logger.warning(
            "Fewer potential heads than requested cluster heads; clamping k",
            extra={"component": "clustering_opt", "k": k, "candidates": m, "round": s.round},
        )

    if k_eff == m:
        chs = inst.ids_of(range(m))
    elif w.alpha == 0 and w.beta == 0:
        # Every subset scores the same; lexicographic tie-break picks the lowest ids.
        chs = inst.ids_of(range(k_eff))
    else:
        search = _BranchAndBound(inst, k_eff)
        chs = search.run()
        logger.debug(
            "Branch-and-bound finished",
            extra={
                "component": "clustering_opt",
                "candidates": m,
                "k": k_eff,
                "expanded": search.expanded,
                "evaluated": search.evaluated,
                "kept": search.kept,
                "root_bound": search.root_bound,
            },
        )
    return _finalize(s, p, w, chs, k, clamped, "exact")
