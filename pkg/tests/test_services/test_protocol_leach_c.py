import itertools

import numpy as np
import pytest

from src.domain.errors import InfeasibleSolutionError
from src.domain.models import NetworkConfig, StopRule
from src.services.net_model import generate_topology, potential_heads
from src.services.protocol_leach_c import AnnealSchedule, LeachCProtocol, leach_c_cluster, ssd
from src.services.sim_engine import run_simulation
from src.utils.rng import stream


def _exhaustive_ssd(s, candidates, k):
    return min(ssd(s, combo) for combo in itertools.combinations(sorted(candidates), k))


class TestSsd:

    def test_three_four_five(self, make_state):
        s = make_state([(0, 0), (3, 4)])
        assert ssd(s, [1]) == pytest.approx(25.0)

    def test_every_node_a_head(self, small_state):
        assert ssd(small_state, range(1, 11)) == 0.0

    def test_matches_per_node_oracle(self):
        s = generate_topology(NetworkConfig(n_nodes=15, k_fraction=0.2, seed=4))
        chs = [3, 8, 14]
        expected = sum(min(s.distance(i, j) ** 2 for j in chs) for i in range(1, 16))
        assert ssd(s, chs) == pytest.approx(expected)

    def test_dead_nodes_do_not_count(self, make_state):
        s = make_state([(0, 0), (3, 4), (30, 40)], energies=[0.5, 0.5, 0.0])
        assert ssd(s, [1]) == pytest.approx(25.0)

    def test_empty_heads(self, small_state):
        with pytest.raises(InfeasibleSolutionError):
            ssd(small_state, [])


class TestAnnealing:

    def test_k_equal_to_candidates(self, small_state):
        sol = leach_c_cluster(small_state, 10, stream(0, "leach-c-anneal"))
        assert sol.chs == tuple(range(1, 11))
        assert sol.objective == 0.0
        assert not sol.clamped

    def test_clamps_to_candidates(self, make_state):
        s = make_state([(0, 0), (10, 0), (20, 0)], energies=[0.1, 0.5, 0.5])
        sol = leach_c_cluster(s, 3, stream(0, "leach-c-anneal"))
        assert sol.chs == (2, 3)
        assert sol.clamped and sol.k_requested == 3
        sol.validate(s.alive_ids)

    def test_two_point_optimum(self, make_state):
        # node 2 sits in the middle of the line, node 1 at its end
        s = make_state([(0, 0), (10, 0), (20, 0), (11, 0)], energies=[0.5, 0.5, 0.1, 0.1])
        assert potential_heads(s) == {1, 2}
        sol = leach_c_cluster(s, 1, stream(0, "leach-c-anneal"))
        assert sol.chs == (2,)

    def test_no_candidates(self, small_state):
        small_state.energy[:] = 0.0
        with pytest.raises(InfeasibleSolutionError):
            leach_c_cluster(small_state, 2, stream(0, "leach-c-anneal"))

    def test_trace_never_increases(self, random_instance):
        s = random_instance(2, 30, 0.2)
        trace = []
        leach_c_cluster(s, 5, stream(2, "leach-c-anneal"), AnnealSchedule(iterations=200), trace)
        assert len(trace) == 200
        assert all(b <= a for a, b in zip(trace, trace[1:]))

    def test_near_exhaustive_optimum(self, random_instance):
        hits = 0
        for seed in range(100):
            s = random_instance(seed, 10, 0.2)
            candidates = potential_heads(s)
            k = min(2, len(candidates))
            sol = leach_c_cluster(s, 2, stream(seed, "leach-c-anneal"))
            best = _exhaustive_ssd(s, candidates, k)
            if sol.objective <= 1.05 * best + 1e-12:
                hits += 1
        assert hits >= 90

    def test_assignment_is_nearest_head(self, random_instance):
        s = random_instance(7, 20, 0.2)
        sol = leach_c_cluster(s, 4, stream(7, "leach-c-anneal"))
        sol.validate(s.alive_ids)
        for node, head in sol.assignment.items():
            assert s.distance(node, head) == pytest.approx(min(s.distance(node, j) for j in sol.chs))


class TestLeachCProtocol:

    def test_heads_come_from_candidates(self, small_cfg, radio):
        state = generate_topology(small_cfg)
        proto = LeachCProtocol()
        proto.reset(state)
        state.energy[:] = np.linspace(0.1, 0.5, state.n_nodes)
        sol = proto.decide(state)
        assert set(sol.chs) <= potential_heads(state)
        assert len(sol.chs) == 2

    def test_same_seed_same_run(self, small_cfg, radio):
        a = run_simulation(small_cfg, LeachCProtocol(), radio, StopRule.rounds(40))
        b = run_simulation(small_cfg, LeachCProtocol(), radio, StopRule.rounds(40))
        assert a.ch_selection_count == b.ch_selection_count
        assert [m.as_row() for m in a.per_round] == [m.as_row() for m in b.per_round]
