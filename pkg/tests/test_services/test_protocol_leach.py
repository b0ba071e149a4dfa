import numpy as np
import pytest

from src.domain.models import NetworkConfig
from src.services.net_model import generate_topology
from src.services.protocol_leach import (
    LeachProtocol,
    epoch_length,
    leach_assign,
    leach_elect,
    leach_threshold,
)
from src.utils.rng import stream


class TestThreshold:

    def test_epoch_start_is_p(self):
        assert leach_threshold(0.05, 0) == pytest.approx(0.05)
        assert leach_threshold(0.05, 40) == pytest.approx(0.05)

    def test_rises_within_epoch(self):
        assert leach_threshold(0.05, 1) == pytest.approx(0.05 / 0.95)
        assert leach_threshold(0.05, 10) == pytest.approx(0.1)

    def test_last_round_of_epoch_is_certain(self):
        assert epoch_length(0.05) == 20
        assert leach_threshold(0.05, 19) == 1.0
        assert leach_threshold(0.05, 39) == 1.0

    def test_rejects_bad_fraction(self, small_state):
        with pytest.raises(ValueError):
            leach_elect(small_state, 0.0, stream(0, "leach-election"))


class TestElection:

    def test_ineligible_never_elected(self, small_state):
        small_state.round = 19
        eligible = np.zeros(small_state.n_nodes, dtype=bool)
        eligible[[2, 5]] = True
        chs = leach_elect(small_state, 0.05, stream(0, "leach-election"), eligible)
        assert chs == {3, 6}

    def test_dead_nodes_never_elected(self, small_state):
        small_state.round = 19
        small_state.energy[:4] = 0.0
        chs = leach_elect(small_state, 0.05, stream(0, "leach-election"))
        assert chs == set(range(5, 11))

    def test_every_node_heads_once_per_epoch(self):
        state = generate_topology(NetworkConfig(n_nodes=40, k_fraction=0.1, seed=5))
        proto = LeachProtocol()
        proto.reset(state)
        counts = np.zeros(state.n_nodes, dtype=int)
        for r in range(epoch_length(0.1)):
            state.round = r
            for j in proto.decide(state).chs:
                counts[j - 1] += 1
        assert (counts == 1).all()

    def test_election_frequency_near_p(self):
        state = generate_topology(NetworkConfig(n_nodes=100, seed=1))
        rng = stream(1, "leach-election")
        elected = sum(len(leach_elect(state, 0.05, rng)) for _ in range(200))
        assert elected / (200 * 100) == pytest.approx(0.05, abs=0.01)

    def test_deterministic_per_seed(self, small_cfg):
        def chs_sequence():
            state = generate_topology(small_cfg)
            proto = LeachProtocol()
            proto.reset(state)
            out = []
            for r in range(15):
                state.round = r
                out.append(proto.decide(state).chs)
            return out
        assert chs_sequence() == chs_sequence()


class TestAssign:

    def test_single_ch_takes_everyone(self, small_state):
        assignment = leach_assign(small_state, [4])
        assert set(assignment.values()) == {4}
        assert set(assignment) == set(range(1, 11))

    def test_equidistant_goes_to_lower_id(self, make_state):
        s = make_state([(0, 0), (1, 0), (2, 0)])
        assert leach_assign(s, {3, 1})[2] == 1

    def test_no_chs_gives_empty_assignment(self, small_state):
        assert leach_assign(small_state, []) == {}

    def test_matches_argmin_oracle(self):
        s = generate_topology(NetworkConfig(n_nodes=20, k_fraction=0.2, seed=9))
        chs = [2, 7, 11, 19]
        assignment = leach_assign(s, chs)
        for node in range(1, 21):
            if node in chs:
                assert assignment[node] == node
                continue
            best = min(chs, key=lambda j: (s.distance(node, j), j))
            assert assignment[node] == best

    def test_dead_heads_ignored(self, make_state):
        s = make_state([(0, 0), (1, 0), (5, 0)], energies=[0.0, 0.5, 0.5])
        assert leach_assign(s, [1, 3]) == {2: 3, 3: 3}
