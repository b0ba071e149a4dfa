import numpy as np
import pytest

from src.domain.errors import TopologyMismatchError
from src.domain.models import NetworkConfig
from src.services.net_model import (
    dump_topology,
    generate_topology,
    load_topology,
    network_stats,
    potential_heads,
    reset_energies,
)


class TestGenerateTopology:

    def test_same_config_same_coordinates(self):
        cfg = NetworkConfig(seed=11)
        a, b = generate_topology(cfg), generate_topology(cfg)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)

    def test_different_seed_different_coordinates(self):
        a = generate_topology(NetworkConfig(seed=1))
        b = generate_topology(NetworkConfig(seed=2))
        assert not np.array_equal(a.x, b.x)

    def test_reference_bounds_and_energy(self):
        s = generate_topology(NetworkConfig())
        assert s.n_nodes == 100
        assert s.x.min() >= 0 and s.x.max() <= 100
        assert s.y.min() >= 0 and s.y.max() <= 100
        assert s.e_net == pytest.approx(50.0)
        assert s.round == 0
        assert s.alive_count == 100

    def test_distances_are_euclidean(self, small_state):
        i, j = 2, 7
        expected = np.hypot(small_state.x[i - 1] - small_state.x[j - 1], small_state.y[i - 1] - small_state.y[j - 1])
        assert small_state.distance(i, j) == pytest.approx(expected)
        assert small_state.distance_to_bs(1) == pytest.approx(
            np.hypot(small_state.x[0] - 50.0, small_state.y[0] - 175.0)
        )

    def test_ch_max(self):
        assert NetworkConfig().ch_max == 5
        assert NetworkConfig(n_nodes=10, k_fraction=0.25).ch_max == 3

    def test_rejects_fraction_below_one_head(self):
        with pytest.raises(ValueError):
            NetworkConfig(n_nodes=10, k_fraction=0.05)


class TestPotentialHeads:

    def test_equal_energies_gives_all_alive(self, small_state):
        assert potential_heads(small_state) == set(range(1, 11))

    def test_above_mean_only(self, make_state):
        s = make_state([(0, 0), (1, 1)], energies=[0.4, 0.6])
        assert potential_heads(s) == {2}

    def test_matches_mean_then_filter(self, make_state):
        energies = [0.1 * i for i in range(1, 11)]
        s = make_state([(i, i) for i in range(10)], energies=energies)
        mean = sum(energies) / len(energies)
        assert potential_heads(s) == {i + 1 for i, e in enumerate(energies) if e >= mean}

    def test_dead_nodes_excluded_and_not_averaged(self, make_state):
        s = make_state([(0, 0), (1, 1), (2, 2)], energies=[0.0, 0.2, 0.4])
        assert potential_heads(s) == {3}

    def test_all_nodes_denominator(self):
        cfg = NetworkConfig(n_nodes=3, k_fraction=0.5, mean_over_all_nodes=True)
        s = generate_topology(cfg)
        s.energy[:] = [0.0, 0.2, 0.4]
        # mean over all three nodes is 0.2
        assert potential_heads(s) == {2, 3}

    def test_empty_when_all_dead(self, small_state):
        small_state.energy[:] = 0.0
        assert potential_heads(small_state) == set()


class TestNetworkStats:

    def test_same_state(self, small_state):
        e_net, e_bar, e_bar_d, alive = network_stats(small_state, small_state.copy())
        assert e_net == pytest.approx(5.0)
        assert e_bar == pytest.approx(0.5)
        assert e_bar_d == 0.0
        assert alive == 10

    def test_dissipation_over_all_nodes(self):
        prev = generate_topology(NetworkConfig())
        s = prev.copy()
        s.energy[0] -= 0.01
        assert network_stats(s, prev)[2] == pytest.approx(1e-4)

    def test_mismatched_deployments(self):
        a = generate_topology(NetworkConfig(seed=1))
        b = generate_topology(NetworkConfig(seed=2))
        with pytest.raises(TopologyMismatchError):
            network_stats(a, b)


class TestTopologyFiles:

    def test_dump_and_load(self, tmp_path, small_state, small_cfg):
        path = dump_topology(small_state, tmp_path / "topology.csv")
        loaded = load_topology(path, small_cfg)
        assert loaded.n_nodes == small_state.n_nodes
        assert np.allclose(loaded.x, small_state.x, atol=1e-6)
        assert loaded.e_net == pytest.approx(small_state.e_net)

    def test_energy_column(self, tmp_path):
        path = tmp_path / "state.csv"
        path.write_text("id,x,y,energy\n1,0,0,0.3\n2,10,0,0.0\n3,20,0,0.5\n")
        s = load_topology(path, NetworkConfig(n_nodes=3, k_fraction=0.5))
        assert s.energy.tolist() == [0.3, 0.0, 0.5]
        assert s.alive_ids == [1, 3]

    def test_node_count_taken_from_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("id,x,y\n1,0,0\n2,1,1\n3,2,2\n4,3,3\n")
        s = load_topology(path, NetworkConfig())
        assert s.cfg.n_nodes == 4

    def test_rejects_gaps(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("id,x,y\n1,0,0\n3,1,1\n")
        with pytest.raises(TopologyMismatchError):
            load_topology(path, NetworkConfig())

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("node,x,y\n1,0,0\n2,1,1\n")
        with pytest.raises(TopologyMismatchError):
            load_topology(path, NetworkConfig())

    def test_reset_energies_keeps_geometry(self, small_state):
        small_state.energy[:3] = 0.0
        small_state.round = 40
        fresh = reset_energies(small_state)
        assert fresh.round == 0
        assert fresh.e_net == pytest.approx(5.0)
        assert fresh.dist is small_state.dist
