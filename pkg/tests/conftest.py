import os

import numpy as np
import pytest

from src.domain.models import MilpWeights, NetworkConfig, RadioParams
from src.services.net_model import _fresh_state, generate_topology


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance reproductions (set WSN_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    """Skip slow tests unless WSN_RUN_SLOW is set."""
    if os.getenv("WSN_RUN_SLOW", "").lower() in ("1", "true", "yes"):
        return
    skip_slow = pytest.mark.skip(reason="set WSN_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def radio():
    """Reference radio parameters."""
    return RadioParams()


@pytest.fixture
def weights():
    return MilpWeights()


@pytest.fixture
def small_cfg():
    return NetworkConfig(n_nodes=10, k_fraction=0.2, seed=3)


@pytest.fixture
def small_state(small_cfg):
    return generate_topology(small_cfg)


@pytest.fixture
def make_state():
    """Factory for hand-placed networks; node ids follow the order of ``coords``."""
    def _make(coords, energies=None, bs=(50.0, 175.0), k_fraction=None):
        n = len(coords)
        cfg = NetworkConfig(
            n_nodes=n, k_fraction=k_fraction or min(1.0, 1.0 / n + 1e-9), bs_x=bs[0], bs_y=bs[1]
        )
        xy = np.array(coords, dtype=float)
        state = _fresh_state(cfg, xy[:, 0].copy(), xy[:, 1].copy())
        if energies is not None:
            state.energy[:] = energies
        return state
    return _make


@pytest.fixture
def random_instance():
    """Factory: random geometry plus random residual energies, so H varies."""
    def _make(seed, n_nodes, k_fraction=0.3):
        cfg = NetworkConfig(n_nodes=n_nodes, k_fraction=max(k_fraction, min(1.0, 1.0 / n_nodes + 1e-9)), seed=seed)
        state = generate_topology(cfg)
        rng = np.random.default_rng(seed)
        state.energy[:] = rng.uniform(0.05, cfg.e0, size=n_nodes)
        return state
    return _make
