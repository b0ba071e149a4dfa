import numpy as np

from src.utils.rng import stream


def test_same_seed_and_label_repeat():
    assert np.array_equal(stream(3, "topology").random(5), stream(3, "topology").random(5))


def test_labels_are_independent():
    assert not np.array_equal(stream(3, "topology").random(5), stream(3, "leach-election").random(5))


def test_seeds_are_independent():
    assert not np.array_equal(stream(3, "topology").random(5), stream(4, "topology").random(5))


def test_large_seed():
    assert stream(2**63 + 5, "topology").random() != stream(5, "topology").random()
