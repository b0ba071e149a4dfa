"""
First-order radio energy model.

All functions are pure and vectorise over numpy arrays for ``d``; scalars in,
scalars out otherwise.
"""
from __future__ import annotations

import math
from typing import Iterable, Union

import numpy as np

from src.domain.models import RadioParams

Distance = Union[float, np.ndarray]


def threshold_distance(p: RadioParams) -> float:
    """Crossover distance between the free-space (d^2) and multipath (d^4) regimes."""
    return math.sqrt(p.e_fs / p.e_amp)


def tx_energy(p: RadioParams, bits: float, d: Distance) -> Distance:
    d0 = threshold_distance(p)
    if isinstance(d, np.ndarray):
        d2 = d * d
        amp = np.where(d <= d0, p.e_fs * d2, p.e_amp * d2 * d2)
        return p.e_elec * bits + amp * bits
    if d <= d0:
        return p.e_elec * bits + p.e_fs * bits * d * d
    return p.e_elec * bits + p.e_amp * bits * d ** 4


def rx_energy(p: RadioParams, bits: float) -> float:
    return p.e_elec * bits


def ch_rx_energy(p: RadioParams, member_bits: Iterable[float]) -> float:
    return p.e_elec * sum(member_bits)


def ch_tx_energy(p: RadioParams, bits: float, d_bs: Distance) -> Distance:
    """
    Aggregate-and-forward cost of a cluster head: E_DA*B + E_tx(B, d_BS).
    With ``double_count_elec`` an extra E_elec*B is added.
    """
    extra = p.e_elec * bits if p.double_count_elec else 0.0
    return p.e_da * bits + extra + tx_energy(p, bits, d_bs)


def control_rx_energy(p: RadioParams) -> float:
    return p.e_elec * p.b_ctrl
