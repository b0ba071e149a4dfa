import pytest

from src.domain.models import StopRule
from src.services.protocol_milp import MilpProtocol
from src.services.sim_engine import run_simulation


class TestMilpProtocol:

    def test_rejects_zero_period(self, radio, weights):
        with pytest.raises(ValueError):
            MilpProtocol(radio, weights, period=0)

    def test_every_round(self, small_cfg, radio, weights):
        result = run_simulation(small_cfg, MilpProtocol(radio, weights), radio, StopRule.rounds(5))
        assert result.recluster_count == 5
        assert all(m.ch_count == 2 for m in result.per_round)

    def test_period_three(self, small_cfg, radio, weights):
        result = run_simulation(small_cfg, MilpProtocol(radio, weights, period=3), radio, StopRule.rounds(7))
        assert [m.reclustered for m in result.per_round] == [True, False, False, True, False, False, True]
        assert all(m.control_packets == 0 for m in result.per_round if not m.reclustered)
