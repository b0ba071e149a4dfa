from unittest.mock import MagicMock

import numpy as np
import pytest

from src.domain.errors import BackendError, DimensionError
from src.domain.models import (
    Action,
    ClusteringSolution,
    DqnConfig,
    NetworkConfig,
    StopRule,
    Transition,
)
from src.services.dqn_agent import (
    QAgent,
    ReplayBuffer,
    RlcEnvironment,
    encode,
    evaluate,
    exact_backend,
    load_policy,
    observation_size,
    q_network_spec,
    reward,
    select_action,
    train,
)
from src.services.net_model import generate_topology
from src.services.nn_core import Mlp
from src.services.sim_engine import apply_solution
from src.utils.rng import stream


def _fixed_policy(n_nodes, q_a1, q_a2):
    """Q network whose output is constant (q_a1, q_a2)."""
    net = Mlp(q_network_spec(n_nodes, [8]), seed=0)
    for p in net.parameters():
        p[...] = 0.0
    net.biases[-1][...] = [q_a1, q_a2]
    return net


def _small_dqn(**overrides):
    values = dict(
        total_steps=40,
        hidden_sizes=[16],
        batch_size=8,
        target_update_interval=10,
        buffer_capacity=100,
        learning_rate=1e-3,
        log_interval=20,
        seed=1,
    )
    values.update(overrides)
    return DqnConfig(**values)


class TestReward:

    def test_all_alive_keep(self, small_state):
        assert reward(small_state, Action.A2) == 1.0

    def test_all_alive_recluster(self, small_state):
        assert reward(small_state, Action.A1) == 1.1

    def test_any_dead(self, small_state):
        small_state.energy[3] = 0.0
        assert reward(small_state, Action.A1) == 2.0
        assert reward(small_state, Action.A2) == 2.0

    def test_transition_rejects_other_values(self):
        with pytest.raises(ValueError):
            Transition(np.zeros(3), Action.A1, 3.0, np.zeros(3), True)


class TestEncode:

    def test_reference_length(self):
        assert encode(generate_topology(NetworkConfig())).shape == (303,)
        assert observation_size(100) == 303

    def test_fresh_network_layout(self, small_state):
        obs = encode(small_state)
        n = small_state.n_nodes
        assert obs[0] == 1.0
        assert np.all(obs[1:n + 1] == 1.0)
        assert np.all(obs[n + 1:2 * n + 1] == 0.0)
        assert obs[2 * n + 1] == 0.0
        assert np.all(obs[2 * n + 2:3 * n + 2] == 0.0)
        assert obs[-1] == 0.0

    def test_cluster_slot_codes(self, make_state):
        coords = [(i * 10.0, 0.0) for i in range(10)]
        s = make_state(coords, k_fraction=0.5)
        chs = (1, 3, 7, 8, 9)
        assignment = {i: i for i in chs}
        assignment.update({2: 1, 4: 3, 5: 7, 6: 7, 10: 9})
        apply_solution(s, ClusteringSolution(chs=chs, assignment=assignment))
        obs = encode(s)
        n = 10
        one_hot = obs[n + 1:2 * n + 1]
        code = obs[2 * n + 2:3 * n + 2]
        assert one_hot[6] == 1.0 and one_hot.sum() == 5
        assert code[4] == pytest.approx(3 / 5)
        assert code[5] == pytest.approx(3 / 5)
        assert code[1] == pytest.approx(1 / 5)

    def test_entries_in_unit_interval(self, small_state):
        small_state.energy[:] = np.linspace(0.0, 0.5, 10)
        small_state.rounds_since_recluster = 500
        small_state.last_action = Action.A1
        obs = encode(small_state)
        assert obs.min() >= 0.0 and obs.max() <= 1.0
        assert obs[-1] == 1.0
        assert obs[2 * 10 + 1] == 1.0


class TestSelectAction:

    def test_uniform_exploration(self):
        qnet = MagicMock()
        rng = stream(0, "dqn-explore")
        picks = [select_action(qnet, np.zeros(3), 1.0, rng) for _ in range(10_000)]
        assert picks.count(Action.A1) / 10_000 == pytest.approx(0.5, abs=0.02)
        qnet.forward.assert_not_called()

    def test_greedy_argmax(self):
        qnet = MagicMock()
        qnet.forward.return_value = np.array([2.0, 1.0])
        assert select_action(qnet, np.zeros(3), 0.0) == Action.A1
        qnet.forward.return_value = np.array([1.0, 2.0])
        assert select_action(qnet, np.zeros(3), 0.0) == Action.A2

    def test_tie_prefers_keep(self):
        qnet = MagicMock()
        qnet.forward.return_value = np.array([0.5, 0.5])
        assert select_action(qnet, np.zeros(3), 0.0) == Action.A2

    def test_exploration_needs_stream(self):
        with pytest.raises(ValueError):
            select_action(MagicMock(), np.zeros(3), 0.5)


class TestReplayBuffer:

    def test_capacity_and_unique_samples(self):
        buf = ReplayBuffer(5, stream(0, "dqn-replay"))
        for i in range(12):
            buf.push(Transition(np.array([float(i)]), Action.A2, 1.0, np.array([i + 1.0]), False))
        assert len(buf) == 5
        states, actions, rewards, next_states, terminal = buf.sample(5)
        assert sorted(states[:, 0].tolist()) == [7.0, 8.0, 9.0, 10.0, 11.0]
        assert actions.tolist() == [1] * 5
        assert terminal.tolist() == [0.0] * 5

    def test_sample_smaller_than_requested(self):
        buf = ReplayBuffer(10, stream(0, "dqn-replay"))
        buf.push(Transition(np.zeros(2), Action.A1, 1.1, np.zeros(2), False))
        assert buf.sample(4)[0].shape == (1, 2)


class TestAgent:

    def test_epsilon_schedule(self):
        agent = QAgent.create(10, _small_dqn(total_steps=100))
        assert agent.epsilon(0) == pytest.approx(0.8)
        assert agent.epsilon(25) == pytest.approx(0.425)
        assert agent.epsilon(50) == pytest.approx(0.05)
        assert agent.epsilon(99) == pytest.approx(0.05)

    def test_terminal_target_is_reward(self):
        agent = QAgent.create(10, _small_dqn())
        obs = np.random.default_rng(0).uniform(size=(2, observation_size(10)))
        targets = agent.td_targets(np.array([2.0, 1.0]), obs, np.array([1.0, 0.0]))
        assert targets[0] == 2.0
        expected = 1.0 + 0.9 * agent.target.forward(obs[1]).max()
        assert targets[1] == pytest.approx(expected)

    def test_target_syncs_only_on_interval(self):
        agent = QAgent.create(10, _small_dqn(batch_size=2, target_update_interval=4))
        initial = [p.copy() for p in agent.target.parameters()]
        rng = np.random.default_rng(1)
        size = observation_size(10)
        for step in range(1, 5):
            agent.record(Transition(rng.uniform(size=size), Action.A1, 1.1, rng.uniform(size=size), False))
            if step < 4:
                assert all(np.array_equal(p, q) for p, q in zip(initial, agent.target.parameters()))
        assert agent.target_syncs == 1
        assert all(np.array_equal(p, q) for p, q in zip(agent.qnet.parameters(), agent.target.parameters()))
        assert not all(np.array_equal(p, q) for p, q in zip(initial, agent.target.parameters()))

    def test_learn_waits_for_a_full_batch(self):
        agent = QAgent.create(10, _small_dqn(batch_size=8))
        size = observation_size(10)
        loss = agent.record(Transition(np.zeros(size), Action.A2, 1.0, np.zeros(size), False))
        assert loss is None


class TestEnvironment:

    def test_step_before_reset(self, small_cfg, radio, weights):
        env = RlcEnvironment(small_cfg, radio, exact_backend(radio, weights))
        with pytest.raises(RuntimeError):
            env.step(Action.A2)

    def test_first_round_forces_recluster(self, small_cfg, radio, weights):
        env = RlcEnvironment(small_cfg, radio, exact_backend(radio, weights))
        env.reset()
        _, r, terminal, metrics = env.step(Action.A2)
        assert metrics.reclustered and r == 1.1 and not terminal
        assert env.state.last_action == Action.A1
        _, r, _, metrics = env.step(Action.A2)
        assert not metrics.reclustered and r == 1.0

    def test_episode_ends_at_first_death(self, small_cfg, radio, weights):
        env = RlcEnvironment(small_cfg, radio, exact_backend(radio, weights))
        env.reset()
        env.state.energy[4] = 1e-9
        _, r, terminal, _ = env.step(Action.A1)
        assert terminal and r == 2.0
        env.reset()
        assert env.state.alive_count == 10 and env.state.round == 0

    def test_backend_failure(self, small_cfg, radio):
        def broken(state):
            raise ValueError("boom")
        env = RlcEnvironment(small_cfg, radio, broken)
        env.reset()
        with pytest.raises(BackendError):
            env.step(Action.A1)


class TestTraining:

    def test_zero_steps(self, small_cfg, radio, weights):
        outcome = train(small_cfg, radio, exact_backend(radio, weights), _small_dqn(total_steps=0))
        assert outcome.log == [] and outcome.episodes == 0

    def test_log_is_reproducible(self, small_cfg, radio, weights):
        a = train(small_cfg, radio, exact_backend(radio, weights), _small_dqn())
        b = train(small_cfg, radio, exact_backend(radio, weights), _small_dqn())
        assert a.log_lines() == b.log_lines()
        assert len(a.log) == 40
        assert set(a.log[0]) == {"step", "episode", "round", "action", "reward", "loss", "epsilon"}
        assert a.log[0]["action"] == "a1"
        assert {entry["reward"] for entry in a.log} <= {1.0, 1.1, 2.0}

    def test_policy_round_trip(self, tmp_path, small_cfg, radio, weights):
        outcome = train(small_cfg, radio, exact_backend(radio, weights), _small_dqn(total_steps=10))
        path = outcome.agent.qnet.save(tmp_path / "policy.npz")
        assert load_policy(path, 10).spec.layer_sizes == [33, 16, 2]
        with pytest.raises(DimensionError):
            load_policy(path, 20)


class TestEvaluate:

    def test_always_keep(self, small_cfg, radio, weights):
        result, actions = evaluate(_fixed_policy(10, 0.0, 1.0), small_cfg, radio, weights, StopRule.rounds(30))
        assert actions[0] == Action.A1
        assert all(a == Action.A2 for a in actions[1:])
        assert result.per_round[0].control_packets == 20
        assert all(m.control_packets == 0 for m in result.per_round[1:])
        assert len(actions) == result.rounds

    def test_always_recluster(self, small_cfg, radio, weights):
        result, actions = evaluate(_fixed_policy(10, 1.0, 0.0), small_cfg, radio, weights, StopRule.rounds(30))
        assert all(a == Action.A1 for a in actions)
        alive_before = [10] + [m.alive for m in result.per_round[:-1]]
        assert [m.control_packets for m in result.per_round] == [2 * a for a in alive_before]

    def test_rejects_wrong_width(self, small_cfg, radio, weights):
        with pytest.raises(DimensionError):
            evaluate(_fixed_policy(20, 0.0, 1.0), small_cfg, radio, weights, StopRule.rounds(5))
