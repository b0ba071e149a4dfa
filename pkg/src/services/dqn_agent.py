"""
Deep Q-learning controller that decides, every round, whether to re-cluster
(a1) or keep the current clusters (a2).

Training runs episodes on a fixed deployment with batteries reset to E0; the
first round of an episode always re-clusters and an episode ends at the first
node death. The clustering backend used on a1 is pluggable: the exact solver or
the learned surrogates. Evaluation always uses the exact solver.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.domain.errors import BackendError, DimensionError, WsnError
from src.domain.models import (
    Action,
    ClusteringSolution,
    DqnConfig,
    MilpWeights,
    MlpSpec,
    NetworkConfig,
    NetworkState,
    RadioParams,
    RoundMetrics,
    SimResult,
    StopRule,
    TrainConfig,
    Transition,
)
from src.domain.models.learning import ACTION_INDEX, INDEX_ACTION
from src.domain.protocols import IClusteringProtocol
from src.services.clustering_opt import cluster_count, solve_exact
from src.services.net_model import generate_topology, reset_energies
from src.services.nn_core import Mlp
from src.services.sim_engine import run_round, run_simulation
from src.services.surrogate import predict_solution
from src.utils.rng import stream
from sb_utils.file_utils import write_text_atomic
from sb_utils.logger_utils import logger

CH_TAU_SCALE = 100.0

ClusteringBackend = Callable[[NetworkState], ClusteringSolution]


# ----------------------------------------------------------------------
# MDP pieces
# ----------------------------------------------------------------------
def reward(next_state: NetworkState, action: Action) -> float:
    """2.0 once any node is depleted, otherwise 1.1 for re-clustering and 1.0 for keeping."""
    if (next_state.energy <= 0).any():
        return 2.0
    return 1.1 if action == Action.A1 else 1.0


def observation_size(n_nodes: int) -> int:
    return 3 * n_nodes + 3


def encode(s: NetworkState, cfg: Optional[NetworkConfig] = None) -> np.ndarray:
    """
    Flat observation of length 3N + 3, every entry in [0, 1]:
    E_net / (N E0), E_n / E0, CH one-hot, CH_tau / 100, assignment code, previous action.
    """
    cfg = cfg or s.cfg
    n = s.n_nodes
    energy = np.clip(s.energy, 0.0, cfg.e0) / cfg.e0
    one_hot = np.zeros(n)
    code = np.zeros(n)
    if s.solution is not None:
        chs = sorted(s.solution.chs)
        slot = {ch: i for i, ch in enumerate(chs)}
        alive = s.alive
        for ch in chs:
            if alive[ch - 1]:
                one_hot[ch - 1] = 1.0
        for idx in np.flatnonzero(alive & (s.cluster_head > 0)):
            head = int(s.cluster_head[idx])
            if head in slot:
                code[idx] = min((slot[head] + 1) / cfg.ch_max, 1.0)
    return np.concatenate(
        [
            [min(s.e_net / (n * cfg.e0), 1.0)],
            energy,
            one_hot,
            [min(s.rounds_since_recluster / CH_TAU_SCALE, 1.0)],
            code,
            [1.0 if s.last_action == Action.A1 else 0.0],
        ]
    )


def select_action(
    qnet: Mlp, obs: np.ndarray, epsilon: float, rng: Optional[np.random.Generator] = None
) -> Action:
    """epsilon-greedy over the two Q outputs; ties go to a2."""
    if epsilon > 0:
        if rng is None:
            raise ValueError("exploration needs a random stream")
        if rng.random() < epsilon:
            return INDEX_ACTION[int(rng.integers(2))]
    q = qnet.forward(obs)
    return Action.A1 if q[ACTION_INDEX[Action.A1]] > q[ACTION_INDEX[Action.A2]] else Action.A2


class ReplayBuffer:
    """Fixed-capacity ring buffer; batches are sampled without replacement."""

    def __init__(self, capacity: int, rng: np.random.Generator):
        self.capacity = capacity
        self._rng = rng
        self._items: List[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, t: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._next] = t
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int):
        idx = self._rng.choice(len(self._items), size=min(batch_size, len(self._items)), replace=False)
        batch = [self._items[i] for i in idx]
        return (
            np.stack([t.state for t in batch]),
            np.array([ACTION_INDEX[t.action] for t in batch], dtype=np.int64),
            np.array([t.reward for t in batch]),
            np.stack([t.next_state for t in batch]),
            np.array([t.terminal for t in batch], dtype=float),
        )


# ----------------------------------------------------------------------
# backends
# ----------------------------------------------------------------------
def exact_backend(p: RadioParams, w: MilpWeights) -> ClusteringBackend:
    def solve(s: NetworkState) -> ClusteringSolution:
        return solve_exact(s, p, w, cluster_count(s.cfg.k_fraction, s.alive_count))
    return solve


def surrogate_backend(ch_model: Mlp, assign_model: Mlp, p: RadioParams, w: MilpWeights) -> ClusteringBackend:
    def solve(s: NetworkState) -> ClusteringSolution:
        return predict_solution(ch_model, assign_model, s, p, w)
    return solve


class _ScriptedProtocol(IClusteringProtocol):
    """Executes whatever action the environment was told to take."""
    name = "leach-rlc"
    centralized = True

    def __init__(self, backend: ClusteringBackend):
        self.backend = backend
        self.pending = Action.A1

    def reset(self, state: NetworkState) -> None:
        self.pending = Action.A1

    def decide(self, state: NetworkState) -> Optional[ClusteringSolution]:
        if self.pending == Action.A2:
            return None
        try:
            return self.backend(state)
        except Exception as exc:
            raise BackendError(
                f"clustering backend failed at round {state.round}: {exc}"
            ) from exc


class RlcEnvironment:
    """Gym-style wrapper: ``reset()`` -> observation, ``step(a)`` -> (obs, reward, terminal, metrics)."""

    def __init__(
        self,
        cfg: NetworkConfig,
        p: RadioParams,
        backend: ClusteringBackend,
        topology: Optional[NetworkState] = None,
    ):
        self.cfg = cfg
        self.p = p
        self._base = topology if topology is not None else generate_topology(cfg)
        self._protocol = _ScriptedProtocol(backend)
        self.state: Optional[NetworkState] = None

    @property
    def observation_size(self) -> int:
        return observation_size(self._base.n_nodes)

    def reset(self) -> np.ndarray:
        self.state = reset_energies(self._base)
        self._protocol.reset(self.state)
        return encode(self.state)

    def forced_action(self) -> Optional[Action]:
        """Round 0 (or no clusters yet) always re-clusters."""
        if self.state.round == 0 or self.state.solution is None:
            return Action.A1
        return None

    def step(self, action: Action) -> Tuple[np.ndarray, float, bool, RoundMetrics]:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        action = self.forced_action() or action
        self._protocol.pending = action
        self.state, metrics = run_round(self.state, self._protocol, self.p)
        self.state.last_action = action
        r = reward(self.state, action)
        terminal = bool((self.state.energy <= 0).any())
        return encode(self.state), r, terminal, metrics


# ----------------------------------------------------------------------
# agent
# ----------------------------------------------------------------------
def q_network_spec(n_nodes: int, hidden: List[int]) -> MlpSpec:
    return MlpSpec(
        layer_sizes=[observation_size(n_nodes), *hidden, 2],
        output_activation="identity",
        dropout_rate=0.0,
    )


@dataclass
class QAgent:
    qnet: Mlp
    target: Mlp
    cfg: DqnConfig
    buffer: ReplayBuffer
    steps: int = 0
    target_syncs: int = 0

    @classmethod
    def create(cls, n_nodes: int, cfg: DqnConfig) -> "QAgent":
        qnet = Mlp(q_network_spec(n_nodes, cfg.hidden_sizes), cfg.seed)
        return cls(
            qnet=qnet,
            target=qnet.clone(),
            cfg=cfg,
            buffer=ReplayBuffer(cfg.buffer_capacity, stream(cfg.seed, "dqn-replay")),
        )

    def epsilon(self, step: int) -> float:
        """Linear decay from epsilon_start to epsilon_end, flat afterwards."""
        span = self.cfg.epsilon_decay_steps
        if span <= 0 or step >= span:
            return self.cfg.epsilon_end
        frac = step / span
        return self.cfg.epsilon_start + frac * (self.cfg.epsilon_end - self.cfg.epsilon_start)

    def td_targets(self, rewards: np.ndarray, next_states: np.ndarray, terminal: np.ndarray) -> np.ndarray:
        best_next = self.target.forward(next_states).max(axis=1)
        return rewards + self.cfg.discount * (1.0 - terminal) * best_next

    def learn(self) -> Optional[float]:
        """One Q-update on a sampled minibatch; only the taken action's output is regressed."""
        if len(self.buffer) < self.cfg.batch_size:
            return None
        states, actions, rewards, next_states, terminal = self.buffer.sample(self.cfg.batch_size)
        targets = self.qnet.forward(states)
        targets[np.arange(actions.size), actions] = self.td_targets(rewards, next_states, terminal)
        train_cfg = TrainConfig(
            learning_rate=self.cfg.learning_rate,
            batch_size=self.cfg.batch_size,
            epochs=1,
            loss="mse",
            seed=self.cfg.seed,
        )
        return self.qnet.train_step(states, targets, train_cfg)

    def record(self, t: Transition) -> Optional[float]:
        self.buffer.push(t)
        loss = self.learn()
        self.steps += 1
        if self.steps % self.cfg.target_update_interval == 0:
            self.target.copy_from(self.qnet)
            self.target_syncs += 1
        return loss


@dataclass
class TrainingOutcome:
    agent: QAgent
    log: List[dict] = field(default_factory=list)
    episodes: int = 0

    def log_lines(self) -> str:
        return "".join(json.dumps(entry, sort_keys=True) + "\n" for entry in self.log)


def train(
    cfg: NetworkConfig,
    p: RadioParams,
    backend: ClusteringBackend,
    dqn: DqnConfig,
    topology: Optional[NetworkState] = None,
) -> TrainingOutcome:
    """Episodic DQN training; the log holds one entry per environment step."""
    env = RlcEnvironment(cfg, p, backend, topology)
    agent = QAgent.create(env._base.n_nodes, dqn)
    explore = stream(dqn.seed, "dqn-explore")
    outcome = TrainingOutcome(agent)

    obs: Optional[np.ndarray] = None
    losses: List[float] = []
    for step in range(dqn.total_steps):
        if obs is None:
            obs = env.reset()
            outcome.episodes += 1
        eps = agent.epsilon(step)
        action = env.forced_action() or select_action(agent.qnet, obs, eps, explore)
        next_obs, r, terminal, _ = env.step(action)
        loss = agent.record(Transition(obs, action, r, next_obs, terminal))
        if loss is not None:
            losses.append(loss)
        outcome.log.append(
            {
                "step": step + 1,
                "episode": outcome.episodes,
                "round": env.state.round,
                "action": action.value,
                "reward": r,
                "loss": loss,
                "epsilon": eps,
            }
        )
        obs = None if terminal else next_obs
        if (step + 1) % dqn.log_interval == 0:
            logger.info(
                "DQN training progress",
                extra={
                    "component": "dqn_agent",
                    "step": step + 1,
                    "episode": outcome.episodes,
                    "epsilon": eps,
                    "mean_loss": float(np.mean(losses)) if losses else None,
                },
            )
            losses = []

    logger.info(
        "DQN training finished",
        extra={"component": "dqn_agent", "steps": dqn.total_steps, "episodes": outcome.episodes},
    )
    return outcome


def save_training_log(outcome: TrainingOutcome, path: Path) -> Path:
    return write_text_atomic(path, outcome.log_lines())


def load_policy(path: Path, n_nodes: Optional[int] = None) -> Mlp:
    qnet = Mlp.load(path)
    if qnet.spec.layer_sizes[-1] != 2:
        raise DimensionError(f"{path}: not a two-action Q network")
    if n_nodes is not None and qnet.spec.layer_sizes[0] != observation_size(n_nodes):
        raise DimensionError(
            f"{path}: policy expects {qnet.spec.layer_sizes[0]} inputs, network needs {observation_size(n_nodes)}"
        )
    return qnet


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------
class RlcProtocol(IClusteringProtocol):
    """Greedy trained policy; a1 rounds call the exact solver."""
    name = "leach-rlc"
    centralized = True

    def __init__(self, qnet: Mlp, p: RadioParams, w: MilpWeights):
        self.qnet = qnet
        self.p = p
        self.w = w
        self.actions: List[Action] = []

    def reset(self, state: NetworkState) -> None:
        if self.qnet.spec.layer_sizes[0] != observation_size(state.n_nodes):
            raise DimensionError("policy input width does not match the network size")
        self.actions = []

    def decide(self, state: NetworkState) -> Optional[ClusteringSolution]:
        if state.round == 0 or state.solution is None:
            action = Action.A1
        else:
            action = select_action(self.qnet, encode(state), 0.0)
        state.last_action = action
        self.actions.append(action)
        if action == Action.A2:
            return None
        return solve_exact(state, self.p, self.w, cluster_count(state.cfg.k_fraction, state.alive_count))


def evaluate(
    qnet: Mlp,
    cfg: NetworkConfig,
    p: RadioParams,
    w: MilpWeights = MilpWeights(),
    stop: StopRule = StopRule.all_dead(),
    state: Optional[NetworkState] = None,
) -> Tuple[SimResult, List[Action]]:
    """Greedy rollout with the exact solver until the stop rule fires."""
    protocol = RlcProtocol(qnet, p, w)
    try:
        result = run_simulation(cfg, protocol, p, stop, state)
    except WsnError:
        logger.error(
            "LEACH-RLC evaluation failed",
            extra={"component": "dqn_agent", "seed": cfg.seed, "rounds": len(protocol.actions)},
        )
        raise
    return result, list(protocol.actions)
