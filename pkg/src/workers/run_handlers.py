"""
Simulation jobs for the experiment process pool.

Jobs are plain picklable values; each worker rebuilds its own protocol and
network state, so runs share nothing. Results come back in submission order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, TypeVar

from src.domain.errors import MissingArtifactError
from src.domain.models import MilpWeights, NetworkConfig, RadioParams, SimResult, StopRule
from src.domain.protocols import IClusteringProtocol
from src.services.dqn_agent import RlcProtocol, load_policy
from src.services.net_model import load_topology
from src.services.protocol_leach import LeachProtocol
from src.services.protocol_leach_c import LeachCProtocol
from src.services.protocol_milp import MilpProtocol
from src.services.sim_engine import run_simulation
from sb_utils.logger_utils import logger

T = TypeVar("T")
R = TypeVar("R")

PROTOCOLS = ("leach", "leach-c", "leach-rlc", "milp")


@dataclass(frozen=True)
class SimulationJob:
    protocol: str
    network: NetworkConfig
    radio: RadioParams
    weights: MilpWeights
    stop: StopRule
    policy_path: Optional[str] = None
    topology_path: Optional[str] = None
    period: int = 1


def make_protocol(
    name: str,
    p: RadioParams,
    w: MilpWeights,
    policy_path: Optional[Path] = None,
    n_nodes: Optional[int] = None,
    period: int = 1,
) -> IClusteringProtocol:
    if name == "leach":
        return LeachProtocol()
    if name == "leach-c":
        return LeachCProtocol()
    if name == "milp":
        return MilpProtocol(p, w, period)
    if name == "leach-rlc":
        if policy_path is None or not Path(policy_path).exists():
            raise MissingArtifactError(
                f"no trained LEACH-RLC policy at {policy_path}; run the train-agent command first"
            )
        return RlcProtocol(load_policy(Path(policy_path), n_nodes), p, w)
    raise ValueError(f"unknown protocol {name!r}; choose from {', '.join(PROTOCOLS)}")


def handle_simulation(job: SimulationJob) -> SimResult:
    state = None
    cfg = job.network
    if job.topology_path:
        state = load_topology(Path(job.topology_path), cfg)
        cfg = state.cfg
    protocol = make_protocol(
        job.protocol, job.radio, job.weights, job.policy_path, cfg.n_nodes, job.period
    )
    return run_simulation(cfg, protocol, job.radio, job.stop, state)


def run_jobs(fn: Callable[[T], R], jobs: Sequence[T], workers: int = 1) -> List[R]:
    """Map ``fn`` over ``jobs``; a process pool is used when more than one worker is allowed."""
    workers = max(1, min(workers, len(jobs)))
    logger.info(
        "Dispatching simulation jobs",
        extra={"component": "run_handlers", "jobs": len(jobs), "workers": workers},
    )
    if workers == 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))
