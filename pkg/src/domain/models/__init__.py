# Makes the models directory a package
from .radio import RadioParams
from .network import Action, NetworkConfig, NetworkState, Role
from .clustering import ClusteringSolution, MilpWeights
from .metrics import ROUNDS_CSV_COLUMNS, RoundMetrics, SimResult, StopRule
from .learning import DqnConfig, MlpSpec, TrainConfig, Transition

__all__ = [
    "RadioParams",
    "Action",
    "NetworkConfig",
    "NetworkState",
    "Role",
    "ClusteringSolution",
    "MilpWeights",
    "ROUNDS_CSV_COLUMNS",
    "RoundMetrics",
    "SimResult",
    "StopRule",
    "DqnConfig",
    "MlpSpec",
    "TrainConfig",
    "Transition",
]
