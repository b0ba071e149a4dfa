import os
import sys
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from src.domain.errors import ConfigError
from src.domain.models import DqnConfig, MilpWeights, NetworkConfig, RadioParams
from sb_utils.validation import describe_validation_error


class Settings(BaseSettings):
    """
    Process settings loaded from environment variables (and ``.env``).
    """
    model_config = SettingsConfigDict(env_file='.env', env_file_encoding='utf-8', extra='ignore')

    # --- Logging ---
    LOG_LEVEL: str = "INFO"

    # --- Experiments ---
    WSN_OUT_DIR: Optional[str] = None  # overrides --out-dir when set
    WSN_WORKERS: int = Field(1, ge=0)  # 0 = one worker per CPU

    # --- Tests ---
    WSN_RUN_SLOW: bool = False

    def worker_count(self) -> int:
        return self.WSN_WORKERS or (os.cpu_count() or 1)


# Load settings
settings = Settings()


# --- Experiment file sections ---
class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class SurrogateSection(_Section):
    profile: Literal["desk", "full"] = "desk"
    # clustering backend used while training the agent
    backend: Literal["exact", "surrogate"] = "exact"
    dataset_seeds: List[int] = Field(default_factory=lambda: list(range(3)))
    max_rounds: int = Field(100_000, ge=1)
    test_fraction: float = Field(0.2, gt=0, lt=1)
    seed: int = 0


class SweepSection(_Section):
    alpha: List[float] = Field(default_factory=lambda: [0.0, 25.0, 50.0, 75.0, 100.0])
    beta: List[float] = Field(default_factory=lambda: [0.0, 25.0, 50.0, 75.0, 100.0])
    gamma: List[float] = Field(default_factory=lambda: [0.0, 25.0, 50.0, 75.0, 100.0])
    seeds: List[int] = Field(default_factory=lambda: [0])
    period: int = Field(1, ge=1)
    metric: Literal["fnd", "hnd", "lnd"] = "fnd"
    max_rounds: int = Field(100_000, ge=1)


class CompareSection(_Section):
    seeds: List[int] = Field(default_factory=lambda: list(range(10)))
    protocols: List[Literal["leach", "leach-c", "leach-rlc"]] = Field(
        default_factory=lambda: ["leach", "leach-c", "leach-rlc"]
    )
    heatmap_bins: int = Field(10, ge=1)
    # rounds per bucket of the re-cluster frequency series
    frequency_window: int = Field(100, ge=1)


class PathsSection(_Section):
    policy: str = "artifacts/policy.npz"
    surrogate_dir: str = "artifacts/surrogate"
    dataset: str = "artifacts/dataset.csv"
    topology: Optional[str] = None


class ExperimentConfig(_Section):
    """Whole experiment file; every field defaults to the reference scenario."""
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    radio: RadioParams = Field(default_factory=RadioParams)
    weights: MilpWeights = Field(default_factory=MilpWeights)
    dqn: DqnConfig = Field(default_factory=DqnConfig)
    surrogate: SurrogateSection = Field(default_factory=SurrogateSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    compare: CompareSection = Field(default_factory=CompareSection)
    paths: PathsSection = Field(default_factory=PathsSection)

    _base_dir: Path = PrivateAttr(default_factory=Path.cwd)

    def resolve(self, value: Optional[str]) -> Optional[Path]:
        """Paths in the file are relative to the file's directory."""
        if value is None:
            return None
        path = Path(value)
        return path if path.is_absolute() else self._base_dir / path


def parse_config(text: str, source: str = "<config>", base_dir: Optional[Path] = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        # the decoder message already carries "(at line L, column C)"
        raise ConfigError(f"{source}: invalid TOML", [f"{source}: {e}"]) from e
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{source}: invalid experiment config", describe_validation_error(e, source)) from e
    if base_dir is not None:
        cfg._base_dir = base_dir
    return cfg


def load_config(path: Optional[Path]) -> ExperimentConfig:
    """Read and validate an experiment file; ``None`` gives the built-in defaults."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}", [f"{path}: {e.strerror or e}"]) from e
    return parse_config(text, str(path), path.resolve().parent)
