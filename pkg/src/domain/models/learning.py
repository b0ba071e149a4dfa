from __future__ import annotations

from dataclasses import dataclass
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .network import Action


class MlpSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    layer_sizes: List[int]
    hidden_activation: Literal["relu"] = "relu"
    output_activation: Literal["identity", "sigmoid", "softmax-rows"] = "identity"
    row_width: int = Field(1, ge=1)
    dropout_rate: float = Field(0.2, ge=0, lt=1)

    @model_validator(mode="after")
    def _check_layers(self):
        if len(self.layer_sizes) < 2 or any(n < 1 for n in self.layer_sizes):
            raise ValueError("need at least an input and an output layer of positive width")
        if self.output_activation == "softmax-rows" and self.layer_sizes[-1] % self.row_width:
            raise ValueError("output width must be a multiple of row_width")
        return self

    @property
    def loss_pairing(self) -> str:
        return {"identity": "mse", "sigmoid": "bce", "softmax-rows": "cce"}[self.output_activation]


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = Field(1e-4, ge=0)
    batch_size: int = Field(16, ge=1)
    epochs: int = Field(200, ge=0)
    loss: Literal["bce", "cce", "mse"] = "mse"
    seed: int = 0


class DqnConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = Field(1e-4, gt=0)
    discount: float = Field(0.90, ge=0, lt=1)
    epsilon_start: float = Field(0.8, ge=0, le=1)
    epsilon_end: float = Field(0.05, ge=0, le=1)
    epsilon_decay_fraction: float = Field(0.5, ge=0, le=1)
    batch_size: int = Field(128, ge=1)
    target_update_interval: int = Field(100, ge=1)
    total_steps: int = Field(50_000, ge=0)
    buffer_capacity: int = Field(50_000, ge=1)
    hidden_sizes: List[int] = Field(default_factory=lambda: [256, 256])
    seed: int = 0
    log_interval: int = Field(1000, ge=1)

    @property
    def epsilon_decay_steps(self) -> int:
        return int(self.total_steps * self.epsilon_decay_fraction)


ACTION_INDEX = {Action.A1: 0, Action.A2: 1}
INDEX_ACTION = {0: Action.A1, 1: Action.A2}
REWARD_VALUES = (1.0, 1.1, 2.0)


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: Action
    reward: float
    next_state: np.ndarray
    terminal: bool

    def __post_init__(self):
        if self.reward not in REWARD_VALUES:
            raise ValueError(f"reward {self.reward} is not one of {REWARD_VALUES}")
