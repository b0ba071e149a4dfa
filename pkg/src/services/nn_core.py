"""
Minimal multilayer perceptron engine shared by the DQN agent and the surrogate
predictors: ReLU hidden layers with inverted dropout, identity / sigmoid /
row-wise softmax heads, MSE / BCE / CCE losses and Adam.

Each head is paired with its natural loss (identity-MSE, sigmoid-BCE,
softmax-CCE) so the output delta is computed in closed form from the logits.

Checkpoint format (``.npz``, little-endian float64):
    meta   0-d unicode array holding JSON {"format", "version", "spec"}
    W{l}   weight matrix of layer l, shape (fan_in, fan_out)
    b{l}   bias vector of layer l
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from src.domain.errors import DimensionError, MissingArtifactError, NonFiniteLossError, SchemaError
from src.domain.models import MlpSpec, TrainConfig
from src.utils.rng import stream
from sb_utils.logger_utils import logger

CHECKPOINT_FORMAT = "wsn-rlc-mlp"
CHECKPOINT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _log_softmax_rows(z: np.ndarray, width: int) -> np.ndarray:
    rows = z.reshape(z.shape[0], -1, width)
    shifted = rows - rows.max(axis=2, keepdims=True)
    return (shifted - np.log(np.exp(shifted).sum(axis=2, keepdims=True))).reshape(z.shape)


class Mlp:
    """Fully connected network; weights are float64 and seed-derived."""

    def __init__(self, spec: MlpSpec, seed: int = 0):
        self.spec = spec
        self.seed = seed
        rng = stream(seed, "mlp-init")
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
            limit = math.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._dropout_rng = stream(seed, "mlp-dropout")
        self._m = [np.zeros_like(p) for p in self.parameters()]
        self._v = [np.zeros_like(p) for p in self.parameters()]
        self._t = 0

    # ------------------------------------------------------------------
    # parameters
    # ------------------------------------------------------------------
    def parameters(self) -> List[np.ndarray]:
        out: List[np.ndarray] = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def copy_from(self, other: "Mlp") -> None:
        """Overwrite weights with ``other``'s (target-network sync)."""
        for dst, src in zip(self.parameters(), other.parameters()):
            dst[...] = src

    def clone(self) -> "Mlp":
        twin = Mlp(self.spec, self.seed)
        twin.copy_from(self)
        return twin

    # ------------------------------------------------------------------
    # forward / backward
    # ------------------------------------------------------------------
    def _as_batch(self, x: np.ndarray) -> Tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.ndim != 2 or batch.shape[1] != self.spec.layer_sizes[0]:
            raise DimensionError(
                f"expected input width {self.spec.layer_sizes[0]}, got shape {x.shape}"
            )
        return batch, single

    def _activate_output(self, z: np.ndarray) -> np.ndarray:
        kind = self.spec.output_activation
        if kind == "sigmoid":
            return _sigmoid(z)
        if kind == "softmax-rows":
            return np.exp(_log_softmax_rows(z, self.spec.row_width))
        return z

    def _run(self, X: np.ndarray, train: bool):
        inputs, pre, masks = [], [], []
        a = X
        last = len(self.weights) - 1
        for layer, (W, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(a)
            z = a @ W + b
            if layer == last:
                return z, (inputs, pre, masks)
            pre.append(z)
            a = np.maximum(z, 0.0)
            rate = self.spec.dropout_rate
            if train and rate > 0:
                mask = (self._dropout_rng.random(a.shape) >= rate) / (1.0 - rate)
                a = a * mask
            else:
                mask = None
            masks.append(mask)
        raise DimensionError("network has no layers")

    def forward(self, x: np.ndarray, mode: str = "eval") -> np.ndarray:
        """Outputs for one sample (1-D) or a batch (2-D). Dropout only in ``train`` mode."""
        batch, single = self._as_batch(x)
        logits, _ = self._run(batch, train=(mode == "train"))
        out = self._activate_output(logits)
        return out[0] if single else out

    def _loss_and_delta(self, logits: np.ndarray, Y: np.ndarray, loss: str) -> Tuple[float, np.ndarray]:
        if loss == "mse":
            diff = logits - Y
            return float(np.mean(diff * diff)), 2.0 * diff / diff.size
        if loss == "bce":
            value = np.mean(np.logaddexp(0.0, logits) - Y * logits)
            return float(value), (_sigmoid(logits) - Y) / logits.size
        width = self.spec.row_width
        logp = _log_softmax_rows(logits, width)
        n_rows = logits.size // width
        value = -float((Y * logp).sum()) / n_rows
        Yr = Y.reshape(Y.shape[0], -1, width)
        probs = np.exp(logp).reshape(Yr.shape)
        delta = probs * Yr.sum(axis=2, keepdims=True) - Yr
        return value, delta.reshape(logits.shape) / n_rows

    def loss(self, X: np.ndarray, Y: np.ndarray, loss: Optional[str] = None) -> float:
        X, _ = self._as_batch(X)
        logits, _ = self._run(X, train=False)
        value, _ = self._loss_and_delta(logits, np.atleast_2d(np.asarray(Y, dtype=float)), loss or self.spec.loss_pairing)
        return value

    def gradients(
        self, X: np.ndarray, Y: np.ndarray, loss: Optional[str] = None, train: bool = False
    ) -> Tuple[float, List[np.ndarray]]:
        """Mean batch loss and gradients aligned with ``parameters()``."""
        loss = loss or self.spec.loss_pairing
        if loss != self.spec.loss_pairing:
            raise ValueError(
                f"{self.spec.output_activation} head trains with {self.spec.loss_pairing}, not {loss}"
            )
        X, _ = self._as_batch(X)
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape != (X.shape[0], self.spec.layer_sizes[-1]):
            raise DimensionError(f"target shape {Y.shape} does not match output")
        logits, (inputs, pre, masks) = self._run(X, train)
        value, delta = self._loss_and_delta(logits, Y, loss)
        grads: List[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        for layer in range(len(self.weights) - 1, -1, -1):
            grads[2 * layer] = inputs[layer].T @ delta
            grads[2 * layer + 1] = delta.sum(axis=0)
            if layer == 0:
                break
            delta = delta @ self.weights[layer].T
            if masks[layer - 1] is not None:
                delta = delta * masks[layer - 1]
            delta = delta * (pre[layer - 1] > 0)
        return value, grads

    # ------------------------------------------------------------------
    # training
    # ------------------------------------------------------------------
    def train_step(self, X: np.ndarray, Y: np.ndarray, cfg: TrainConfig) -> float:
        """One Adam update; returns the pre-update mean batch loss."""
        value, grads = self.gradients(X, Y, cfg.loss, train=True)
        if not math.isfinite(value):
            raise NonFiniteLossError(
                "non-finite training loss",
                diagnostics={
                    "loss": value,
                    "step": self._t,
                    "max_abs_weight": max(float(np.abs(W).max()) for W in self.weights),
                    "input_finite": bool(np.isfinite(np.asarray(X)).all()),
                    "target_finite": bool(np.isfinite(np.asarray(Y)).all()),
                },
            )
        self._t += 1
        lr = cfg.learning_rate
        c1 = 1.0 - ADAM_BETA1 ** self._t
        c2 = 1.0 - ADAM_BETA2 ** self._t
        for param, g, m, v in zip(self.parameters(), grads, self._m, self._v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            param -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
        return value

    def fit(self, X: np.ndarray, Y: np.ndarray, cfg: TrainConfig, log_every: int = 10) -> List[float]:
        """Shuffled minibatch epochs; returns the mean loss of every epoch."""
        rng = stream(cfg.seed, "mlp-batches")
        n = X.shape[0]
        history: List[float] = []
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            losses = []
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                losses.append(self.train_step(X[idx], Y[idx], cfg))
            history.append(float(np.mean(losses)) if losses else 0.0)
            if (epoch + 1) % log_every == 0 or epoch + 1 == cfg.epochs:
                logger.info(
                    "Epoch complete",
                    extra={"component": "nn_core", "epoch": epoch + 1, "loss": history[-1]},
                )
        return history

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------
    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = json.dumps(
            {
                "format": CHECKPOINT_FORMAT,
                "version": CHECKPOINT_VERSION,
                "seed": self.seed,
                "spec": self.spec.model_dump(),
            },
            sort_keys=True,
        )
        arrays = {"meta": np.array(meta)}
        for layer, (W, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"W{layer}"] = W.astype("<f8")
            arrays[f"b{layer}"] = b.astype("<f8")
        with open(path, "wb") as f:
            np.savez(f, **arrays)
        return path

    @classmethod
    def load(cls, path: Path) -> "Mlp":
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(f"checkpoint not found: {path}")
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("format") != CHECKPOINT_FORMAT or meta.get("version") != CHECKPOINT_VERSION:
                raise SchemaError(f"{path}: unsupported checkpoint {meta.get('format')} v{meta.get('version')}")
            net = cls(MlpSpec(**meta["spec"]), meta.get("seed", 0))
            for layer in range(len(net.weights)):
                W, b = data[f"W{layer}"], data[f"b{layer}"]
                if W.shape != net.weights[layer].shape or b.shape != net.biases[layer].shape:
                    raise SchemaError(f"{path}: layer {layer} shape mismatch")
                net.weights[layer][...] = W
                net.biases[layer][...] = b
        return net


def grad_check(net: Mlp, x: np.ndarray, target: np.ndarray, loss: Optional[str] = None, h: float = 1e-5) -> float:
    """
    Max relative error between analytic gradients and central differences,
    dropout disabled. The denominator has a 1e-4 floor so parameters with
    near-zero gradient do not dominate.
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    Y = np.atleast_2d(np.asarray(target, dtype=float))
    loss = loss or net.spec.loss_pairing
    _, analytic = net.gradients(X, Y, loss, train=False)
    worst = 0.0
    for param, grad in zip(net.parameters(), analytic):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            up = net.loss(X, Y, loss)
            flat[i] = saved - h
            down = net.loss(X, Y, loss)
            flat[i] = saved
            numeric = (up - down) / (2 * h)
            denom = max(abs(numeric), abs(gflat[i]), 1e-4)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst
