"""Fully connected softmax network with hand-written backpropagation and AdamW."""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.special import softmax

from .density import DiscreteDensity
from .grid import Grid

ACTIVATIONS = ("tanh", "softplus")
CHECKPOINT_MAGIC = b"BINCONF-CKPT"
CHECKPOINT_VERSION = 1


class ConfigError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of the network.

    ``n_layers`` counts hidden layers; each is affine + activation, followed
    by a final affine map to ``k_bins`` outputs.
    """

    input_dim: int
    hidden_dim: int = 64
    n_layers: int = 3
    k_bins: int = 50
    seed: int = 0
    activation: str = "softplus"

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "n_layers", "k_bins"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim] + [self.hidden_dim] * self.n_layers + [self.k_bins]
        return list(zip(dims[:-1], dims[1:]))


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 100

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie in [0, 1)")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")


@dataclass
class ModelState:
    """Parameters plus AdamW moment estimates."""

    config: ModelConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    step: int = 0

    def params(self) -> list[np.ndarray]:
        # interleaved W0, b0, W1, b1, ...
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "ModelState":
        return ModelState(
            self.config,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            [a.copy() for a in self.m],
            [a.copy() for a in self.v],
            self.step,
        )


def init_model(cfg: ModelConfig) -> ModelState:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, seeded."""
    rng = np.random.default_rng(cfg.seed)
    weights, biases = [], []
    for fan_in, fan_out in cfg.layer_shapes():
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    state = ModelState(cfg, weights, biases)
    state.m = [np.zeros_like(a) for a in state.params()]
    state.v = [np.zeros_like(a) for a in state.params()]
    return state


def _act(name, a):
    if name == "tanh":
        return np.tanh(a)
    return np.logaddexp(0.0, a)


def _act_grad(name, a, h):
    if name == "tanh":
        return 1.0 - h * h
    return 0.5 * (1.0 + np.tanh(0.5 * a))  # logistic sigmoid, overflow-safe


def _check_inputs(m: ModelState, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != m.config.input_dim:
        raise ValueError(f"expected {m.config.input_dim} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    return X


def predict_logits(m: ModelState, X) -> np.ndarray:
    """Network outputs for a batch of feature rows, shape ``(n, K)``."""
    h = _check_inputs(m, X)
    last = len(m.weights) - 1
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        h = h @ w + b
        if i < last:
            h = _act(m.config.activation, h)
    return h


def predict_probs(m: ModelState, X) -> np.ndarray:
    return softmax(predict_logits(m, X), axis=-1)


def forward(m: ModelState, x, grid: Grid):
    """Logits and the softmax density for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("forward expects a single feature vector")
    logits = predict_logits(m, x[None, :])[0]
    return logits, DiscreteDensity(grid, softmax(logits))


def backprop(m: ModelState, X, out_grad_fn):
    """Mean loss and parameter gradients for a batch.

    ``out_grad_fn(outputs)`` must return per-sample losses ``(n,)`` and their
    gradients w.r.t. the outputs ``(n, K)``. Returned gradients follow the
    ordering of ``ModelState.params()``.
    """
    act = m.config.activation
    pre, post = [], [X]
    h = X
    last = len(m.weights) - 1
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        a = h @ w + b
        if i < last:
            pre.append(a)
            h = _act(act, a)
            post.append(h)
        else:
            h = a
    losses, dout = out_grad_fn(h)
    n = X.shape[0]
    delta = dout / n
    grads = [None] * (2 * len(m.weights))
    for i in range(last, -1, -1):
        grads[2 * i] = post[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ m.weights[i].T) * _act_grad(act, pre[i - 1], post[i])
    return float(np.mean(losses)), grads


def adamw_update(m: ModelState, grads, opt: OptimizerConfig) -> None:
    """One AdamW step in place: decoupled weight decay then the Adam update."""
    m.step += 1
    lr = opt.learning_rate
    bc1 = 1.0 - opt.beta1 ** m.step
    bc2 = 1.0 - opt.beta2 ** m.step
    for p, g, m1, m2 in zip(m.params(), grads, m.m, m.v):
        m1 *= opt.beta1
        m1 += (1.0 - opt.beta1) * g
        m2 *= opt.beta2
        m2 += (1.0 - opt.beta2) * g * g
        if opt.weight_decay:
            p -= lr * opt.weight_decay * p
        p -= lr * (m1 / bc1) / (np.sqrt(m2 / bc2) + opt.epsilon)


LossFn = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def train_step(m: ModelState, X, y, loss_fn: LossFn, opt: OptimizerConfig, where: str = "") -> float:
    """Update ``m`` in place with one AdamW step on the batch.

    Returns the mean batch loss evaluated before the update.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) == 0:
        raise ValueError("empty batch")
    loss, grads = backprop(m, X, lambda out: loss_fn(out, y))
    if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
        raise TrainingDivergedError(f"non-finite loss or gradient{' at ' + where if where else ''}")
    adamw_update(m, grads, opt)
    if not all(np.all(np.isfinite(p)) for p in m.params()):
        raise TrainingDivergedError(f"non-finite parameters{' at ' + where if where else ''}")
    return loss


def fit(m: ModelState, X, y, loss_fn: LossFn, opt: OptimizerConfig, seed: int = 0) -> list[float]:
    """Train ``m`` in place for ``opt.epochs`` seeded shuffled passes.

    Returns the mean per-sample loss of each epoch.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(X)
    if n == 0:
        raise ValueError("cannot fit on an empty training set")
    rng = np.random.default_rng(seed)
    history = []
    bs = opt.batch_size
    for epoch in range(opt.epochs):
        order = rng.permutation(n)
        total = 0.0
        for j, start in enumerate(range(0, n, bs)):
            idx = order[start:start + bs]
            loss = train_step(m, X[idx], y[idx], loss_fn, opt, where=f"epoch {epoch}, batch {j}")
            total += loss * len(idx)
        history.append(total / n)
    return history


# -- checkpoints -------------------------------------------------------------

def dump_checkpoint(m: ModelState, meta: dict | None = None) -> bytes:
    """Serialize config, parameters and optimizer moments.

    Layout: magic, little-endian uint32 version, uint64 header length, a JSON
    header, then every tensor as little-endian float64 in row-major order.
    """
    tensors = m.params() + m.m + m.v
    header = {
        "config": asdict(m.config),
        "step": m.step,
        "shapes": [list(t.shape) for t in tensors],
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    parts = [CHECKPOINT_MAGIC, struct.pack("<IQ", CHECKPOINT_VERSION, len(hbytes)), hbytes]
    parts.extend(np.ascontiguousarray(t, dtype="<f8").tobytes() for t in tensors)
    return b"".join(parts)


def load_checkpoint(raw: bytes) -> tuple[ModelState, dict]:
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise ValueError("not a checkpoint file")
    off = len(CHECKPOINT_MAGIC)
    version, hlen = struct.unpack_from("<IQ", raw, off)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    off += struct.calcsize("<IQ")
    header = json.loads(raw[off:off + hlen])
    off += hlen
    tensors = []
    for shape in header["shapes"]:
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape).astype(float)
        tensors.append(arr)
        off += 8 * count
    if off != len(raw):
        raise ValueError("trailing bytes in checkpoint")
    cfg = ModelConfig(**header["config"])
    n_params = 2 * len(cfg.layer_shapes())
    params, m1, m2 = tensors[:n_params], tensors[n_params:2 * n_params], tensors[2 * n_params:]
    state = ModelState(cfg, params[0::2], params[1::2], m1, m2, int(header["step"]))
    return state, header["meta"]
