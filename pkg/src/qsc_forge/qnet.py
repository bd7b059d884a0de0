"""Q-network, replay buffer, and TD update rules on plain numpy.

The network is a fixed stack input -> 128 -> 64 -> 32 -> 3 with ReLU hidden
activations and a linear head. Learning is one-step TD against a frozen
target copy:

    target = r + gamma * max_a' Q_target(s', a')   (non-terminal)
    target = r                                      (terminal)

optimized by Adam on the mean squared error of the taken action's Q-value
only. Everything is float64 so analytic gradients can be checked tightly
against central finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError

HIDDEN_DIMS = (128, 64, 32)
N_ACTIONS = 3

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    """Training knobs; defaults are the reference configuration."""

    learning_rate: float = 0.001
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_anneal_episodes: int = 2000
    batch_size: int = 64
    buffer_capacity: int = 10_000
    update_every_steps: int = 10
    target_sync_every_steps: int = 100

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        if self.epsilon_end > self.epsilon_start:
            raise ConfigError("epsilon_end must not exceed epsilon_start")
        for name in (
            "epsilon_anneal_episodes",
            "batch_size",
            "buffer_capacity",
            "update_every_steps",
            "target_sync_every_steps",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)!r}")


@dataclass(eq=False)
class NetworkParams:
    """Weights (fan_in x fan_out) and biases for each layer of the stack."""

    weights: list
    biases: list

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_dims(self) -> tuple:
        return (self.input_dim,) + tuple(w.shape[1] for w in self.weights)

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_params(seed: int, input_dim: int) -> tuple[NetworkParams, NetworkParams]:
    """He-uniform weights, zero biases; returns (online, identical target copy)."""
    if input_dim < 1:
        raise ConfigError(f"input_dim must be >= 1, got {input_dim!r}")
    rng = np.random.default_rng(seed)
    dims = (input_dim, *HIDDEN_DIMS, N_ACTIONS)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    params = NetworkParams(weights, biases)
    return params, params.copy()


def forward(params: NetworkParams, features) -> np.ndarray:
    """Q-values (3,) for a single feature vector."""
    x = np.asarray(features, dtype=float)
    if x.shape != (params.input_dim,):
        raise ValueError(f"expected features of shape ({params.input_dim},), got {x.shape}")
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        x = np.maximum(x @ w + b, 0.0)
    return x @ params.weights[-1] + params.biases[-1]


def forward_batch(params: NetworkParams, features) -> np.ndarray:
    """Q-values (B, 3) for a batch of feature vectors (B, input_dim)."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ValueError(f"expected features of shape (B, {params.input_dim}), got {x.shape}")
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        x = np.maximum(x @ w + b, 0.0)
    return x @ params.weights[-1] + params.biases[-1]


def _forward_cached(params: NetworkParams, x: np.ndarray):
    """Forward pass keeping pre-activations and activations for backprop."""
    pre, acts = [], [x]
    a = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    q = a @ params.weights[-1] + params.biases[-1]
    return pre, acts, q


def _backward(params: NetworkParams, pre, acts, delta):
    """Chain rule from dL/dq back through the stack; returns (dW list, db list)."""
    n_layers = len(params.weights)
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers
    grads_w[-1] = acts[-1].T @ delta
    grads_b[-1] = delta.sum(axis=0)
    for layer in range(n_layers - 2, -1, -1):
        delta = (delta @ params.weights[layer + 1].T) * (pre[layer] > 0.0)
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
    return grads_w, grads_b


def network_gradients(params: NetworkParams, features, dLdq):
    """Parameter gradients for an arbitrary output-side gradient dL/dq (B, 3)."""
    x = np.asarray(features, dtype=float)
    pre, acts, _ = _forward_cached(params, x)
    return _backward(params, pre, acts, np.asarray(dLdq, dtype=float))


def loss_and_gradients(params: NetworkParams, features, actions, targets):
    """TD loss mean((target - Q(s, a))^2) and its parameter gradients.

    Gradients flow only through the taken action's output.
    """
    x = np.asarray(features, dtype=float)
    acts_idx = np.asarray(actions, dtype=int)
    t = np.asarray(targets, dtype=float)
    pre, acts, q = _forward_cached(params, x)
    batch = x.shape[0]
    taken = q[np.arange(batch), acts_idx]
    resid = taken - t
    loss = float(np.mean(resid**2))
    delta = np.zeros_like(q)
    delta[np.arange(batch), acts_idx] = 2.0 * resid / batch
    grads_w, grads_b = _backward(params, pre, acts, delta)
    return loss, grads_w, grads_b


@dataclass(frozen=True, eq=False)
class Transition:
    """One (s, a, r, s', done) tuple of the replay memory."""

    state_features: np.ndarray
    action: int
    reward: float
    next_features: np.ndarray
    done: bool


class ReplayBuffer:
    """Ring buffer of transitions; the oldest entry is evicted first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity!r}")
        self.capacity = capacity
        self._items: list = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample with replacement, or None while underfilled.

        None is the not-ready signal: callers skip the update and keep going.
        """
        if len(self._items) < batch_size:
            return None
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]


def td_targets(batch, target_params: NetworkParams, gamma: float) -> np.ndarray:
    """Per-sample TD targets; terminal transitions cut the bootstrap term."""
    if not batch:
        raise ValueError("empty batch")
    next_x = np.stack([t.next_features for t in batch])
    bootstrap = forward_batch(target_params, next_x).max(axis=1)
    rewards = np.array([t.reward for t in batch], dtype=float)
    alive = np.array([not t.done for t in batch], dtype=float)
    return rewards + gamma * bootstrap * alive


@dataclass(eq=False)
class AdamState:
    """First/second moment accumulators and step counter for Adam."""

    m_w: list
    v_w: list
    m_b: list
    v_b: list
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_params(cls, params: NetworkParams) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in params.weights],
            v_w=[np.zeros_like(w) for w in params.weights],
            m_b=[np.zeros_like(b) for b in params.biases],
            v_b=[np.zeros_like(b) for b in params.biases],
        )

    def apply(self, params: NetworkParams, grads_w, grads_b, lr: float) -> None:
        """One Adam step, updating the parameters in place."""
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in (
            *zip(params.weights, grads_w, self.m_w, self.v_w),
            *zip(params.biases, grads_b, self.m_b, self.v_b),
        ):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train_step(
    params: NetworkParams,
    target_params: NetworkParams,
    batch,
    adam: AdamState,
    lr: float,
    gamma: float,
) -> float:
    """One optimizer step on a replay batch; returns the scalar loss."""
    targets = td_targets(batch, target_params, gamma)
    x = np.stack([t.state_features for t in batch])
    actions = np.array([t.action for t in batch], dtype=int)
    loss, grads_w, grads_b = loss_and_gradients(params, x, actions, targets)
    if not math.isfinite(loss):
        raise NumericalError(f"training loss is not finite (loss={loss!r}, adam step {adam.t})")
    adam.apply(params, grads_w, grads_b, lr)
    return loss


def sync_target(params: NetworkParams, target_params: NetworkParams) -> NetworkParams:
    """Hard copy online -> target, in place; returns the target for convenience."""
    for src, dst in zip(params.weights, target_params.weights):
        np.copyto(dst, src)
    for src, dst in zip(params.biases, target_params.biases):
        np.copyto(dst, src)
    return target_params


def epsilon_at(episode: int, hp: Hyperparams) -> float:
    """Linearly annealed exploration rate, clamped at epsilon_end."""
    if episode < 0:
        raise ValueError(f"episode must be >= 0, got {episode!r}")
    span = hp.epsilon_start - hp.epsilon_end
    return max(hp.epsilon_end, hp.epsilon_start - episode * span / hp.epsilon_anneal_episodes)


def save_checkpoint(
    path,
    params: NetworkParams,
    target_params: NetworkParams,
    adam: AdamState,
    rng: np.random.Generator,
) -> None:
    """Versioned npz dump of shapes, parameters, optimizer moments and rng state."""
    arrays = {
        "version": np.array(CHECKPOINT_VERSION, dtype=np.int64),
        "layer_dims": np.array(params.layer_dims, dtype=np.int64),
        "adam_t": np.array(adam.t, dtype=np.int64),
        "adam_coeffs": np.array([adam.beta1, adam.beta2, adam.eps]),
        "rng_state": np.frombuffer(
            json.dumps(rng.bit_generator.state).encode("utf-8"), dtype=np.uint8
        ),
    }
    for i in range(len(params.weights)):
        arrays[f"w{i}"] = params.weights[i]
        arrays[f"b{i}"] = params.biases[i]
        arrays[f"tw{i}"] = target_params.weights[i]
        arrays[f"tb{i}"] = target_params.biases[i]
        arrays[f"mw{i}"] = adam.m_w[i]
        arrays[f"vw{i}"] = adam.v_w[i]
        arrays[f"mb{i}"] = adam.m_b[i]
        arrays[f"vb{i}"] = adam.v_b[i]
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Inverse of save_checkpoint; restores bitwise-identical forward outputs.

    Returns (params, target_params, adam_state, rng).
    """
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        dims = tuple(int(d) for d in data["layer_dims"])
        n_layers = len(dims) - 1
        params = NetworkParams(
            [data[f"w{i}"] for i in range(n_layers)],
            [data[f"b{i}"] for i in range(n_layers)],
        )
        target = NetworkParams(
            [data[f"tw{i}"] for i in range(n_layers)],
            [data[f"tb{i}"] for i in range(n_layers)],
        )
        coeffs = data["adam_coeffs"]
        adam = AdamState(
            m_w=[data[f"mw{i}"] for i in range(n_layers)],
            v_w=[data[f"vw{i}"] for i in range(n_layers)],
            m_b=[data[f"mb{i}"] for i in range(n_layers)],
            v_b=[data[f"vb{i}"] for i in range(n_layers)],
            t=int(data["adam_t"]),
            beta1=float(coeffs[0]),
            beta2=float(coeffs[1]),
            eps=float(coeffs[2]),
        )
        rng = np.random.default_rng()
        rng.bit_generator.state = json.loads(bytes(data["rng_state"]).decode("utf-8"))
    if params.layer_dims != dims:
        raise ConfigError("checkpoint layer shapes are inconsistent")
    return params, target, adam, rng
