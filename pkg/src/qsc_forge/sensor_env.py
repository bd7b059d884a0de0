"""Gate-synthesis environment for a small quantum sensor register.

An episode starts from |0...0>. Each action appends one fixed-angle gate to
the circuit under construction: a collective x rotation, a collective y
rotation, or a one-axis-twisting squeeze. The reward is the normalized
quantum Fisher information of the post-action state,

    qfi = 4 Var(Jz) / n^2,

which is 0 for |0...0>, 0.5 for any product state on the Bloch equator, and
1 for the maximally entangled (|0...0> + |1...1>)/sqrt(2). The observation
handed to the agent is the Husimi-Q distribution |<alpha(theta, phi)|psi>|^2
of the current state, sampled on a (theta, phi) grid over the Bloch sphere.
An episode ends as soon as the qfi reaches the configured threshold or the
step cap is hit.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NumericalError, UsageError
from .statevector import (
    MAX_QUBITS,
    StateVector,
    apply_collective_rotation,
    apply_squeeze,
    inner_product,
    jz_diagonal,
    zero_state,
)


class Action(enum.IntEnum):
    """Environment gates with their stable integer encoding."""

    RX = 0
    RY = 1
    S = 2

    @property
    def label(self) -> str:
        return _ACTION_LABELS[self]


_ACTION_LABELS = {Action.RX: "Rx", Action.RY: "Ry", Action.S: "S"}
_LABEL_TO_ACTION = {label.lower(): action for action, label in _ACTION_LABELS.items()}


def parse_action(token: str) -> Action:
    """Parse a gate name ('Rx', 'Ry', 'S', case-insensitive) into an Action."""
    action = _LABEL_TO_ACTION.get(token.strip().lower())
    if action is None:
        known = ", ".join(a.label for a in Action)
        raise ConfigError(f"unknown gate {token!r} (expected one of: {known})")
    return action


class Termination(enum.Enum):
    THRESHOLD_REACHED = "ThresholdReached"
    STEP_CAP_REACHED = "StepCapReached"
    NOT_DONE = "NotDone"


@dataclass(frozen=True)
class EnvConfig:
    """Environment parameters; defaults match the two-qubit sensor task."""

    n_qubits: int = 2
    gate_angle: float = math.pi / 2
    threshold: float = 0.95
    max_steps: int = 10
    grid_theta: int = 8
    grid_phi: int = 8

    def __post_init__(self):
        if not isinstance(self.n_qubits, int) or not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits!r}")
        if not math.isfinite(self.gate_angle):
            raise ConfigError("gate_angle must be finite")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"threshold must lie in (0, 1], got {self.threshold!r}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps!r}")
        if self.grid_theta < 2 or self.grid_phi < 2:
            raise ConfigError("husimi grid must be at least 2x2")

    @property
    def feature_dim(self) -> int:
        return self.grid_theta * self.grid_phi


@dataclass(frozen=True, eq=False)
class StepOutcome:
    """Result of one environment step; reward equals the post-action qfi."""

    features: np.ndarray
    reward: float
    qfi: float
    done: bool
    termination: Termination


def qfi(state: StateVector) -> float:
    """Normalized quantum Fisher information 4 Var(Jz) / n^2, in [0, 1].

    Jz is diagonal in the computational basis, so both moments come straight
    from the measurement probabilities.
    """
    p = state.probabilities()
    total = float(p.sum())
    if abs(total - 1.0) > 1e-6:
        raise NumericalError(f"state norm drifted too far: sum of probabilities = {total!r}")
    m = jz_diagonal(state.n_qubits)
    mean = float(p @ m)
    second = float(p @ (m * m))
    var = second - mean * mean
    scaled = 4.0 * var / state.n_qubits**2
    # Variance lies in [0, n^2/4] exactly; clip only float dust.
    return min(max(scaled, 0.0), 1.0)


def spin_coherent_state(n_qubits: int, theta: float, phi: float) -> StateVector:
    """Product state with every qubit at Bloch angles (theta, phi)."""
    single = np.array(
        [math.cos(theta / 2.0), cmath.exp(1j * phi) * math.sin(theta / 2.0)],
        dtype=np.complex128,
    )
    amps = single
    for _ in range(n_qubits - 1):
        amps = np.kron(amps, single)
    return StateVector(n_qubits, amps)


def husimi_point(state: StateVector, theta: float, phi: float) -> float:
    """Husimi-Q value |<alpha(theta, phi)|psi>|^2 at a single phase-space point."""
    overlap = inner_product(spin_coherent_state(state.n_qubits, theta, phi), state)
    return abs(overlap) ** 2


@lru_cache(maxsize=None)
def _coherent_bras(n_qubits: int, grid_theta: int, grid_phi: int) -> np.ndarray:
    """Rows are <alpha(theta_i, phi_j)|, row-major over (i, j).

    theta_i are cell midpoints (avoids the degenerate poles), phi_j are left
    endpoints of a full 2*pi sweep.
    """
    dim = 2**n_qubits
    ones = np.array([bin(k).count("1") for k in range(dim)])
    thetas = (np.arange(grid_theta) + 0.5) * math.pi / grid_theta
    phis = np.arange(grid_phi) * 2.0 * math.pi / grid_phi
    rows = np.empty((grid_theta * grid_phi, dim), dtype=np.complex128)
    for i, th in enumerate(thetas):
        mags = np.cos(th / 2.0) ** (n_qubits - ones) * np.sin(th / 2.0) ** ones
        for j, ph in enumerate(phis):
            rows[i * grid_phi + j] = mags * np.exp(-1j * ph * ones)
    rows.setflags(write=False)
    return rows


def husimi_grid_angles(config: EnvConfig) -> tuple[np.ndarray, np.ndarray]:
    """The (theta_i, phi_j) sample angles used by husimi_features."""
    thetas = (np.arange(config.grid_theta) + 0.5) * math.pi / config.grid_theta
    phis = np.arange(config.grid_phi) * 2.0 * math.pi / config.grid_phi
    return thetas, phis


def husimi_features(state: StateVector, config: EnvConfig) -> np.ndarray:
    """Husimi-Q values on the configured grid, flattened row-major over (theta, phi)."""
    if state.n_qubits != config.n_qubits:
        raise ValueError(
            f"state has {state.n_qubits} qubits but config expects {config.n_qubits}"
        )
    bras = _coherent_bras(config.n_qubits, config.grid_theta, config.grid_phi)
    q = np.abs(bras @ state.amps) ** 2
    np.clip(q, 0.0, 1.0, out=q)  # |overlap|^2 <= 1; clip float dust only
    return q


class SensorEnv:
    """Single-episode environment handle.

    Owns mutable episode state (register, step counter); one episode at a
    time, one owner. Independent instances can run in parallel.
    """

    def __init__(self, config: EnvConfig | None = None):
        self.config = config if config is not None else EnvConfig()
        self._state: StateVector | None = None
        self._steps = 0
        self._done = True  # force reset() before the first step()

    def reset(self) -> np.ndarray:
        """Start a fresh episode in |0...0>; returns its Husimi features."""
        self._state = zero_state(self.config.n_qubits)
        self._steps = 0
        self._done = False
        return husimi_features(self._state, self.config)

    def step(self, action: Action) -> StepOutcome:
        """Apply one gate, score the new state, and decide termination."""
        if self._state is None:
            raise UsageError("reset() must be called before step()")
        if self._done:
            raise UsageError("episode already finished; call reset()")
        cfg = self.config
        act = Action(action)
        if act is Action.RX:
            state = apply_collective_rotation(self._state, "x", cfg.gate_angle)
        elif act is Action.RY:
            state = apply_collective_rotation(self._state, "y", cfg.gate_angle)
        else:
            state = apply_squeeze(self._state, cfg.gate_angle)
        self._state = state
        self._steps += 1

        value = qfi(state)
        if value >= cfg.threshold:
            termination = Termination.THRESHOLD_REACHED
        elif self._steps >= cfg.max_steps:
            termination = Termination.STEP_CAP_REACHED
        else:
            termination = Termination.NOT_DONE
        self._done = termination is not Termination.NOT_DONE
        return StepOutcome(
            features=husimi_features(state, cfg),
            reward=value,
            qfi=value,
            done=self._done,
            termination=termination,
        )

    @property
    def state(self) -> StateVector | None:
        return self._state

    @property
    def steps(self) -> int:
        return self._steps

    @property
    def done(self) -> bool:
        return self._done
