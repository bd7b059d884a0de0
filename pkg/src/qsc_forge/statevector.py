"""Dense statevector engine for small qubit registers.

Amplitudes are complex128 over the computational basis in big-endian order:
qubit 0 is the most significant bit, so for two qubits the basis runs
|00>, |01>, |10>, |11>. Rotations use the half-angle convention
R_a(t) = exp(-i t sigma_a / 2) and H = [[1, 1], [1, -1]]/sqrt(2), which makes
Ry(pi/2)|0> = (|0> + |1>)/sqrt(2). Global phase is never stripped; every
quantity consumed downstream (probabilities, variances, squared overlaps) is
phase invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError

# Dense representation only: the amplitude vector has 2^n entries.
MAX_QUBITS = 10

_UNITARY_ATOL = 1e-12
_NORM_ATOL = 1e-9  # construction guard; unitaries preserve norm to ~1e-15


def gate(matrix) -> np.ndarray:
    """Validate a 2x2 complex matrix as a gate (G†G = I within 1e-12)."""
    g = np.array(matrix, dtype=np.complex128)
    if g.shape != (2, 2):
        raise ValueError(f"gate must be a 2x2 matrix, got shape {g.shape}")
    if not np.allclose(g.conj().T @ g, np.eye(2), rtol=0.0, atol=_UNITARY_ATOL):
        raise ValueError("gate is not unitary")
    g.setflags(write=False)
    return g


def identity() -> np.ndarray:
    return gate(np.eye(2))


def hadamard() -> np.ndarray:
    return gate(np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0))


def rotation(axis: str, angle: float) -> np.ndarray:
    """R_axis(angle) = exp(-i angle sigma_axis / 2) for axis in {x, y, z}."""
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    if axis == "x":
        m = [[c, -1j * s], [-1j * s, c]]
    elif axis == "y":
        m = [[c, -s], [s, c]]
    elif axis == "z":
        m = [[c - 1j * s, 0.0], [0.0, c + 1j * s]]
    else:
        raise ValueError(f"unknown rotation axis {axis!r}, expected 'x', 'y' or 'z'")
    return gate(m)


def rx(angle: float) -> np.ndarray:
    return rotation("x", angle)


def ry(angle: float) -> np.ndarray:
    return rotation("y", angle)


def rz(angle: float) -> np.ndarray:
    return rotation("z", angle)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable pure state of an n-qubit register."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigError(
                f"n_qubits must be between 1 and {MAX_QUBITS}, got {self.n_qubits}"
            )
        amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude vector for {self.n_qubits} qubits must have length "
                f"{2**self.n_qubits}, got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > _NORM_ATOL:
            raise ValueError(f"state is not normalized: norm = {nrm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    def probabilities(self) -> np.ndarray:
        """Measurement probabilities |amp_k|^2 in computational-basis order."""
        return np.abs(self.amps) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def zero_state(n_qubits: int) -> StateVector:
    """The |0...0> register state."""
    if not isinstance(n_qubits, int) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigError(
            f"n_qubits must be an integer between 1 and {MAX_QUBITS}, got {n_qubits!r}"
        )
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def from_amplitudes(amps) -> StateVector:
    """Build a state from a raw amplitude sequence (length must be a power of 2)."""
    a = np.asarray(amps, dtype=np.complex128)
    n = int(round(math.log2(a.size))) if a.size > 0 else 0
    if a.size == 0 or 2**n != a.size:
        raise ValueError(f"amplitude length {a.size} is not a power of two")
    return StateVector(n, a)


def apply_single(state: StateVector, gate_matrix: np.ndarray, qubit: int) -> StateVector:
    """Apply a one-qubit gate G on `qubit`: (I ⊗ ... ⊗ G ⊗ ... ⊗ I)|psi>."""
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for a {n}-qubit register")
    g = np.asarray(gate_matrix, dtype=np.complex128)
    if g.shape != (2, 2):
        raise ValueError(f"gate must be a 2x2 matrix, got shape {g.shape}")
    # Big-endian layout: axis q of the reshaped tensor is qubit q.
    psi = state.amps.reshape((2,) * n)
    psi = np.moveaxis(np.tensordot(g, psi, axes=([1], [qubit])), 0, qubit)
    return StateVector(n, psi.reshape(-1))


def apply_collective_rotation(state: StateVector, axis: str, angle: float) -> StateVector:
    """Rotate every qubit by the same angle: exp(-i angle J_axis)."""
    g = rotation(axis, angle)
    for qubit in range(state.n_qubits):
        state = apply_single(state, g, qubit)
    return state


@lru_cache(maxsize=None)
def jz_diagonal(n_qubits: int) -> np.ndarray:
    """Eigenvalues of Jz = (1/2) sum_k sigma_z^(k), one per basis index."""
    ones = np.array([bin(k).count("1") for k in range(2**n_qubits)])
    m = (n_qubits - 2 * ones) / 2.0
    m.setflags(write=False)
    return m


def apply_squeeze(state: StateVector, angle: float) -> StateVector:
    """One-axis twisting exp(-i angle Jz^2), diagonal phases e^{-i angle m^2}.

    For two qubits this multiplies the |00> and |11> amplitudes by
    e^{-i angle} (Jz^2 eigenvalues 1, 0, 0, 1) and leaves |01>, |10> alone.
    """
    m = jz_diagonal(state.n_qubits)
    return StateVector(state.n_qubits, state.amps * np.exp(-1j * angle * m * m))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> = sum_k conj(a_k) b_k."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(
            f"register sizes differ: {a.n_qubits} vs {b.n_qubits} qubits"
        )
    return complex(np.vdot(a.amps, b.amps))
