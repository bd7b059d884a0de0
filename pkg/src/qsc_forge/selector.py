"""Action selection policies: quantum measurement circuit and epsilon-greedy.

The quantum route mimics a two-qubit measurement circuit. The dominant
Q-value is encoded as a rotation angle

    theta = max(q, 0).max() / max(q, 0).sum() * pi,

then both qubits get Ry(theta) followed by a Hadamard and a computational
basis measurement. After Ry(theta) and H the per-qubit probability of
reading 0 is (1 + sin theta)/2, so the outcome distribution factors into
products of the two independent qubits. Outcomes map 00 -> Rx, 01 -> Ry,
10 -> S; the unassigned 11 outcome is folded away by renormalizing over the
first three, which is distribution-identical to resampling on 11.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np

from .sensor_env import Action


class SelectionMode(enum.Enum):
    SAMPLE = "sample"
    ARGMAX = "argmax"


class OutcomeDistribution(NamedTuple):
    """Measurement probabilities of the selection circuit (p01 = p10 by symmetry)."""

    p00: float
    p01: float
    p10: float
    p11: float


def encode_angle(q_values) -> float | None:
    """Map three Q-values to a rotation angle in [0, pi].

    Negative entries clamp to zero first. If everything clamps away there is
    no meaningful ratio: returns None, and callers fall back to a uniform
    action draw.
    """
    q = np.asarray(q_values, dtype=float)
    if q.shape != (3,):
        raise ValueError(f"expected exactly 3 q-values, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("q-values must be finite")
    clamped = np.maximum(q, 0.0)
    total = float(clamped.sum())
    if total == 0.0:
        return None
    return float(clamped.max()) / total * math.pi


def outcome_probabilities(theta: float) -> OutcomeDistribution:
    """Exact outcome distribution of the selection circuit at angle theta."""
    p0 = 0.5 * (1.0 + math.sin(theta))
    p1 = 1.0 - p0
    return OutcomeDistribution(p0 * p0, p0 * p1, p0 * p1, p1 * p1)


def action_distribution(q_values) -> np.ndarray:
    """Per-action probabilities under sampled selection (11 renormalized away)."""
    theta = encode_angle(q_values)
    if theta is None:
        return np.full(3, 1.0 / 3.0)
    d = outcome_probabilities(theta)
    assigned = np.array([d.p00, d.p01, d.p10])
    return assigned / assigned.sum()


def select_quantum(q_values, mode: SelectionMode, rng: np.random.Generator) -> Action:
    """Pick an action through the selection circuit.

    SAMPLE draws from the renormalized outcome distribution; ARGMAX takes the
    most likely assigned outcome, ties going to the lowest action index
    (p01 = p10 exactly, so ARGMAX needs the total order).
    """
    theta = encode_angle(q_values)
    if theta is None:
        return Action(int(rng.integers(len(Action))))
    d = outcome_probabilities(theta)
    assigned = (d.p00, d.p01, d.p10)
    if mode is SelectionMode.ARGMAX:
        best = 0
        for i in (1, 2):
            if assigned[i] > assigned[best]:
                best = i
        return Action(best)
    total = assigned[0] + assigned[1] + assigned[2]
    u = rng.random() * total
    acc = 0.0
    for i, w in enumerate(assigned):
        acc += w
        if u < acc:
            return Action(i)
    return Action.S  # u landed on the accumulated top edge


def select_epsilon_greedy(q_values, epsilon: float, rng: np.random.Generator) -> Action:
    """Uniform random action with probability epsilon, else argmax of the Q-values."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon!r}")
    q = np.asarray(q_values, dtype=float)
    if q.shape != (3,):
        raise ValueError(f"expected exactly 3 q-values, got shape {q.shape}")
    if rng.random() < epsilon:
        return Action(int(rng.integers(len(Action))))
    return Action(int(np.argmax(q)))  # first max wins: lowest-index tie-break
