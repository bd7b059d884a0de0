"""Training orchestration, the brute-force circuit oracle, and run reports.

run_training drives the episode loop: pick an action (quantum-circuit
sampling, epsilon-greedy, or uniform random depending on the agent kind),
step the environment, store the transition, train on replay batches every
update_every_steps environment steps, and hard-sync the target network every
target_sync_every_steps. Step counters for the update/sync cadence are
global across episodes; epsilon is indexed by episode. Everything is driven
by a single seeded generator, so a (config, seed) pair reproduces a run
exactly.

brute_force is the independent certificate: it enumerates every gate
sequence up to a length cap and ranks them by final qfi, which bounds what
any trained agent can achieve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .qnet import (
    AdamState,
    Hyperparams,
    NetworkParams,
    ReplayBuffer,
    Transition,
    epsilon_at,
    forward,
    init_params,
    save_checkpoint,
    sync_target,
    train_step,
)
from .selector import SelectionMode, select_epsilon_greedy, select_quantum
from .sensor_env import (
    Action,
    EnvConfig,
    SensorEnv,
    Termination,
    apply_collective_rotation,
    apply_squeeze,
    qfi,
    zero_state,
)
from .statevector import StateVector

import enum

# Moving-average window and level that define the convergence episode.
CONVERGENCE_WINDOW = 100
CONVERGENCE_LEVEL = 0.95

MAX_BRUTE_FORCE_LEN = 12


class AgentKind(enum.Enum):
    HCQA = "hcqa"
    CLASSICAL_DQN = "classical-dqn"
    RANDOM = "random"


@dataclass(frozen=True, eq=False)
class EpisodeRecord:
    """Per-episode log row."""

    episode: int
    actions: tuple
    qfi_per_step: tuple
    final_qfi: float
    steps: int
    termination: Termination
    epsilon: float
    cumulative_reward: float


@dataclass(eq=False)
class RunReport:
    """Full outcome of one training run."""

    seed: int
    agent: AgentKind
    selection: SelectionMode
    episodes: int
    env_config: EnvConfig
    hyperparams: Hyperparams
    records: list
    moving_avg_qfi: list
    convergence_episode: Optional[int]
    best_actions: tuple
    best_qfi: float
    total_env_steps: int
    train_steps: int
    target_syncs: int

    def to_dict(self) -> dict:
        """JSON-ready dict with a stable key order and full float precision."""
        return {
            "version": 1,
            "seed": self.seed,
            "agent": self.agent.value,
            "selection": self.selection.value,
            "episodes": self.episodes,
            "env_config": {
                "n_qubits": self.env_config.n_qubits,
                "gate_angle": self.env_config.gate_angle,
                "threshold": self.env_config.threshold,
                "max_steps": self.env_config.max_steps,
                "grid_theta": self.env_config.grid_theta,
                "grid_phi": self.env_config.grid_phi,
            },
            "hyperparams": {
                "learning_rate": self.hyperparams.learning_rate,
                "gamma": self.hyperparams.gamma,
                "epsilon_start": self.hyperparams.epsilon_start,
                "epsilon_end": self.hyperparams.epsilon_end,
                "epsilon_anneal_episodes": self.hyperparams.epsilon_anneal_episodes,
                "batch_size": self.hyperparams.batch_size,
                "buffer_capacity": self.hyperparams.buffer_capacity,
                "update_every_steps": self.hyperparams.update_every_steps,
                "target_sync_every_steps": self.hyperparams.target_sync_every_steps,
            },
            "total_env_steps": self.total_env_steps,
            "train_steps": self.train_steps,
            "target_syncs": self.target_syncs,
            "convergence_episode": self.convergence_episode,
            "best_circuit": {
                "actions": [a.label for a in self.best_actions],
                "length": len(self.best_actions),
                "qfi": self.best_qfi,
            },
            "moving_avg_qfi": list(self.moving_avg_qfi),
            "records": [
                {
                    "episode": r.episode,
                    "steps": r.steps,
                    "final_qfi": r.final_qfi,
                    "cum_reward": r.cumulative_reward,
                    "epsilon": r.epsilon,
                    "termination": r.termination.value,
                    "actions": [a.label for a in r.actions],
                    "qfi_per_step": list(r.qfi_per_step),
                }
                for r in self.records
            ],
        }


@dataclass(eq=False)
class TrainerState:
    """Final mutable training state, kept out of the report for checkpointing."""

    params: NetworkParams
    target_params: NetworkParams
    adam: AdamState
    rng: np.random.Generator


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean with a truncated warm-up window."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window!r}")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty input")
    csum = np.cumsum(v)
    out = np.empty_like(v)
    head = min(window, v.size)
    out[:head] = csum[:head] / (np.arange(head) + 1)
    if v.size > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return out


def _choose_action(
    agent: AgentKind,
    params: NetworkParams,
    features: np.ndarray,
    epsilon: float,
    selection: SelectionMode,
    rng: np.random.Generator,
) -> Action:
    if agent is AgentKind.RANDOM:
        return Action(int(rng.integers(len(Action))))
    q = forward(params, features)
    if agent is AgentKind.CLASSICAL_DQN:
        return select_epsilon_greedy(q, epsilon, rng)
    # Hybrid agent: epsilon-gated exploration around the quantum circuit.
    if rng.random() < epsilon:
        return Action(int(rng.integers(len(Action))))
    return select_quantum(q, selection, rng)


def train_agent(
    env_config: EnvConfig,
    hyperparams: Hyperparams,
    agent: AgentKind,
    episodes: int,
    seed: int,
    selection: SelectionMode = SelectionMode.SAMPLE,
) -> tuple[RunReport, TrainerState]:
    """Run the full training loop; returns the report and the final net state."""
    if episodes < 1:
        raise ConfigError(f"episodes must be >= 1, got {episodes!r}")
    env = SensorEnv(env_config)
    params, target_params = init_params(seed, env_config.feature_dim)
    adam = AdamState.for_params(params)
    buffer = ReplayBuffer(hyperparams.buffer_capacity)
    rng = np.random.default_rng(seed)

    records = []
    total_steps = 0
    train_steps = 0
    target_syncs = 0
    for episode in range(episodes):
        epsilon = epsilon_at(episode, hyperparams)
        features = env.reset()
        actions = []
        qfis = []
        cumulative = 0.0
        termination = Termination.NOT_DONE
        while termination is Termination.NOT_DONE:
            action = _choose_action(agent, params, features, epsilon, selection, rng)
            outcome = env.step(action)
            buffer.push(
                Transition(features, int(action), outcome.reward, outcome.features, outcome.done)
            )
            actions.append(action)
            qfis.append(outcome.qfi)
            cumulative += outcome.reward
            features = outcome.features
            termination = outcome.termination
            total_steps += 1
            if total_steps % hyperparams.update_every_steps == 0:
                batch = buffer.sample(hyperparams.batch_size, rng)
                if batch is not None:  # warm-up: skip until the buffer is ready
                    train_step(params, target_params, batch, adam,
                               hyperparams.learning_rate, hyperparams.gamma)
                    train_steps += 1
            if total_steps % hyperparams.target_sync_every_steps == 0:
                sync_target(params, target_params)
                target_syncs += 1
        records.append(
            EpisodeRecord(
                episode=episode,
                actions=tuple(actions),
                qfi_per_step=tuple(qfis),
                final_qfi=qfis[-1],
                steps=len(actions),
                termination=termination,
                epsilon=epsilon,
                cumulative_reward=cumulative,
            )
        )

    ma = moving_average([r.final_qfi for r in records], CONVERGENCE_WINDOW)
    convergence = None
    hits = np.nonzero(ma >= CONVERGENCE_LEVEL)[0]
    if hits.size:
        convergence = int(hits[0])

    best_qfi = max(r.final_qfi for r in records)
    contenders = [r for r in records if r.final_qfi == best_qfi]
    best = min(contenders, key=lambda r: (r.steps, tuple(int(a) for a in r.actions)))

    report = RunReport(
        seed=seed,
        agent=agent,
        selection=selection,
        episodes=episodes,
        env_config=env_config,
        hyperparams=hyperparams,
        records=records,
        moving_avg_qfi=[float(x) for x in ma],
        convergence_episode=convergence,
        best_actions=best.actions,
        best_qfi=best_qfi,
        total_env_steps=total_steps,
        train_steps=train_steps,
        target_syncs=target_syncs,
    )
    return report, TrainerState(params, target_params, adam, rng)


def run_training(
    env_config: EnvConfig,
    hyperparams: Hyperparams,
    agent: AgentKind,
    episodes: int,
    seed: int,
    selection: SelectionMode = SelectionMode.SAMPLE,
    checkpoint_path=None,
) -> RunReport:
    """train_agent wrapper that optionally persists the final network state."""
    report, state = train_agent(env_config, hyperparams, agent, episodes, seed, selection)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, state.params, state.target_params, state.adam, state.rng)
    return report


def _apply_action_to_state(state: StateVector, action: Action, angle: float) -> StateVector:
    if action is Action.RX:
        return apply_collective_rotation(state, "x", angle)
    if action is Action.RY:
        return apply_collective_rotation(state, "y", angle)
    return apply_squeeze(state, angle)


def rollout(env_config: EnvConfig, actions) -> tuple[list, StateVector]:
    """Apply a fixed gate sequence from |0...0>; returns (qfi per step, final state).

    Unlike SensorEnv.step this never terminates early, so it can score full
    sequences of any length up to the caller's choosing.
    """
    state = zero_state(env_config.n_qubits)
    trace = []
    for action in actions:
        state = _apply_action_to_state(state, Action(action), env_config.gate_angle)
        trace.append(qfi(state))
    return trace, state


def brute_force(env_config: EnvConfig, max_len: int) -> list:
    """Exhaustively rank every gate sequence of length 1..max_len by final qfi.

    Returns (action tuple, qfi) pairs sorted by qfi descending, then length
    ascending, then lexicographic action order. qfi is rounded to 12 decimals
    inside the sort key so float dust cannot shuffle genuinely tied circuits.
    """
    if not 1 <= max_len <= MAX_BRUTE_FORCE_LEN:
        raise ConfigError(f"max_len must be in [1, {MAX_BRUTE_FORCE_LEN}], got {max_len!r}")
    results = []

    def explore(state: StateVector, prefix: tuple) -> None:
        for action in Action:
            nxt = _apply_action_to_state(state, action, env_config.gate_angle)
            seq = prefix + (action,)
            results.append((seq, qfi(nxt)))
            if len(seq) < max_len:
                explore(nxt, seq)

    explore(zero_state(env_config.n_qubits), ())
    results.sort(key=lambda item: (-round(item[1], 12), len(item[0]),
                                   tuple(int(a) for a in item[0])))
    return results
