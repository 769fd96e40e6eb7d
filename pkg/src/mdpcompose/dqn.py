"""Deep Q-learning baseline trained per activity against the simulation.

A one-hidden-layer network maps a one-hot state encoding to one Q-value per
activity action. Training is epsilon-greedy with a ring-buffer experience
replay; each environment step performs one minibatch temporal-difference
update toward r + gamma * max_a' Q(s', a') (plain r on terminal moves).
The per-step reward signal is the change of the simulation's running
reward, so correct moves yield +0.25 and wrong ones -0.25.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDivergenceError
from .kg import KnowledgeGraph
from .simulation import SimConfig, SimState, initial_features, make_simulation


@dataclass
class DqnConfig:
    learning_rate: float = 0.05
    epsilon: float = 0.9  # exploration rate while training; 0 when evaluating
    gamma: float = 0.9
    episode_cap: int = 100
    hidden_units: int = 100
    replay_capacity: int = 5000
    replay_batch: int = 64
    max_steps_per_episode: int | None = None  # default 50 x sequence length
    rng_seed: int = 0
    stop_on_success: bool = True

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must be in [0, 1]")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")


@dataclass
class EpisodeStats:
    steps: int = 0
    wrong: int = 0
    reward: float = 0.0


@dataclass
class TrainingRecord:
    episodes_used: int = 0
    total_steps: int = 0
    wrong_decisions: int = 0
    cumulative_reward: float = 0.0
    success: bool = False
    per_episode: list[EpisodeStats] = field(default_factory=list)


class QNetwork:
    """tanh hidden layer; linear Q-value head; float64 weights."""

    def __init__(self, states: list[str], actions: list[str], hidden_units: int, rng):
        self.states = list(states)
        self.actions = list(actions)
        self.state_index = {s: i for i, s in enumerate(self.states)}
        n_s, n_a = len(self.states), len(self.actions)
        scale = 0.1
        self.w1 = rng.uniform(-scale, scale, size=(n_s, hidden_units))
        self.b1 = np.zeros(hidden_units)
        self.w2 = rng.uniform(-scale, scale, size=(hidden_units, n_a))
        self.b2 = np.zeros(n_a)

    def q_values(self, state_idx: int) -> np.ndarray:
        hidden = np.tanh(self.w1[state_idx] + self.b1)
        return hidden @ self.w2 + self.b2

    def q_batch(self, state_indices: np.ndarray) -> np.ndarray:
        hidden = np.tanh(self.w1[state_indices] + self.b1)
        return hidden @ self.w2 + self.b2

    def parameters(self):
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.state = np.zeros(capacity, dtype=np.int64)
        self.action = np.zeros(capacity, dtype=np.int64)
        self.reward = np.zeros(capacity, dtype=np.float64)
        self.next_state = np.zeros(capacity, dtype=np.int64)
        self.terminal = np.zeros(capacity, dtype=np.float64)
        self.size = 0
        self._cursor = 0

    def push(self, s, a, r, s_next, terminal):
        i = self._cursor
        self.state[i] = s
        self.action[i] = a
        self.reward[i] = r
        self.next_state[i] = s_next
        self.terminal[i] = 1.0 if terminal else 0.0
        self._cursor = (self._cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, rng, count: int) -> np.ndarray:
        return rng.integers(0, self.size, size=count)


def td_targets(net: QNetwork, batch, gamma: float) -> np.ndarray:
    """Bootstrapped targets r + gamma * max_a' Q(s', a'), r alone on
    terminal moves."""
    _s, _a, r, s_next, terminal = batch
    q_next = net.q_batch(s_next)
    return r + gamma * (1.0 - terminal) * q_next.max(axis=1)


def td_loss_and_grads(net: QNetwork, batch, gamma: float, targets=None):
    """Mean squared TD error on the taken actions and its gradients.

    batch = (states, actions, rewards, next_states, terminals) as arrays.
    Targets are constants (semi-gradient: no gradient through the
    bootstrap); pass precomputed ``targets`` to hold them fixed while
    perturbing parameters.
    """
    s, a, r, s_next, terminal = batch
    n = len(s)

    if targets is None:
        targets = td_targets(net, batch, gamma)

    x = np.zeros((n, len(net.states)))
    x[np.arange(n), s] = 1.0
    z1 = x @ net.w1 + net.b1
    h = np.tanh(z1)
    q = h @ net.w2 + net.b2
    taken = q[np.arange(n), a]
    errors = taken - targets
    loss = float((errors**2).mean())

    dq = np.zeros_like(q)
    dq[np.arange(n), a] = 2.0 * errors / n
    grads = {
        "w2": h.T @ dq,
        "b2": dq.sum(axis=0),
    }
    dh = dq @ net.w2.T
    dz1 = dh * (1.0 - h**2)
    grads["w1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


def _activity_layout(graph: KnowledgeGraph, activity_name: str):
    activity = graph.get(activity_name)
    states = sorted(activity.states)
    actions = sorted(activity.actions)
    return activity, states, actions


def _episode_start(graph, activity_name) -> SimState:
    features = initial_features(graph, activity_name)
    activity = graph.get(activity_name)
    initial = next(
        s for s in activity.states if graph.get(s).is_initial_state
    )
    return SimState(feature_values=features, state_label=initial)


def train_dqn(graph: KnowledgeGraph, activity_name: str, cfg: DqnConfig | None = None):
    """Train a Q-network for one activity; returns (network, record)."""
    cfg = cfg or DqnConfig()
    activity, states, actions = _activity_layout(graph, activity_name)
    sequence_length = len(actions)
    max_steps = cfg.max_steps_per_episode or 50 * max(1, sequence_length)

    rng = np.random.default_rng(cfg.rng_seed)
    net = QNetwork(states, actions, cfg.hidden_units, rng)
    replay = ReplayBuffer(cfg.replay_capacity)
    record = TrainingRecord()

    for _episode in range(cfg.episode_cap):
        record.episodes_used += 1
        stats = EpisodeStats()
        start = _episode_start(graph, activity_name)
        closure = make_simulation(graph, start, SimConfig())
        current = start
        s_idx = net.state_index[current.state_label]

        while not current.is_final and stats.steps < max_steps:
            if rng.random() < cfg.epsilon:
                a_idx = int(rng.integers(len(actions)))
            else:
                a_idx = int(np.argmax(net.q_values(s_idx)))
            result = closure(actions[a_idx])
            delta = result.reward - current.reward
            next_label = result.state_label
            next_idx = net.state_index.get(next_label)
            if next_idx is None:
                break  # left the activity's state set; abandon the episode
            replay.push(s_idx, a_idx, delta, next_idx, result.is_final)

            stats.steps += 1
            stats.reward += delta
            if delta < 0:
                stats.wrong += 1

            if replay.size >= cfg.replay_batch:
                picks = replay.sample_indices(rng, cfg.replay_batch)
                batch = (
                    replay.state[picks],
                    replay.action[picks],
                    replay.reward[picks],
                    replay.next_state[picks],
                    replay.terminal[picks],
                )
                loss, grads = td_loss_and_grads(net, batch, cfg.gamma)
                if not np.isfinite(loss):
                    raise TrainingDivergenceError(
                        f"non-finite TD loss in episode {record.episodes_used}"
                    )
                for key, grad in grads.items():
                    param = getattr(net, key)
                    param -= cfg.learning_rate * grad

            current = result
            s_idx = next_idx

        record.total_steps += stats.steps
        record.wrong_decisions += stats.wrong
        record.cumulative_reward += stats.reward
        record.per_episode.append(stats)

        if cfg.stop_on_success and evaluate_greedy(net, graph, activity_name, cfg):
            record.success = True
            break

    if not cfg.stop_on_success and record.episodes_used:
        record.success = evaluate_greedy(net, graph, activity_name, cfg)
    return net, record


def evaluate_greedy(
    net: QNetwork, graph: KnowledgeGraph, activity_name: str, cfg: DqnConfig | None = None
) -> bool:
    """One greedy episode; success means the final state is reached in
    exactly as many steps as the activity has actions."""
    cfg = cfg or DqnConfig()
    _activity, _states, actions = _activity_layout(graph, activity_name)
    sequence_length = len(actions)
    max_steps = cfg.max_steps_per_episode or 50 * max(1, sequence_length)

    start = _episode_start(graph, activity_name)
    closure = make_simulation(graph, start, SimConfig())
    current = start
    steps = 0
    while not current.is_final and steps < max_steps:
        s_idx = net.state_index.get(current.state_label)
        if s_idx is None:
            return False
        a_idx = int(np.argmax(net.q_values(s_idx)))
        current = closure(actions[a_idx])
        steps += 1
    return current.is_final and steps == sequence_length
