"""Deep-Q training of the machine player, evaluation, and congruency scoring."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptyBuffer, TrajectoryMismatch
from .ioutil import atomic_write_bytes
from .networks import (
    N_MOVES,
    N_NODES,
    Network,
    Trajectory,
    initial_state,
    observe,
    step,
)
from .qnet import Adam, QNetwork, masked_argmax, mask_q, td_loss_and_grads


@dataclass
class TrainConfig:
    gamma: float = 0.99
    target_update_steps: int = 200
    epsilon_floor: float = 0.01
    epsilon_base: float = 0.99
    epsilon_block: int = 1000
    buffer_capacity: int = 500
    batch_size: int = 16
    learning_rate: float = 1e-3
    lr_decay: float = 0.8
    lr_decay_every: int = 2000
    episodes: int = 20000
    eval_every: int = 100
    eval_set_size: int = 1000
    # Rewards are scaled for TD targets only; the bounded recurrent state
    # cannot express point-scale Q-values. Greedy behavior is scale-free.
    reward_scale: float = 1 / 400
    seed: int = 0

    def validate(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        for name in (
            "target_update_steps", "buffer_capacity", "batch_size",
            "episodes", "eval_every", "eval_set_size", "epsilon_block",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0 or self.lr_decay <= 0 or self.epsilon_floor <= 0:
            raise ValueError("rates must be positive")


def epsilon_for_episode(cfg: TrainConfig, episode: int) -> float:
    return max(cfg.epsilon_floor, cfg.epsilon_base ** (episode // cfg.epsilon_block))


@dataclass
class Episode:
    obs: np.ndarray      # (10, 60)
    masks: np.ndarray    # (10, 12) bool
    actions: np.ndarray  # (10,)
    rewards: np.ndarray  # (10,)


class ReplayBuffer:
    """Ring of whole episodes; recurrent training replays full sequences."""

    def __init__(self, capacity: int = 500):
        self._ring = deque(maxlen=capacity)

    def __len__(self):
        return len(self._ring)

    def push(self, episode: Episode):
        self._ring.append(episode)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if len(self._ring) < batch_size:
            raise EmptyBuffer(f"buffer holds {len(self._ring)} < {batch_size} episodes")
        idx = rng.choice(len(self._ring), size=batch_size, replace=False)
        eps = [self._ring[i] for i in idx]
        return (
            np.stack([e.obs for e in eps]),
            np.stack([e.masks for e in eps]),
            np.stack([e.actions for e in eps]),
            np.stack([e.rewards for e in eps]),
        )


def select_action(
    qnet: QNetwork, h: np.ndarray, obs_flat: np.ndarray, mask: np.ndarray,
    epsilon: float, rng: np.random.Generator,
) -> tuple[int, np.ndarray]:
    """Epsilon-greedy over reachable targets; returns action and next hidden."""
    q, h_new = qnet.step(obs_flat[None, :], h)
    if epsilon > 0 and rng.random() < epsilon:
        legal = np.flatnonzero(mask)
        action = int(rng.choice(legal))
    else:
        action = int(masked_argmax(q[0], mask))
    return action, h_new


def play_episode(qnet: QNetwork, net: Network, epsilon: float, rng) -> Episode:
    state = initial_state(net)
    h = qnet.zero_hidden(1)
    obs = np.empty((N_MOVES, N_NODES * 5))
    masks = np.empty((N_MOVES, N_NODES), dtype=bool)
    actions = np.empty(N_MOVES, dtype=np.int64)
    rewards = np.empty(N_MOVES)
    for t in range(N_MOVES):
        o, m = observe(state)
        obs[t] = o.ravel()
        masks[t] = m
        a, h = select_action(qnet, h, obs[t], m, epsilon, rng)
        state, r = step(state, a)
        actions[t] = a
        rewards[t] = r
    return Episode(obs, masks, actions, rewards)


def greedy_trajectory(qnet: QNetwork, net: Network) -> Trajectory:
    """Deterministic epsilon=0 rollout; the machine demonstration."""
    state = initial_state(net)
    h = qnet.zero_hidden(1)
    moves, rewards = [], []
    for _ in range(N_MOVES):
        o, m = observe(state)
        q, h = qnet.step(o.ravel()[None, :], h)
        a = int(masked_argmax(q[0], m))
        state, r = step(state, a)
        moves.append(a)
        rewards.append(r)
    return Trajectory(net.network_id, moves, rewards, sum(rewards))


def congruency(qnet: QNetwork, net: Network, human_moves: list[int]) -> float:
    """Fraction of the human's moves the machine would also have made, with
    the recurrent state conditioned on the human's own history."""
    if len(human_moves) != N_MOVES:
        raise TrajectoryMismatch(f"expected {N_MOVES} moves, got {len(human_moves)}")
    state = initial_state(net)
    h = qnet.zero_hidden(1)
    matches = 0
    for move in human_moves:
        o, m = observe(state)
        q, h = qnet.step(o.ravel()[None, :], h)
        machine = int(masked_argmax(q[0], m))
        if machine == move:
            matches += 1
        state, _ = step(state, move)  # raises IllegalMove on a bad trajectory
    return matches / N_MOVES


def make_probe_batch(
    nets: list[Network], qnet: QNetwork, seed: int = 0, reward_scale: float = 1 / 400
):
    """Small episode batch for gradient verification. Rewards are scaled to
    unit magnitude so the finite-difference oracle keeps full precision."""
    rng = np.random.default_rng(seed)
    eps = [play_episode(qnet, net, 1.0, rng) for net in nets]
    return (
        np.stack([e.obs for e in eps]),
        np.stack([e.masks for e in eps]),
        np.stack([e.actions for e in eps]),
        np.stack([e.rewards for e in eps]) * reward_scale,
    )


# ---------------------------------------------------------------------------
# Vectorized greedy evaluation over a pool


class EvalSet:
    """Pool of networks pre-baked into arrays for batched greedy rollouts."""

    def __init__(self, nets: list[Network]):
        n = len(nets)
        self.networks = nets
        self.obs = np.zeros((n, N_NODES, N_NODES * 5))
        self.mask = np.zeros((n, N_NODES, N_NODES), dtype=bool)
        self.reward = np.zeros((n, N_NODES, N_NODES))
        self.level = np.array([net.levels for net in nets])
        self.start = np.array([net.start_node for net in nets])
        from .networks import REWARD_INDEX

        for i, net in enumerate(nets):
            for node in range(N_NODES):
                for e in net.out_edges(node):
                    self.obs[i, node, e.target * 5 + REWARD_INDEX[e.reward]] = 1.0
                    self.mask[i, node, e.target] = True
                    self.reward[i, node, e.target] = e.reward

    def greedy_eval(self, qnet: QNetwork) -> tuple[float, float]:
        """Mean total reward and mean max level reached under greedy play."""
        n = len(self.networks)
        idx = np.arange(n)
        cur = self.start.copy()
        h = qnet.zero_hidden(n)
        total = np.zeros(n)
        max_level = self.level[idx, cur].astype(float)
        for _ in range(N_MOVES):
            obs = self.obs[idx, cur]
            mask = self.mask[idx, cur]
            q, h = qnet.step(obs, h)
            act = masked_argmax(q, mask)
            total += self.reward[idx, cur, act]
            max_level = np.maximum(max_level, self.level[idx, act])
            cur = act
        return float(total.mean()), float(max_level.mean())


# ---------------------------------------------------------------------------
# Training loop


@dataclass
class CurvePoint:
    episode: int
    mean_reward: float
    mean_max_level: float
    epsilon: float
    lr: float

    def to_dict(self):
        return asdict(self)


def td_update(qnet, target_net, batch, optimizer, gamma) -> float:
    loss, grads = td_loss_and_grads(qnet, target_net, *batch, gamma=gamma)
    optimizer.apply(qnet.params, grads)
    return loss


def train(
    cfg: TrainConfig,
    train_pool: list[Network],
    eval_pool: list[Network],
    progress=None,
) -> tuple[QNetwork, list[CurvePoint]]:
    """Run the full training schedule; returns the policy and learning curve."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    qnet = QNetwork(seed=cfg.seed)
    target_net = qnet.copy()
    optimizer = Adam(qnet.params, lr=cfg.learning_rate)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    eval_set = EvalSet(eval_pool[: cfg.eval_set_size])
    curve: list[CurvePoint] = []
    opt_steps = 0
    for episode in range(cfg.episodes):
        if episode > 0 and episode % cfg.lr_decay_every == 0:
            optimizer.lr *= cfg.lr_decay
        eps = epsilon_for_episode(cfg, episode)
        net = train_pool[int(rng.integers(len(train_pool)))]
        buffer.push(play_episode(qnet, net, eps, rng))
        if len(buffer) >= cfg.batch_size:
            obs_b, masks_b, actions_b, rewards_b = buffer.sample(cfg.batch_size, rng)
            batch = (obs_b, masks_b, actions_b, rewards_b * cfg.reward_scale)
            td_update(qnet, target_net, batch, optimizer, cfg.gamma)
            opt_steps += 1
            if opt_steps % cfg.target_update_steps == 0:
                target_net = qnet.copy()
        if (episode + 1) % cfg.eval_every == 0:
            mean_r, mean_lvl = eval_set.greedy_eval(qnet)
            curve.append(CurvePoint(episode + 1, mean_r, mean_lvl, eps, optimizer.lr))
            if progress is not None:
                progress(curve[-1])
    return qnet, curve


# ---------------------------------------------------------------------------
# Checkpoints

CHECKPOINT_VERSION = 1


def save_checkpoint(path, qnet: QNetwork, cfg: TrainConfig):
    import io

    meta = {"version": CHECKPOINT_VERSION, "config": asdict(cfg)}
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **qnet.params)
    atomic_write_bytes(path, buf.getvalue())


def load_checkpoint(path) -> tuple[QNetwork, TrainConfig]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        params = {k: data[k] for k in data.files if k != "__meta__"}
    return QNetwork(params=params), TrainConfig(**meta["config"])
