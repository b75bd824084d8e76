"""The leveled reward-network task: generation, validation, play, and a best-score oracle.

A network has 12 nodes on levels 0-3 and 30 directed edges carrying rewards
from {-50, 0, 100, 200, 400}. Edges run within a level or to the next level
up; ascents cost -50, the 400-point edges live inside level 3, and the
within-level-0 loop pays 200. Reaching the top therefore always costs at
least three losses, while staying at the bottom caps out at 200 per move.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EpisodeOver, IllegalMove, InvalidConfig, UnsatisfiableConfig

REWARD_VALUES = (-50, 0, 100, 200, 400)
REWARD_INDEX = {r: i for i, r in enumerate(REWARD_VALUES)}
N_NODES = 12
N_EDGES = 30
N_MOVES = 10
N_LEVELS = 4

# Allowed rewards per (source level, target level). Ascents always cost -50,
# level-0 loops pay 200, level-3 loops pay 400, interior loops pay 0 or 100.
REWARD_RULE = {
    (0, 0): (200,),
    (0, 1): (-50,),
    (1, 1): (0, 100),
    (1, 2): (-50,),
    (2, 2): (0, 100),
    (2, 3): (-50,),
    (3, 3): (400,),
}


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    reward: int


@dataclass
class Network:
    network_id: str
    start_node: int
    levels: list[int]  # level per node id
    edges: list[Edge]
    _out: dict[int, list[Edge]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        out = {i: [] for i in range(len(self.levels))}
        for e in self.edges:
            out[e.source].append(e)
        for lst in out.values():
            lst.sort(key=lambda e: e.target)
        object.__setattr__(self, "_out", out)

    def out_edges(self, node: int) -> list[Edge]:
        return self._out[node]

    def edge_reward(self, source: int, target: int) -> int | None:
        for e in self._out[source]:
            if e.target == target:
                return e.reward
        return None

    def to_dict(self) -> dict:
        return {
            "network_id": self.network_id,
            "start_node": self.start_node,
            "nodes": [{"id": i, "level": l} for i, l in enumerate(self.levels)],
            "edges": [
                {"source": e.source, "target": e.target, "reward": e.reward}
                for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        nodes = sorted(d["nodes"], key=lambda n: n["id"])
        levels = [n["level"] for n in nodes]
        edges = [Edge(e["source"], e["target"], e["reward"]) for e in d["edges"]]
        return cls(d["network_id"], d["start_node"], levels, edges)


@dataclass
class Trajectory:
    network_id: str
    moves: list[int]
    rewards: list[int]
    total: int

    def to_dict(self) -> dict:
        return {
            "network_id": self.network_id,
            "moves": list(self.moves),
            "rewards": list(self.rewards),
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        return cls(d["network_id"], list(d["moves"]), list(d["rewards"]), d["total"])


@dataclass(frozen=True)
class EnvState:
    network: Network
    current_node: int
    move_index: int = 0
    accrued_reward: int = 0
    revealed_nodes: frozenset = None

    def __post_init__(self):
        if self.revealed_nodes is None:
            object.__setattr__(self, "revealed_nodes", frozenset([self.current_node]))

    @property
    def terminal(self) -> bool:
        return self.move_index >= N_MOVES


def initial_state(net: Network) -> EnvState:
    return EnvState(network=net, current_node=net.start_node)


def step(state: EnvState, target: int) -> tuple[EnvState, int]:
    """Take one move; returns the new state and the edge reward."""
    if state.terminal:
        raise EpisodeOver(f"episode finished after {N_MOVES} moves")
    reward = state.network.edge_reward(state.current_node, target)
    if reward is None:
        raise IllegalMove(f"no edge {state.current_node} -> {target}")
    new = replace(
        state,
        current_node=target,
        move_index=state.move_index + 1,
        accrued_reward=state.accrued_reward + reward,
        revealed_nodes=state.revealed_nodes | {target},
    )
    return new, reward


def observe(state: EnvState) -> tuple[np.ndarray, np.ndarray]:
    """12x5 one-hot reward matrix for the current node's out-edges, plus a
    reachability mask over target nodes."""
    obs = np.zeros((N_NODES, len(REWARD_VALUES)))
    mask = np.zeros(N_NODES, dtype=bool)
    for e in state.network.out_edges(state.current_node):
        obs[e.target, REWARD_INDEX[e.reward]] = 1.0
        mask[e.target] = True
    return obs, mask


def trajectory_from_moves(net: Network, moves: list[int]) -> Trajectory:
    """Replay a move list through the environment, accumulating rewards."""
    state = initial_state(net)
    rewards = []
    for m in moves:
        state, r = step(state, m)
        rewards.append(r)
    return Trajectory(net.network_id, list(moves), rewards, sum(rewards))


# ---------------------------------------------------------------------------
# Generation


@dataclass
class GenConfig:
    level_sizes: tuple[int, ...] = (3, 3, 3, 3)
    edge_count: int = N_EDGES
    max_rejections: int = 1000
    seed: int = 0

    def validate(self):
        sizes = tuple(self.level_sizes)
        if len(sizes) != N_LEVELS or any(s < 0 for s in sizes):
            raise InvalidConfig(f"need {N_LEVELS} non-negative level sizes, got {sizes}")
        if sum(sizes) != N_NODES:
            raise InvalidConfig(f"level sizes must sum to {N_NODES}, got {sizes}")
        if sizes[0] < 2 or sizes[3] < 2:
            raise InvalidConfig(
                "levels 0 and 3 need at least 2 nodes each for loop edges"
            )
        if self.max_rejections < 1:
            raise InvalidConfig("max_rejections must be positive")


def _level_nodes(level_sizes):
    levels, by_level = [], []
    nid = 0
    for lvl, size in enumerate(level_sizes):
        members = list(range(nid, nid + size))
        by_level.append(members)
        levels.extend([lvl] * size)
        nid += size
    return levels, by_level


def _candidate_targets(node, lvl, by_level):
    within = [n for n in by_level[lvl] if n != node]
    up = by_level[lvl + 1] if lvl + 1 < N_LEVELS else []
    return within, up


def _build_candidate(rng: random.Random, cfg: GenConfig) -> Network:
    levels, by_level = _level_nodes(cfg.level_sizes)
    within_up = {}
    caps, base = {}, {}
    for node in range(N_NODES):
        within, up = _candidate_targets(node, levels[node], by_level)
        within_up[node] = (within, up)
        avail = len(within) + len(up)
        if avail == 0:
            raise UnsatisfiableConfig(f"node {node} has no possible targets")
        caps[node] = min(3, avail)
        base[node] = min(2, caps[node])
    if sum(base.values()) > cfg.edge_count or sum(caps.values()) < cfg.edge_count:
        raise UnsatisfiableConfig(
            f"cannot place {cfg.edge_count} edges with out-degrees in [2, 3]"
        )
    degrees = dict(base)
    slack = [n for n in range(N_NODES) if caps[n] > base[n]]
    extra = cfg.edge_count - sum(base.values())
    for node in rng.sample(slack, extra):
        degrees[node] += 1

    edges = []
    for node in range(N_NODES):
        within, up = within_up[node]
        lvl = levels[node]
        chosen = []
        # Mandatory structure: every non-top node can ascend (the -50 route
        # must always be available) and every level-0 node keeps the 200 loop.
        if up:
            chosen.append(rng.choice(up))
        if lvl == 0 and within:
            chosen.append(rng.choice(within))
        if lvl == 3:
            chosen.extend(rng.sample(within, degrees[node]))
        remaining = [t for t in within + up if t not in chosen]
        need = degrees[node] - len(chosen)
        if need < 0:
            raise UnsatisfiableConfig(f"node {node} over-constrained")
        chosen.extend(rng.sample(remaining, need))
        for target in chosen:
            allowed = REWARD_RULE[(lvl, levels[target])]
            reward = allowed[0] if len(allowed) == 1 else rng.choice(allowed)
            edges.append(Edge(node, target, reward))
    edges.sort(key=lambda e: (e.source, e.target))
    start = rng.choice(by_level[0])
    net = Network("", start, levels, edges)
    net.network_id = _content_id(net)
    return net


def _content_id(net: Network) -> str:
    payload = json.dumps(
        {
            "start": net.start_node,
            "levels": net.levels,
            "edges": [(e.source, e.target, e.reward) for e in net.edges],
        },
        separators=(",", ":"),
    )
    return hashlib.sha1(payload.encode()).hexdigest()[:12]


def generate_network(cfg: GenConfig, keep_filter=None) -> Network:
    """Rejection-sample one network passing the validator (and, if given, the
    keep filter). Deterministic for a fixed config."""
    net, _ = generate_network_with_stats(cfg, keep_filter)
    return net


def generate_network_with_stats(cfg: GenConfig, keep_filter=None):
    cfg.validate()
    rng = random.Random(cfg.seed)
    rejections = 0
    for _ in range(cfg.max_rejections):
        net = _build_candidate(rng, cfg)
        if not validate_network(net) and (keep_filter is None or keep_filter(net)):
            return net, rejections
        rejections += 1
    raise UnsatisfiableConfig(
        f"no valid network within {cfg.max_rejections} attempts (seed {cfg.seed})"
    )


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    invariant: str
    detail: str


def min_negative_to_top(net: Network, max_depth: int = N_MOVES) -> dict[int, int]:
    """Minimum count of negative-reward edges over any path of at most
    ``max_depth`` moves from each node to its first arrival at level 3.

    Dynamic program over (node, remaining depth); equivalent to enumerating
    every path, which `min_negative_to_top_brute` does for cross-checking.
    """
    inf = float("inf")
    best = {n: inf for n in range(len(net.levels))}
    for _ in range(max_depth):
        nxt = {}
        for node in range(len(net.levels)):
            score = inf
            for e in net.out_edges(node):
                cost = 1 if e.reward < 0 else 0
                tail = 0 if net.levels[e.target] == 3 else best[e.target]
                score = min(score, cost + tail)
            nxt[node] = score
        best = nxt
    return best


def min_negative_to_top_brute(net: Network, start: int, max_depth: int = N_MOVES):
    """Exhaustive depth-limited path enumeration; independent oracle for the
    at-least-three-losses constraint."""
    best = float("inf")
    stack = [(start, 0, 0)]
    while stack:
        node, depth, neg = stack.pop()
        if depth > 0 and net.levels[node] == 3:
            best = min(best, neg)
            continue
        if depth == max_depth:
            continue
        for e in net.out_edges(node):
            stack.append((e.target, depth + 1, neg + (1 if e.reward < 0 else 0)))
    return best


def validate_network(net: Network) -> list[Violation]:
    """Check every structural invariant; an empty list means the network is valid."""
    v = []
    n = len(net.levels)
    if n != N_NODES:
        v.append(Violation("node_count", f"expected {N_NODES} nodes, found {n}"))
    if len(net.edges) != N_EDGES:
        v.append(Violation("edge_count", f"expected {N_EDGES} edges, found {len(net.edges)}"))
    for i, lvl in enumerate(net.levels):
        if not 0 <= lvl < N_LEVELS:
            v.append(Violation("node_level", f"node {i} has level {lvl}"))
    if not (0 <= net.start_node < n and net.levels[net.start_node] == 0):
        v.append(Violation("start_node", f"start node {net.start_node} is not at level 0"))
    seen_pairs = set()
    for e in net.edges:
        if e.reward not in REWARD_VALUES:
            v.append(Violation("edge_reward", f"edge {e.source}->{e.target} reward {e.reward}"))
        if e.source == e.target:
            v.append(Violation("self_loop", f"node {e.source}"))
        if (e.source, e.target) in seen_pairs:
            v.append(Violation("duplicate_edge", f"{e.source}->{e.target}"))
        seen_pairs.add((e.source, e.target))
        if e.reward == 400 and net.levels[e.source] != 3:
            v.append(
                Violation("reward_400_source", f"edge {e.source}->{e.target} from level {net.levels[e.source]}")
            )
        if net.levels[e.source] == 0 and net.levels[e.target] == 0 and e.reward != 200:
            v.append(
                Violation("level0_loop_reward", f"edge {e.source}->{e.target} reward {e.reward}")
            )
    for node in range(n):
        if not net.out_edges(node):
            v.append(Violation("out_degree", f"node {node} has no outgoing edge"))
            return v  # path analysis below assumes playable nodes
    min_neg = min_negative_to_top(net)
    for node in range(n):
        if net.levels[node] == 0 and min_neg[node] < 3:
            v.append(
                Violation(
                    "three_losses_to_top",
                    f"path from level-0 node {node} to level 3 with {min_neg[node]} negative edges",
                )
            )
    return v


# ---------------------------------------------------------------------------
# Best-score oracle


def oracle_best_score(net: Network) -> tuple[int, Trajectory]:
    """Maximum total over all 10-move sequences from the start node, with the
    lexicographically smallest maximizing trajectory.

    Memoized over (node, moves left); reward depends only on the edge taken,
    so this matches full enumeration (`exhaustive_best_score` cross-checks).
    """
    n = len(net.levels)
    value = [[0.0] * (N_MOVES + 1) for _ in range(n)]
    for k in range(1, N_MOVES + 1):
        for node in range(n):
            value[node][k] = max(
                e.reward + value[e.target][k - 1] for e in net.out_edges(node)
            )
    moves, rewards = [], []
    node = net.start_node
    for k in range(N_MOVES, 0, -1):
        best_edge = None
        for e in net.out_edges(node):  # targets sorted ascending: first max wins
            if best_edge is None or e.reward + value[e.target][k - 1] > (
                best_edge.reward + value[best_edge.target][k - 1]
            ):
                best_edge = e
        moves.append(best_edge.target)
        rewards.append(best_edge.reward)
        node = best_edge.target
    total = sum(rewards)
    return total, Trajectory(net.network_id, moves, rewards, total)


def exhaustive_best_score(net: Network, depth: int = N_MOVES) -> int:
    """Plain depth-first enumeration of every move sequence; test oracle only."""

    def go(node, k):
        if k == 0:
            return 0
        return max(e.reward + go(e.target, k - 1) for e in net.out_edges(node))

    return go(net.start_node, depth)


# ---------------------------------------------------------------------------
# Pool IO (one JSON document per line)


def write_pool(path, networks):
    from .ioutil import atomic_write_text

    lines = "".join(json.dumps(n.to_dict(), separators=(",", ":")) + "\n" for n in networks)
    atomic_write_text(path, lines)


def read_pool(path) -> list[Network]:
    nets = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                nets.append(Network.from_dict(json.loads(line)))
    return nets
