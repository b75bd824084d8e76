"""Rule-based reference players and the keep filter for generated networks.

The myopic player grabs the best immediate reward; the loss-seeking player
takes a -50 edge whenever one exists (the route up the levels) and otherwise
plays myopically. Networks where myopia beats loss-seeking are excluded from
the pools so that the two strategies stay cleanly separated.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .networks import EnvState, Network, Trajectory, initial_state, step

KINDS = ("random", "myopic", "loss_seeking")


@dataclass
class RulePolicy:
    kind: str
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        self._rng = random.Random(self.seed)

    def act(self, state: EnvState) -> int:
        return act(self, state)

    def reset(self):
        pass


def _myopic_choice(edges):
    # ties broken by smallest target id; edges are sorted by target
    best = edges[0]
    for e in edges[1:]:
        if e.reward > best.reward:
            best = e
    return best.target


def act(policy: RulePolicy, state: EnvState) -> int:
    edges = state.network.out_edges(state.current_node)
    if policy.kind == "random":
        return policy._rng.choice(edges).target
    if policy.kind == "loss_seeking":
        losses = [e for e in edges if e.reward == -50]
        if losses:
            return losses[0].target
    return _myopic_choice(edges)


def run_policy(policy: RulePolicy, net: Network) -> Trajectory:
    state = initial_state(net)
    moves, rewards = [], []
    while not state.terminal:
        target = act(policy, state)
        state, r = step(state, target)
        moves.append(target)
        rewards.append(r)
    return Trajectory(net.network_id, moves, rewards, sum(rewards))


def filter_network(net: Network) -> bool:
    """Keep a network iff loss-seeking scores at least as much as myopic play."""
    myopic = run_policy(RulePolicy("myopic"), net).total
    loss = run_policy(RulePolicy("loss_seeking"), net).total
    return loss >= myopic
