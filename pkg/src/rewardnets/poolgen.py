"""Batch network generation with the strategy keep-filter applied."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .ioutil import derive_seed
from .networks import GenConfig, Network, generate_network_with_stats, validate_network
from .strategies import filter_network

POOL_NAMES = ("training", "validation", "experiment")
DEFAULT_POOL_SIZE = 1000


@dataclass
class PoolStats:
    accepted: int
    rejected: int

    @property
    def rejection_fraction(self) -> float:
        total = self.accepted + self.rejected
        return self.rejected / total if total else 0.0


def generate_pool(
    count: int, master_seed: int, label: str = "", base_cfg: GenConfig | None = None
) -> tuple[list[Network], PoolStats]:
    """Generate `count` kept networks; per-network seeds derive from the master
    seed so pools are reproducible and independent of each other."""
    base = base_cfg or GenConfig()
    nets, rejected = [], 0
    for i in range(count):
        cfg = replace(base, seed=derive_seed(master_seed, "pool", label, i))
        net, rej = generate_network_with_stats(cfg, keep_filter=filter_network)
        rejected += rej
        nets.append(net)
    return nets, PoolStats(accepted=count, rejected=rejected)


def check_pool(nets: list[Network]) -> list:
    violations = []
    for net in nets:
        violations.extend(validate_network(net))
    return violations
