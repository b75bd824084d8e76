"""Strategy-diffusion simulation over {random, myopic, optimal}.

Populations of 5 generations x 8 agents explore, demonstrate, and socially
learn. Machine agents (generation 0 only) discover the optimal strategy at a
1000x rate. The grid sweep varies discovery difficulty (-log10 d) and
transmission difficulty (1 - t) and measures optimal-strategy adoption and
human reward in the final generation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

import numpy as np

STRATEGY_NAMES = ("random", "myopic", "optimal")
RANDOM, MYOPIC, OPTIMAL = 0, 1, 2


@dataclass
class AbmConfig:
    generations: int = 5
    agents_per_generation: int = 8
    machine_count: int = 0  # machines sit in generation 0 only
    strategy_means: tuple[float, float, float] = (600.0, 1400.0, 2200.0)
    noise_sigma: float = 200.0
    explore_prob: float = 0.5
    d_myopic: float = 0.4
    d_optimal: float = 1e-4
    machine_multiplier: float = 1000.0
    transmission_rate: float = 0.95
    selection_mode: str = "selective"  # or "random"
    candidate_count: int | str = 5  # int or "all"
    explore_tasks_gen0: int = 6
    demo_tasks: int = 4
    explore_tasks_later: int = 2
    social_tasks: int = 4
    seed: int = 0

    def validate(self):
        for p in (self.explore_prob, self.d_myopic, self.d_optimal, self.transmission_rate):
            if not 0 <= p <= 1:
                raise ValueError(f"probability {p} outside [0, 1]")
        if self.selection_mode not in ("selective", "random"):
            raise ValueError(f"bad selection_mode {self.selection_mode!r}")
        if self.machine_count > self.agents_per_generation:
            raise ValueError("more machines than seats")

    def effective_discovery(self, kind: str) -> float:
        if kind == "machine":
            return min(1.0, self.machine_multiplier * self.d_optimal)
        return self.d_optimal


@dataclass
class AbmAgent:
    kind: str = "human"  # or "machine"
    preferred: int = RANDOM
    demo_rewards: list = field(default_factory=list)

    @property
    def demo_mean(self) -> float:
        return sum(self.demo_rewards) / len(self.demo_rewards)


def draw_reward(strategy: int, cfg: AbmConfig, rng: random.Random) -> float:
    return cfg.strategy_means[strategy] + rng.gauss(0.0, cfg.noise_sigma)


def explore_step(agent: AbmAgent, cfg: AbmConfig, rng: random.Random):
    """One exploration task: with prob explore_prob attempt discoveries;
    upgrades are monotone in random < myopic < optimal."""
    if rng.random() >= cfg.explore_prob:
        return
    if rng.random() < cfg.effective_discovery(agent.kind):
        agent.preferred = max(agent.preferred, OPTIMAL)
    if rng.random() < cfg.d_myopic:
        agent.preferred = max(agent.preferred, MYOPIC)


def select_demonstrator(candidates: list[AbmAgent], mode: str, rng: random.Random) -> AbmAgent:
    if mode == "random":
        return rng.choice(candidates)
    best = max(c.demo_mean for c in candidates)
    return rng.choice([c for c in candidates if c.demo_mean == best])


def social_step(learner: AbmAgent, demonstrator: AbmAgent, cfg: AbmConfig, rng: random.Random) -> float:
    """One social-learning task: imitate with prob t (upgrade-only), then
    perform the task with the resulting strategy."""
    if rng.random() < cfg.transmission_rate and demonstrator.preferred > learner.preferred:
        learner.preferred = demonstrator.preferred
    reward = draw_reward(learner.preferred, cfg, rng)
    learner.demo_rewards.append(reward)
    return reward


@dataclass
class GenerationRecord:
    generation: int
    strategy_counts: tuple[int, int, int]  # humans only
    human_adoption: float  # fraction of humans preferring optimal
    mean_human_reward: float  # mean over humans of their demo-task mean


def run_population(cfg: AbmConfig, rng: random.Random | None = None) -> list[GenerationRecord]:
    """One population: generation 0 explores then demonstrates; later
    generations explore briefly, then learn socially (those four task rewards
    double as their demonstration scores for the next generation)."""
    cfg.validate()
    rng = rng or random.Random(cfg.seed)
    records = []
    n = cfg.agents_per_generation

    gen0 = [AbmAgent(kind="machine") for _ in range(cfg.machine_count)]
    gen0 += [AbmAgent() for _ in range(n - cfg.machine_count)]
    for agent in gen0:
        for _ in range(cfg.explore_tasks_gen0):
            explore_step(agent, cfg, rng)
        for _ in range(cfg.demo_tasks):
            agent.demo_rewards.append(draw_reward(agent.preferred, cfg, rng))
    records.append(_summarize(0, gen0))

    previous = gen0
    for g in range(1, cfg.generations):
        current = [AbmAgent() for _ in range(n)]
        for agent in current:
            for _ in range(cfg.explore_tasks_later):
                explore_step(agent, cfg, rng)
            if cfg.candidate_count == "all" or cfg.candidate_count >= n:
                candidates = list(previous)
            else:
                candidates = rng.sample(previous, cfg.candidate_count)
            demonstrator = select_demonstrator(candidates, cfg.selection_mode, rng)
            for _ in range(cfg.social_tasks):
                social_step(agent, demonstrator, cfg, rng)
        records.append(_summarize(g, current))
        previous = current
    return records


def _summarize(generation: int, agents: list[AbmAgent]) -> GenerationRecord:
    humans = [a for a in agents if a.kind == "human"]
    counts = [0, 0, 0]
    for a in humans:
        counts[a.preferred] += 1
    adoption = counts[OPTIMAL] / len(humans) if humans else 0.0
    mean_reward = (
        sum(a.demo_mean for a in humans) / len(humans) if humans else float("nan")
    )
    return GenerationRecord(generation, tuple(counts), adoption, mean_reward)


# ---------------------------------------------------------------------------
# Grid sweep


def default_discovery_rates(n: int = 25) -> np.ndarray:
    """Log-spaced discovery rates from 1 down to 1e-6 (difficulty 0..6)."""
    return np.logspace(0.0, -6.0, n)


def default_transmission_difficulties(n: int = 36) -> np.ndarray:
    """Linearly spaced 1 - t from 0 to 0.30 (t from 1 down to 0.70)."""
    return np.linspace(0.0, 0.30, n)


@dataclass
class GridResult:
    """Per-cell final-generation statistics for one (population type, mode)."""

    discovery_rates: np.ndarray          # (D,)
    transmission_difficulties: np.ndarray  # (K,)
    population_type: str                 # human_only | mixed
    selection_mode: str                  # selective | random
    adoption: np.ndarray                 # (D, K, reps) final-gen adoption fraction
    final_reward: np.ndarray             # (D, K, reps) final-gen mean human reward
    gen_reward: np.ndarray               # (D, K, reps, G) per-generation mean human reward

    @property
    def discovery_difficulty(self) -> np.ndarray:
        return -np.log10(self.discovery_rates)

    def mean_adoption(self) -> np.ndarray:
        return self.adoption.mean(axis=2)

    def mean_final_reward(self) -> np.ndarray:
        return self.final_reward.mean(axis=2)


def run_grid(
    base_cfg: AbmConfig,
    population_type: str = "human_only",
    selection_mode: str = "selective",
    discovery_rates: np.ndarray | None = None,
    transmission_difficulties: np.ndarray | None = None,
    replications: int = 100,
    master_seed: int = 0,
    machine_count: int = 3,
) -> GridResult:
    """Sweep the (discovery, transmission) grid; every (cell, replication)
    is an independent pure function of its derived seed."""
    d_vals = discovery_rates if discovery_rates is not None else default_discovery_rates()
    td_vals = (
        transmission_difficulties
        if transmission_difficulties is not None
        else default_transmission_difficulties()
    )
    machines = machine_count if population_type == "mixed" else 0
    G = base_cfg.generations
    D, K = len(d_vals), len(td_vals)
    adoption = np.zeros((D, K, replications))
    final_reward = np.zeros((D, K, replications))
    gen_reward = np.zeros((D, K, replications, G))
    for i, d in enumerate(d_vals):
        for j, td in enumerate(td_vals):
            cfg = replace(
                base_cfg,
                d_optimal=float(d),
                transmission_rate=float(1.0 - td),
                machine_count=machines,
                selection_mode=selection_mode,
            )
            for rep in range(replications):
                key = f"{master_seed}:{population_type}:{selection_mode}:{i}:{j}:{rep}"
                recs = run_population(cfg, random.Random(key))
                adoption[i, j, rep] = recs[-1].human_adoption
                final_reward[i, j, rep] = recs[-1].mean_human_reward
                gen_reward[i, j, rep] = [r.mean_human_reward for r in recs]
    return GridResult(
        np.asarray(d_vals), np.asarray(td_vals), population_type, selection_mode,
        adoption, final_reward, gen_reward,
    )


def adoption_boundary(result: GridResult, threshold: float = 0.5) -> list[tuple[float, float | None]]:
    """Per transmission-difficulty row, the discovery difficulty where mean
    final-generation adoption first crosses the threshold (linear
    interpolation between grid points); None where the row never crosses."""
    mean = result.mean_adoption()  # (D, K), rows ordered easy -> hard discovery
    diff = result.discovery_difficulty
    out = []
    for j, td in enumerate(result.transmission_difficulties):
        col = mean[:, j]
        crossing = None
        for i in range(len(col) - 1):
            a, b = col[i], col[i + 1]
            if (a >= threshold) != (b >= threshold):
                frac = (a - threshold) / (a - b) if a != b else 0.0
                crossing = float(diff[i] + frac * (diff[i + 1] - diff[i]))
                break
        out.append((float(td), crossing))
    return out


def uplift(mixed: GridResult, human_only: GridResult) -> np.ndarray:
    """Mixed-minus-human-only mean final-generation human reward per cell."""
    return mixed.mean_final_reward() - human_only.mean_final_reward()


def sensitivity_suite(
    base_cfg: AbmConfig,
    population_type: str = "mixed",
    selection_mode: str = "selective",
    **grid_kwargs,
) -> dict[str, GridResult]:
    """Robustness reruns: one machine, 16 seats, and all-candidate selection."""
    variants = {
        "one_machine": dict(machine_count=1),
        "sixteen_agents": dict(cfg=replace(base_cfg, agents_per_generation=16)),
        "all_candidates": dict(cfg=replace(base_cfg, candidate_count="all")),
    }
    out = {}
    for name, spec in variants.items():
        cfg = spec.get("cfg", base_cfg)
        out[name] = run_grid(
            cfg,
            population_type=population_type,
            selection_mode=selection_mode,
            machine_count=spec.get("machine_count", 3),
            **grid_kwargs,
        )
    return out
