import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rewardnets.abm import (
    MYOPIC,
    OPTIMAL,
    RANDOM,
    AbmAgent,
    AbmConfig,
    GridResult,
    adoption_boundary,
    default_discovery_rates,
    default_transmission_difficulties,
    explore_step,
    run_grid,
    run_population,
    select_demonstrator,
    social_step,
    uplift,
)


class TestConfig:
    def test_defaults_valid(self):
        AbmConfig().validate()

    def test_bad_probability_rejected(self):
        with pytest.raises(ValueError):
            AbmConfig(explore_prob=1.5).validate()

    def test_machine_discovery_multiplier_capped(self):
        cfg = AbmConfig(d_optimal=0.01)
        assert cfg.effective_discovery("machine") == 1.0
        assert cfg.effective_discovery("human") == 0.01
        low = AbmConfig(d_optimal=1e-6)
        assert low.effective_discovery("machine") == pytest.approx(1e-3)


class TestSteps:
    def test_upgrade_monotone(self):
        # preference never degrades through any number of steps
        rng = random.Random(0)
        cfg = AbmConfig(d_optimal=0.3)
        agent = AbmAgent(preferred=OPTIMAL)
        demo = AbmAgent(preferred=MYOPIC, demo_rewards=[1.0])
        for _ in range(200):
            explore_step(agent, cfg, rng)
            social_step(agent, demo, cfg, rng)
            assert agent.preferred == OPTIMAL

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=50, deadline=None)
    def test_social_upgrade_only(self, seed):
        rng = random.Random(seed)
        cfg = AbmConfig(transmission_rate=1.0)
        learner = AbmAgent(preferred=MYOPIC)
        demo = AbmAgent(preferred=RANDOM, demo_rewards=[1.0])
        social_step(learner, demo, cfg, rng)
        assert learner.preferred == MYOPIC

    def test_selective_picks_best_mean(self):
        cands = [AbmAgent(demo_rewards=[r]) for r in (1850, 2410, 1990, 1210, 1780)]
        chosen = select_demonstrator(cands, "selective", random.Random(0))
        assert chosen.demo_mean == 2410

    def test_random_mode_covers_all_candidates(self):
        cands = [AbmAgent(demo_rewards=[r]) for r in (1.0, 2.0, 3.0)]
        rng = random.Random(0)
        seen = {id(select_demonstrator(cands, "random", rng)) for _ in range(200)}
        assert len(seen) == 3


class TestPopulation:
    def test_record_shape(self):
        recs = run_population(AbmConfig(seed=1))
        assert [r.generation for r in recs] == [0, 1, 2, 3, 4]
        for r in recs:
            assert sum(r.strategy_counts) == 8
            assert 0.0 <= r.human_adoption <= 1.0

    def test_machines_excluded_from_human_summaries(self):
        cfg = AbmConfig(machine_count=3, d_optimal=1.0)
        recs = run_population(cfg, random.Random(0))
        assert sum(recs[0].strategy_counts) == 5  # humans only in generation 0

    def test_deterministic_under_seed(self):
        a = run_population(AbmConfig(seed=9))
        b = run_population(AbmConfig(seed=9))
        assert a == b

    def test_easy_discovery_saturates(self):
        cfg = AbmConfig(d_optimal=1.0)
        recs = run_population(cfg, random.Random(3))
        assert recs[-1].human_adoption >= 0.5


class TestGrid:
    def test_axes(self):
        d = default_discovery_rates()
        td = default_transmission_difficulties()
        assert len(d) == 25 and d[0] == 1.0 and d[-1] == pytest.approx(1e-6)
        assert len(td) == 36 and td[0] == 0.0 and td[-1] == pytest.approx(0.30)

    def test_grid_shapes_and_determinism(self):
        kwargs = dict(
            discovery_rates=default_discovery_rates(4),
            transmission_difficulties=default_transmission_difficulties(3),
            replications=5,
        )
        a = run_grid(AbmConfig(), "mixed", "selective", **kwargs)
        b = run_grid(AbmConfig(), "mixed", "selective", **kwargs)
        assert a.adoption.shape == (4, 3, 5)
        assert np.array_equal(a.adoption, b.adoption)
        assert np.array_equal(a.final_reward, b.final_reward)

    def test_boundary_interpolation(self):
        d = np.array([1.0, 0.1, 0.01])
        adoption = np.array([[[1.0]], [[0.6]], [[0.2]]])  # crosses between rows 1,2
        res = GridResult(d, np.array([0.0]), "human_only", "selective",
                         adoption, adoption, adoption[..., None])
        (td, crossing), = adoption_boundary(res)
        assert crossing == pytest.approx(1.0 + 0.1 / 0.4)

    def test_boundary_none_without_crossing(self):
        d = np.array([1.0, 0.1])
        adoption = np.full((2, 1, 1), 0.9)
        res = GridResult(d, np.array([0.0]), "human_only", "selective",
                         adoption, adoption, adoption[..., None])
        assert adoption_boundary(res)[0][1] is None

    def test_uplift_is_elementwise_difference(self):
        d = np.array([1.0])
        mk = lambda v: GridResult(d, np.array([0.0]), "x", "selective",
                                  np.full((1, 1, 2), 0.5), np.full((1, 1, 2), v),
                                  np.full((1, 1, 2, 5), v))
        assert uplift(mk(2000.0), mk(1500.0))[0, 0] == pytest.approx(500.0)


class TestAnalyticCheckpoints:
    def test_gen0_discovery_closed_form(self):
        # 6 exploration chances, each succeeding with prob 0.5 * d; at d = 1
        # per-agent adoption is 1 - 0.5^6
        cfg = AbmConfig(d_optimal=1.0, d_myopic=0.0)
        rng = random.Random(0)
        n = 10_000
        hits = 0
        for _ in range(n):
            agent = AbmAgent()
            for _ in range(cfg.explore_tasks_gen0):
                explore_step(agent, cfg, rng)
            hits += agent.preferred == OPTIMAL
        p = 1 - 0.5 ** 6
        sigma = (p * (1 - p) / n) ** 0.5
        assert abs(hits / n - p) <= 3 * sigma

    def test_social_adoption_closed_form(self):
        # 4 social tasks at t = 0.8: adoption 1 - 0.2^4
        cfg = AbmConfig(transmission_rate=0.8)
        rng = random.Random(1)
        demo = AbmAgent(preferred=OPTIMAL, demo_rewards=[2200.0])
        n = 10_000
        hits = 0
        for _ in range(n):
            agent = AbmAgent()
            for _ in range(cfg.social_tasks):
                social_step(agent, demo, cfg, rng)
            hits += agent.preferred == OPTIMAL
        p = 1 - 0.2 ** 4
        sigma = (p * (1 - p) / n) ** 0.5
        assert abs(hits / n - p) <= 3 * sigma
