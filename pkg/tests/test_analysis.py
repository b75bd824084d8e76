import json
import random

import pytest

from rewardnets.analysis import (
    aggregate_metrics,
    classify,
    export_tidy,
    lineage_stats,
    load_trials_csv,
    top_performer_means,
)
from rewardnets.engine import (
    PopulationRun,
    PopulationSpec,
    Trajectory,
    build_population,
    record_trial,
    scripted_play_seat,
)
from rewardnets.errors import IncompleteRun
from rewardnets.networks import trajectory_from_moves
from rewardnets.strategies import RulePolicy


def build_filled(pool, condition="human_machine", fidelity=1.0, seed=0):
    run = build_population(PopulationSpec(condition=condition), pool,
                           [RulePolicy("loss_seeking") for _ in range(3)],
                           random.Random(seed))
    rng = random.Random(seed + 1)
    for gen in run.seats:
        for seat in gen:
            if not seat.complete:
                scripted_play_seat(run, seat, fidelity, rng)
    return run


def run_with_top_scores(pool, condition, tops):
    """A complete run whose per-generation top demonstration averages are
    forced to the given values by rewriting recorded totals."""
    run = build_filled(pool, condition=condition, fidelity=0.0)
    for g, target in enumerate(tops):
        best = max((s for s in run.seats[g] if s.kind != "machine"),
                   key=lambda s: s.average_demo_score)
        for t in best.trials_in("demonstration"):
            t.total = target
    return run


class TestClassify:
    def test_permanently_preserved_example(self, experiment_pool):
        run = run_with_top_scores(experiment_pool, "human_machine",
                                  [2000, 2410, 2380, 2350, 2300])
        assert classify(run).label == "permanently_preserved"

    def test_temporarily_preserved_example(self, experiment_pool):
        run = run_with_top_scores(experiment_pool, "human_machine",
                                  [2000, 2410, 1990, 1980, 1900])
        assert classify(run).label == "temporarily_preserved"

    def test_human_only_below_threshold(self, experiment_pool):
        run = build_filled(experiment_pool, condition="human_only")
        assert top_performer_means(run) == [2000.0] * 5
        assert classify(run).label == "not_discovered"

    def test_threshold_is_strict(self, experiment_pool):
        # exactly 2,000 does not count as exceeding
        run = run_with_top_scores(experiment_pool, "human_only",
                                  [2000, 2000, 2000, 2000, 2000])
        assert classify(run).label == "not_discovered"
        run2 = run_with_top_scores(experiment_pool, "human_only",
                                   [2000, 2000, 2000, 2000, 2001])
        assert classify(run2).label == "discovered"

    def test_seat_order_invariance(self, experiment_pool):
        run = build_filled(experiment_pool)
        before = classify(run).label
        for gen in run.seats:
            gen.reverse()
        assert classify(run).label == before

    def test_incomplete_run_rejected(self, experiment_pool):
        run = build_population(PopulationSpec(), experiment_pool,
                               [RulePolicy("loss_seeking") for _ in range(3)],
                               random.Random(0))
        with pytest.raises(IncompleteRun):
            classify(run)


class TestLineageStats:
    def test_mixed_scripted_run(self, experiment_pool):
        run = build_filled(experiment_pool)
        stats = lineage_stats(run)
        assert stats["machine_descent_fraction"] == 1.0
        assert sum(stats["gen1_demonstrator_kinds"].values()) == 8

    def test_human_only_run(self, experiment_pool):
        run = build_filled(experiment_pool, condition="human_only")
        assert lineage_stats(run)["machine_descent_fraction"] == 0.0


class TestAggregates:
    def test_order_invariance(self, experiment_pool):
        runs = [build_filled(experiment_pool, seed=s) for s in (0, 1)]
        a = aggregate_metrics(runs)
        b = aggregate_metrics(list(reversed(runs)))
        assert a == b

    def test_reward_means(self, experiment_pool):
        agg = aggregate_metrics([build_filled(experiment_pool)])
        for g in range(1, 5):
            assert agg[("human_machine", g)]["mean_reward"] == 2650.0

    def test_empty_strategy_flags(self, experiment_pool):
        agg = aggregate_metrics([build_filled(experiment_pool)])
        entry = agg[("human_machine", 1)]
        assert entry["strategy_flag_fraction"] == 0.0
        assert entry["strategy_flag_count"] == 0

    def test_congruency_of_machine_against_itself(self, experiment_pool,
                                                  trained_policies):
        from rewardnets.engine import GreedyQPolicy

        qnet, _ = trained_policies[0]
        run = build_population(
            PopulationSpec(), experiment_pool,
            [GreedyQPolicy(qnet) for _ in range(3)], random.Random(4))
        rng = random.Random(5)
        for gen in run.seats:
            for seat in gen:
                if not seat.complete:
                    scripted_play_seat(run, seat, 1.0, rng)
        agg = aggregate_metrics([run], checkpoints={i: qnet for i in range(3)})
        assert agg[("human_machine", 0)]["mean_congruency"] > 0.3
        # f = 1 descendants replay the machine's own choices
        for g in range(1, 5):
            assert agg[("human_machine", g)]["mean_congruency"] == 1.0


class TestExports:
    def test_row_counts(self, experiment_pool, tmp_path):
        runs = [build_filled(experiment_pool, condition=c, seed=s)
                for s, c in enumerate(("human_machine", "human_only"))]
        counts = export_tidy(runs, tmp_path)
        assert counts["trials"] == 2 * 40 * 4
        assert counts["moves"] == counts["trials"] * 10
        assert counts["participants"] == 2 * 40

    def test_post_machine_filter(self, experiment_pool, tmp_path):
        runs = [build_filled(experiment_pool)]
        export_tidy(runs, tmp_path)
        rows = load_trials_csv(tmp_path / "trials.csv")
        post = [r for r in rows if r["post_machine"] == "1"]
        assert len(post) == 32 * 4  # generations 1-4

    def test_every_row_keyed(self, experiment_pool, tmp_path):
        export_tidy([build_filled(experiment_pool)], tmp_path)
        for row in load_trials_csv(tmp_path / "trials.csv"):
            assert row["population_id"] and row["condition"]
            assert row["generation"] != "" and row["seat_index"] != ""

    def test_reload_matches_in_memory(self, experiment_pool, tmp_path):
        run = build_filled(experiment_pool)
        export_tidy([run], tmp_path)
        rows = load_trials_csv(tmp_path / "trials.csv")
        by_key = {}
        for r in rows:
            key = (int(r["generation"]),)
            by_key.setdefault(key, []).append(int(r["total"]))
        agg = aggregate_metrics([run])
        for g in range(5):
            csv_mean = sum(by_key[(g,)]) / len(by_key[(g,)])
            assert csv_mean == pytest.approx(agg[("human_machine", g)]["mean_reward"])

    def test_classification_summary_written(self, experiment_pool, tmp_path):
        run = build_filled(experiment_pool)
        export_tidy([run], tmp_path)
        lines = (tmp_path / "classification.ndjson").read_text().splitlines()
        rec = json.loads(lines[0])
        assert rec["label"] == classify(run).label
