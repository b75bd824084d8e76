"""Population classification, aggregate metrics, lineage statistics, and tidy
delimited exports at trial, move, and participant grain."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import IncompleteRun, IoFailure
from .engine import PopulationRun, SeatRecord, lineage_root
from .training import congruency

TOP_PERFORMER_THRESHOLD = 2000.0

LABELS = ("permanently_preserved", "temporarily_preserved", "discovered",
          "not_discovered")


@dataclass
class PopulationClass:
    population_id: str
    condition: str
    label: str
    top_by_generation: list[float]  # top performer's mean demonstration score

    def to_dict(self):
        return {
            "population_id": self.population_id,
            "condition": self.condition,
            "label": self.label,
            "top_by_generation": list(self.top_by_generation),
        }


def _require_complete(run: PopulationRun):
    if not run.complete():
        raise IncompleteRun(f"population {run.population_id} has open seats")


def top_performer_means(run: PopulationRun) -> list[float]:
    """Per generation, the best seat's average demonstration score.
    Machine seats are excluded: classification tracks preservation by people."""
    out = []
    for gen in run.seats:
        scores = [s.average_demo_score for s in gen
                  if s.kind != "machine" and s.average_demo_score is not None]
        out.append(max(scores) if scores else float("-inf"))
    return out


def classify(run: PopulationRun) -> PopulationClass:
    """Threshold rule on top performers (strictly above 2,000 points).

    human_machine: preserved permanently if every generation after the
    machines' exceeds the threshold; temporarily if the first does but the
    last does not. human_only: discovered if the final generation exceeds it.
    """
    _require_complete(run)
    tops = top_performer_means(run)
    exceeded = [t > TOP_PERFORMER_THRESHOLD for t in tops]
    last = len(tops) - 1
    if run.condition == "human_machine":
        if all(exceeded[1:]):
            label = "permanently_preserved"
        elif exceeded[1] and not exceeded[last]:
            label = "temporarily_preserved"
        elif exceeded[last]:
            label = "discovered"
        else:
            label = "not_discovered"
    else:
        label = "discovered" if exceeded[last] else "not_discovered"
    return PopulationClass(run.population_id, run.condition, label, tops)


# ---------------------------------------------------------------------------
# Lineage


def lineage_stats(run: PopulationRun) -> dict:
    """Machine-descent fraction in the final generation, plus what kinds
    generation 1 chose as demonstrators."""
    _require_complete(run)
    last = run.spec.generations - 1
    n = run.spec.seats_per_generation
    descended = sum(
        1 for i in range(n) if lineage_root(run, last, i).kind == "machine")
    gen1_choices = Counter(
        run.seat(0, s.demonstrator).kind for s in run.seats[1])
    return {
        "machine_descent_fraction": descended / n,
        "gen1_demonstrator_kinds": dict(gen1_choices),
    }


# ---------------------------------------------------------------------------
# Aggregate metrics


def _congruency_reference(run: PopulationRun, checkpoints: dict):
    """The reference machine policy for a population's congruency scores:
    its own lineage root's checkpoint when one exists, else seed 0."""
    if run.condition == "human_machine" and checkpoints:
        last = run.spec.generations - 1
        root = lineage_root(run, last, 0)
        if root.kind == "machine" and root.seat_index in checkpoints:
            return checkpoints[root.seat_index]
    return checkpoints.get(0) if checkpoints else None


def aggregate_metrics(runs: list[PopulationRun], checkpoints: dict | None = None) -> dict:
    """Per (condition, generation): mean demonstration reward, mean move
    congruency against the reference machine, and the strategy-flag fraction.
    Population means first, then the grand mean over populations."""
    checkpoints = checkpoints or {}
    per_pop: dict[tuple, list[float]] = {}
    per_pop_cong: dict[tuple, list[float]] = {}
    flags: dict[tuple, list[int]] = {}
    for run in runs:
        _require_complete(run)
        ref = _congruency_reference(run, checkpoints)
        for g, gen in enumerate(run.seats):
            key = (run.condition, g)
            rewards, congs = [], []
            for seat in gen:
                demos = seat.trials_in("demonstration")
                rewards.append(sum(t.total for t in demos) / len(demos))
                if ref is not None:
                    congs.extend(
                        congruency(ref, run.networks[t.network_id], t.moves)
                        for t in demos)
                if seat.strategy_flag is not None:
                    flags.setdefault(key, []).append(int(seat.strategy_flag))
            per_pop.setdefault(key, []).append(sum(rewards) / len(rewards))
            if congs:
                per_pop_cong.setdefault(key, []).append(sum(congs) / len(congs))
    out = {}
    for key, vals in per_pop.items():
        cond, g = key
        congs = per_pop_cong.get(key, [])
        fl = flags.get(key, [])
        out[key] = {
            "condition": cond,
            "generation": g,
            "populations": len(vals),
            "mean_reward": sum(vals) / len(vals),
            "population_rewards": vals,
            "mean_congruency": sum(congs) / len(congs) if congs else None,
            "strategy_flag_fraction": (sum(fl) / len(fl)) if fl else 0.0,
            "strategy_flag_count": len(fl),
        }
    return out


# ---------------------------------------------------------------------------
# Tidy exports

TRIAL_COLUMNS = ["population_id", "condition", "generation", "seat_index",
                 "kind", "trial_index", "network_id", "total", "post_machine"]
MOVE_COLUMNS = TRIAL_COLUMNS[:-1] + ["move_index", "source", "target",
                                     "reward", "machine_move", "congruent"]
PARTICIPANT_COLUMNS = ["population_id", "condition", "generation",
                       "seat_index", "kind", "average_demo_score",
                       "strategy_flag"]


def _demo_rows(run: PopulationRun):
    for gen in run.seats:
        for seat in gen:
            for k, trial in enumerate(seat.trials_in("demonstration")):
                yield seat, k, trial


def export_tidy(runs: list[PopulationRun], out_dir, checkpoints: dict | None = None) -> dict:
    """Write trial, move, and participant tables as CSV; returns row counts.
    `post_machine` marks generations 1 and later, the subset the statistics
    in the source analyses were fit on."""
    checkpoints = checkpoints or {}
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        counts = {}
        with open(out / "trials.csv", "w", newline="", encoding="utf-8") as ft, \
             open(out / "moves.csv", "w", newline="", encoding="utf-8") as fm, \
             open(out / "participants.csv", "w", newline="", encoding="utf-8") as fp:
            wt = csv.writer(ft, quoting=csv.QUOTE_MINIMAL)
            wm = csv.writer(fm, quoting=csv.QUOTE_MINIMAL)
            wp = csv.writer(fp, quoting=csv.QUOTE_MINIMAL)
            wt.writerow(TRIAL_COLUMNS)
            wm.writerow(MOVE_COLUMNS)
            wp.writerow(PARTICIPANT_COLUMNS)
            n_trial = n_move = n_part = 0
            for run in runs:
                _require_complete(run)
                ref = _congruency_reference(run, checkpoints)
                for seat, k, trial in _demo_rows(run):
                    base = [run.population_id, run.condition, seat.generation,
                            seat.seat_index, seat.kind]
                    wt.writerow(base + [k, trial.network_id, trial.total,
                                        int(seat.generation > 0)])
                    n_trial += 1
                    net = run.networks[trial.network_id]
                    machine_moves = None
                    if ref is not None:
                        machine_moves = _reference_moves(ref, net, trial.moves)
                    source = net.start_node
                    for mi, (mv, rw) in enumerate(zip(trial.moves, trial.rewards)):
                        mm = machine_moves[mi] if machine_moves else ""
                        cong = int(mm == mv) if machine_moves else ""
                        wm.writerow(base + [k, trial.network_id, trial.total,
                                            mi, source, mv, rw, mm, cong])
                        source = mv
                        n_move += 1
                for gen in run.seats:
                    for seat in gen:
                        wp.writerow([run.population_id, run.condition,
                                     seat.generation, seat.seat_index, seat.kind,
                                     seat.average_demo_score,
                                     "" if seat.strategy_flag is None
                                     else int(seat.strategy_flag)])
                        n_part += 1
        counts = {"trials": n_trial, "moves": n_move, "participants": n_part}
        _write_classification(runs, out / "classification.ndjson")
        return counts
    except OSError as e:
        raise IoFailure(str(e))


def _reference_moves(ref, net, human_moves):
    """The reference policy's move at each step, conditioned on the human's
    actual history (same conditioning as the congruency score)."""
    from .networks import initial_state, observe, step
    from .qnet import masked_argmax

    state = initial_state(net)
    h = ref.zero_hidden(1)
    out = []
    for move in human_moves:
        o, m = observe(state)
        q, h = ref.step(o.ravel()[None, :], h)
        out.append(int(masked_argmax(q[0], m)))
        state, _ = step(state, move)
    return out


def _write_classification(runs, path):
    import json

    from .ioutil import atomic_write_text

    lines = [json.dumps(classify(r).to_dict(), sort_keys=True) for r in runs]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_trials_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
