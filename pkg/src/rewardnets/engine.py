"""Transmission-experiment orchestration: populations, seats, phased sessions,
machine demonstrations, scripted stand-in players, and durable trial records.

A population is 5 generations x 8 seats. Generation 0 may contain machine
seats (pre-filled from trained policies); every later seat works through
individual learning, demonstrator selection, observation/repetition of the
demonstrator's solutions, and its own demonstrations. Candidates are shown
only as anonymous labels with average scores; their kind is never exposed.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .errors import (
    GenerationIncomplete,
    IllegalMove,
    IncompleteTrajectory,
    PhaseViolation,
    PoolExhausted,
)
from .networks import (
    N_MOVES,
    EnvState,
    Network,
    Trajectory,
    initial_state,
    observe,
    step,
)
from .qnet import masked_argmax
from .strategies import RulePolicy

CONDITIONS = ("human_only", "human_machine")
CANDIDATE_LABELS = ("A", "B", "C", "D", "E", "F", "G", "H")


@dataclass
class PopulationSpec:
    condition: str = "human_machine"
    generations: int = 5
    seats_per_generation: int = 8
    machine_seats: int = 3
    candidate_count: int = 5
    individual_trials_gen0: int = 6
    individual_trials_later: int = 2
    demo_trials: int = 4
    social_trials: int = 4

    def validate(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")
        if self.candidate_count > self.seats_per_generation:
            raise ValueError("candidate_count exceeds seats per generation")
        if self.machine_seats > self.seats_per_generation:
            raise ValueError("machine_seats exceeds seats per generation")

    def individual_trials(self, generation: int) -> int:
        return self.individual_trials_gen0 if generation == 0 else self.individual_trials_later

    def machines_in(self, generation: int) -> int:
        if self.condition == "human_machine" and generation == 0:
            return self.machine_seats
        return 0


@dataclass
class TrialRecord:
    phase: str  # individual | repeat | try_self | demonstration
    network_id: str
    moves: list[int]
    rewards: list[int]
    total: int
    bonus: int = 0  # repeat-phase +-100 tally
    seq: int = -1

    def to_dict(self):
        return {
            "phase": self.phase,
            "network_id": self.network_id,
            "moves": list(self.moves),
            "rewards": list(self.rewards),
            "total": self.total,
            "bonus": self.bonus,
            "seq": self.seq,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["phase"], d["network_id"], list(d["moves"]), list(d["rewards"]),
                   d["total"], d.get("bonus", 0), d.get("seq", -1))


@dataclass
class SeatRecord:
    population_id: str
    generation: int
    seat_index: int
    kind: str = "human"  # human | machine | scripted
    demonstrator: int | None = None  # seat index in the previous generation
    trials: list[TrialRecord] = field(default_factory=list)
    strategies: dict = field(default_factory=dict)  # {"pre": str, "post": str}
    individual_networks: list[str] = field(default_factory=list)
    demo_networks: list[str] = field(default_factory=list)
    strategy_flag: bool | None = None  # externally supplied ground truth
    complete: bool = False

    def trials_in(self, phase: str) -> list[TrialRecord]:
        return [t for t in self.trials if t.phase == phase]

    @property
    def average_demo_score(self) -> float | None:
        demos = self.trials_in("demonstration")
        if not demos:
            return None
        return sum(t.total for t in demos) / len(demos)

    @property
    def average_individual_score(self) -> float | None:
        ind = self.trials_in("individual")
        if not ind:
            return None
        return sum(t.total for t in ind) / len(ind)

    def to_dict(self):
        return {
            "population_id": self.population_id,
            "generation": self.generation,
            "seat_index": self.seat_index,
            "kind": self.kind,
            "demonstrator": self.demonstrator,
            "trials": [t.to_dict() for t in self.trials],
            "strategies": dict(self.strategies),
            "individual_networks": list(self.individual_networks),
            "demo_networks": list(self.demo_networks),
            "strategy_flag": self.strategy_flag,
            "complete": self.complete,
        }

    @classmethod
    def from_dict(cls, d):
        seat = cls(d["population_id"], d["generation"], d["seat_index"], d["kind"],
                   d["demonstrator"])
        seat.trials = [TrialRecord.from_dict(t) for t in d["trials"]]
        seat.strategies = dict(d["strategies"])
        seat.individual_networks = list(d["individual_networks"])
        seat.demo_networks = list(d["demo_networks"])
        seat.strategy_flag = d.get("strategy_flag")
        seat.complete = d["complete"]
        return seat


class PopulationRun:
    def __init__(self, population_id: str, spec: PopulationSpec,
                 seats: list[list[SeatRecord]], networks: dict[str, Network]):
        self.population_id = population_id
        self.spec = spec
        self.seats = seats
        self.networks = networks
        self._seq = itertools.count()
        # runtime-only: behavior policies per (generation, seat) for scripted play
        self.behavior_policies: dict[tuple[int, int], object] = {}

    @property
    def condition(self) -> str:
        return self.spec.condition

    def seat(self, generation: int, index: int) -> SeatRecord:
        return self.seats[generation][index]

    def generation_complete(self, generation: int) -> bool:
        return all(s.complete for s in self.seats[generation])

    def complete(self) -> bool:
        return all(self.generation_complete(g) for g in range(self.spec.generations))

    def next_seq(self) -> int:
        return next(self._seq)

    def all_trials(self):
        for gen in self.seats:
            for seat in gen:
                for trial in seat.trials:
                    yield seat, trial

    def to_dict(self):
        return {
            "population_id": self.population_id,
            "spec": self.spec.__dict__,
            "seats": [[s.to_dict() for s in gen] for gen in self.seats],
            "networks": [self.networks[k].to_dict() for k in sorted(self.networks)],
        }

    @classmethod
    def from_dict(cls, d):
        spec = PopulationSpec(**d["spec"])
        seats = [[SeatRecord.from_dict(s) for s in gen] for gen in d["seats"]]
        networks = {n["network_id"]: Network.from_dict(n) for n in d["networks"]}
        run = cls(d["population_id"], spec, seats, networks)
        run._seq = itertools.count(1 + max(
            (t.seq for g in seats for s in g for t in s.trials), default=-1))
        return run


# ---------------------------------------------------------------------------
# Policies usable as seat behavior (machines and scripted learners)


class GreedyQPolicy:
    """Greedy wrapper around a trained Q-network; hidden state per episode."""

    def __init__(self, qnet):
        self.qnet = qnet
        self.reset()

    def reset(self):
        self._h = self.qnet.zero_hidden(1)

    def act(self, state: EnvState) -> int:
        obs, mask = observe(state)
        q, self._h = self.qnet.step(obs.ravel()[None, :], self._h)
        return int(masked_argmax(q[0], mask))


class CopyPolicy:
    """Per-move imitation: with probability `fidelity` play what the source
    policy would play here, otherwise fall back (myopic by default)."""

    def __init__(self, source, fidelity: float, rng: random.Random, fallback=None):
        self.source = source
        self.fidelity = fidelity
        self.rng = rng
        self.fallback = fallback or RulePolicy("myopic")

    def reset(self):
        self.source.reset()
        self.fallback.reset()

    def act(self, state: EnvState) -> int:
        preferred = self.source.act(state)
        alternative = self.fallback.act(state)
        return preferred if self.rng.random() < self.fidelity else alternative


def rollout(policy, net: Network) -> Trajectory:
    policy.reset()
    state = initial_state(net)
    moves, rewards = [], []
    while not state.terminal:
        target = policy.act(state)
        state, r = step(state, target)
        moves.append(target)
        rewards.append(r)
    return Trajectory(net.network_id, moves, rewards, sum(rewards))


# ---------------------------------------------------------------------------
# Population construction


def build_population(
    spec: PopulationSpec,
    pool: list[Network],
    machine_policies: list,
    rng: random.Random,
    population_id: str = "pop-0",
) -> PopulationRun:
    """Lay out seats and per-seat network plans (no seat ever replays a
    network) and pre-fill machine seats with greedy demonstrations."""
    spec.validate()
    machines_needed = spec.machines_in(0)
    if machines_needed and len(machine_policies) < machines_needed:
        raise ValueError(
            f"need {machines_needed} machine policies, got {len(machine_policies)}")
    order = list(pool)
    rng.shuffle(order)
    cursor = iter(order)

    def draw(count):
        picked = list(itertools.islice(cursor, count))
        if len(picked) < count:
            raise PoolExhausted("experiment pool too small for the network plan")
        return picked

    networks: dict[str, Network] = {}
    seats: list[list[SeatRecord]] = []
    for g in range(spec.generations):
        row = []
        for i in range(spec.seats_per_generation):
            seat = SeatRecord(population_id, g, i)
            own = draw(spec.individual_trials(g) + spec.demo_trials)
            for net in own:
                networks[net.network_id] = net
            seat.individual_networks = [
                n.network_id for n in own[: spec.individual_trials(g)]]
            seat.demo_networks = [
                n.network_id for n in own[spec.individual_trials(g):]]
            row.append(seat)
        seats.append(row)

    run = PopulationRun(population_id, spec, seats, networks)
    for i in range(machines_needed):
        seat = run.seat(0, i)
        seat.kind = "machine"
        policy = machine_policies[i]
        run.behavior_policies[(0, i)] = policy
        for net_id in seat.demo_networks:
            traj = rollout(policy, run.networks[net_id])
            record_trial(run, seat, traj, "demonstration")
        seat.strategies = {"pre": "", "post": ""}
        seat.complete = True
    return run


def record_trial(run: PopulationRun, seat: SeatRecord, traj: Trajectory,
                 phase: str, bonus: int = 0) -> TrialRecord:
    """Validate and append a finished trial to the seat's durable record."""
    if len(traj.moves) != N_MOVES:
        raise IncompleteTrajectory(
            f"trajectory has {len(traj.moves)} of {N_MOVES} moves")
    if phase in ("repeat", "try_self") and seat.generation == 0:
        raise PhaseViolation("generation 0 has no social phases")
    record = TrialRecord(phase, traj.network_id, traj.moves, traj.rewards,
                         traj.total, bonus, seq=run.next_seq())
    seat.trials.append(record)
    return record


def draw_candidates(run: PopulationRun, seat: SeatRecord, rng: random.Random) -> list[SeatRecord]:
    """Candidate demonstrators: distinct seats drawn uniformly from the
    previous generation, which must be complete."""
    if seat.generation == 0:
        raise PhaseViolation("generation 0 has no demonstrators")
    prev = seat.generation - 1
    if not run.generation_complete(prev):
        raise GenerationIncomplete(f"generation {prev} still has open seats")
    pool = run.seats[prev]
    count = min(run.spec.candidate_count, len(pool))
    return rng.sample(pool, count)


def candidate_payload(candidates: list[SeatRecord], own_reference: float | None) -> dict:
    """What a learner is shown: anonymous labels and integer average scores.
    The candidate kind is deliberately absent."""
    return {
        "candidates": [
            {"label": CANDIDATE_LABELS[i], "average_score": int(round(c.average_demo_score))}
            for i, c in enumerate(candidates)
        ],
        "own_average_score": None if own_reference is None else int(round(own_reference)),
    }


def repeat_score(demonstrator_move: int, learner_move: int) -> int:
    return 100 if learner_move == demonstrator_move else -100


def lineage_root(run: PopulationRun, generation: int, seat_index: int) -> SeatRecord:
    """Follow chosen-demonstrator links back to generation 0."""
    seat = run.seat(generation, seat_index)
    while seat.generation > 0:
        if seat.demonstrator is None:
            raise IncompleteRunLineage(seat)
        seat = run.seat(seat.generation - 1, seat.demonstrator)
    return seat


class IncompleteRunLineage(Exception):
    def __init__(self, seat):
        super().__init__(f"seat g{seat.generation}/{seat.seat_index} has no demonstrator")
        self.seat = seat


# ---------------------------------------------------------------------------
# Live sessions (phase machine shared by the HTTP API and scripted players)

PLAYABLE_PHASES = {"individual_learning", "repeat", "try_self", "demonstration"}
PHASE_TO_TRIAL = {
    "individual_learning": "individual",
    "repeat": "repeat",
    "try_self": "try_self",
    "demonstration": "demonstration",
}


@dataclass
class PhaseStep:
    name: str
    network_id: str | None = None
    social_index: int | None = None


class Session:
    """One seat's walk through the experimental flow. Mutated serially by a
    single owner; the engine's store serializes persistence."""

    def __init__(self, run: PopulationRun, seat: SeatRecord, rng: random.Random,
                 on_trial=None):
        self.run = run
        self.seat = seat
        self.rng = rng
        self.on_trial = on_trial
        self.candidates: list[SeatRecord] | None = None
        self.repeat_tally = 0
        self._pending_correction: int | None = None
        self._env: EnvState | None = None
        self._bonus = 0
        self.plan = self._initial_plan()
        self.cursor = 0
        self._enter_phase()

    # -- plan ---------------------------------------------------------------

    def _initial_plan(self) -> list[PhaseStep]:
        spec = self.run.spec
        seat = self.seat
        plan = [PhaseStep("intro")]
        plan += [PhaseStep("individual_learning", nid) for nid in seat.individual_networks]
        plan.append(PhaseStep("strategy_entry", None, None))
        if seat.generation > 0:
            plan.append(PhaseStep("demonstrator_selection"))
            # observe/repeat/try cycles are appended once a demonstrator is chosen
        else:
            plan += self._closing_plan()
        return plan

    def _closing_plan(self) -> list[PhaseStep]:
        return (
            [PhaseStep("strategy_entry")]
            + [PhaseStep("demonstration", nid) for nid in self.seat.demo_networks]
        )

    @property
    def phase(self) -> str:
        return "done" if self.cursor >= len(self.plan) else self.plan[self.cursor].name

    @property
    def current_step(self) -> PhaseStep | None:
        return None if self.cursor >= len(self.plan) else self.plan[self.cursor]

    def _enter_phase(self):
        step_ = self.current_step
        self._env = None
        self._bonus = 0
        self._pending_correction = None
        self._moves_taken: list[int] = []
        self._rewards_taken: list[int] = []
        if step_ and step_.network_id:
            self._env = initial_state(self.run.networks[step_.network_id])

    def _advance(self):
        self.cursor += 1
        self._enter_phase()

    # -- views --------------------------------------------------------------

    def state(self) -> dict:
        step_ = self.current_step
        payload = {
            "phase": self.phase,
            "generation": self.seat.generation,
            "seat_index": self.seat.seat_index,
            "step": self.cursor,
            "total_steps": len(self.plan),
            "repeat_tally": self.repeat_tally,
        }
        if step_ and step_.social_index is not None:
            payload["social_index"] = step_.social_index
        if self._env is not None:
            net = self._env.network
            payload["trial"] = {
                "network_id": net.network_id,
                "current_node": self._env.current_node,
                "move_index": self._env.move_index,
                "accrued_reward": self._env.accrued_reward,
                "edges": [
                    {"target": e.target, "reward": e.reward}
                    for e in net.out_edges(self._env.current_node)
                ],
                "pending_correction": self._pending_correction,
            }
        return payload

    # -- actions ------------------------------------------------------------

    def advance(self):
        """Acknowledge a non-playable phase (intro, observe)."""
        if self.phase not in ("intro", "observe"):
            raise PhaseViolation(f"cannot advance during {self.phase}")
        self._advance()

    def get_candidates(self) -> dict:
        if self.phase != "demonstrator_selection":
            raise PhaseViolation(f"no candidates during {self.phase}")
        if self.candidates is None:
            self.candidates = draw_candidates(self.run, self.seat, self.rng)
        return candidate_payload(self.candidates, self.seat.average_individual_score)

    def select(self, label: str):
        if self.phase != "demonstrator_selection":
            raise PhaseViolation(f"cannot select during {self.phase}")
        if self.candidates is None:
            self.get_candidates()
        try:
            chosen = self.candidates[CANDIDATE_LABELS.index(label)]
        except (ValueError, IndexError):
            raise PhaseViolation(f"unknown candidate label {label!r}")
        self.seat.demonstrator = chosen.seat_index
        cycles = []
        for k, nid in enumerate(chosen.demo_networks[: self.run.spec.social_trials]):
            cycles += [
                PhaseStep("observe", nid, k),
                PhaseStep("repeat", nid, k),
                PhaseStep("try_self", nid, k),
            ]
        self.plan = self.plan[: self.cursor + 1] + cycles + self._closing_plan()
        self._advance()

    def replay(self) -> dict:
        if self.phase != "observe":
            raise PhaseViolation(f"no replay during {self.phase}")
        step_ = self.current_step
        demo = self._demonstrator_trial(step_.network_id)
        return {
            "network_id": step_.network_id,
            "moves": list(demo.moves),
            "rewards": list(demo.rewards),
            "total": demo.total,
            "step_ms": 800,
        }

    def _demonstrator_trial(self, network_id: str) -> TrialRecord:
        demo_seat = self.run.seat(self.seat.generation - 1, self.seat.demonstrator)
        for t in demo_seat.trials_in("demonstration"):
            if t.network_id == network_id:
                return t
        raise PhaseViolation(f"demonstrator has no demonstration on {network_id}")

    def move(self, target: int) -> dict:
        if self.phase not in PLAYABLE_PHASES:
            raise PhaseViolation(f"cannot move during {self.phase}")
        if self.phase == "repeat":
            return self._repeat_move(target)
        env, reward = step(self._env, target)
        self._env = env
        self._moves_taken.append(target)
        self._rewards_taken.append(reward)
        result = {"reward": reward, "total": env.accrued_reward,
                  "move_index": env.move_index}
        if env.terminal:
            self._finish_trial()
            result["trial_complete"] = True
        return result

    def _repeat_move(self, target: int) -> dict:
        demo = self._demonstrator_trial(self.current_step.network_id)
        expected = demo.moves[self._env.move_index]
        if self._pending_correction is not None:
            if target != self._pending_correction:
                raise IllegalMove(
                    f"must enact the indicated move {self._pending_correction}")
            env, _ = step(self._env, target)
            self._env = env
            self._pending_correction = None
            result = {"score": 0, "correct_move": None,
                      "repeat_tally": self.repeat_tally,
                      "move_index": env.move_index}
        else:
            if self._env.network.edge_reward(self._env.current_node, target) is None:
                raise IllegalMove(f"no edge {self._env.current_node} -> {target}")
            score = repeat_score(expected, target)
            self.repeat_tally += score
            self._bonus += score
            if score > 0:
                env, _ = step(self._env, target)
                self._env = env
                result = {"score": score, "correct_move": None,
                          "repeat_tally": self.repeat_tally,
                          "move_index": env.move_index}
            else:
                self._pending_correction = expected
                result = {"score": score, "correct_move": expected,
                          "repeat_tally": self.repeat_tally,
                          "move_index": self._env.move_index}
        if self._env.terminal:
            self._finish_trial()
            result["trial_complete"] = True
        return result

    def _finish_trial(self):
        step_ = self.current_step
        net = self.run.networks[step_.network_id]
        if self.phase == "repeat":
            demo = self._demonstrator_trial(step_.network_id)
            traj = Trajectory(net.network_id, list(demo.moves), list(demo.rewards),
                              demo.total)
        else:
            traj = Trajectory(net.network_id, list(self._moves_taken),
                              list(self._rewards_taken), sum(self._rewards_taken))
        record = record_trial(self.run, self.seat, traj,
                              PHASE_TO_TRIAL[self.phase], bonus=self._bonus)
        if self.on_trial:
            self.on_trial(self.run, self.seat, record)
        self._advance()
        if self.phase == "done":
            self.seat.complete = True

    def submit_strategy(self, text: str):
        if self.phase != "strategy_entry":
            raise PhaseViolation(f"cannot submit strategy during {self.phase}")
        key = "pre" if "pre" not in self.seat.strategies else "post"
        self.seat.strategies[key] = text
        self._advance()
        if self.phase == "done":
            self.seat.complete = True


# ---------------------------------------------------------------------------
# Scripted stand-in players


def scripted_play_seat(
    run: PopulationRun,
    seat: SeatRecord,
    fidelity: float,
    rng: random.Random,
    strategy_text: str = "scripted",
    on_trial=None,
) -> SeatRecord:
    """Drive a human seat to completion with the copy-fidelity behavior model:
    myopic play before a demonstrator exists, then per-move imitation of the
    chosen demonstrator with probability `fidelity` (myopic fallback).
    Selection is selective (highest shown average score)."""
    seat.kind = "scripted"
    session = Session(run, seat, rng, on_trial=on_trial)
    base = RulePolicy("myopic")
    policy = base
    run.behavior_policies[(seat.generation, seat.seat_index)] = policy
    while session.phase != "done":
        phase = session.phase
        if phase in ("intro", "observe"):
            session.advance()
        elif phase == "strategy_entry":
            session.submit_strategy(strategy_text)
        elif phase == "demonstrator_selection":
            shown = session.get_candidates()["candidates"]
            best = max(shown, key=lambda c: c["average_score"])
            session.select(best["label"])
            source = run.behavior_policies[
                (seat.generation - 1, seat.demonstrator)]
            policy = CopyPolicy(source, fidelity, rng, fallback=base)
            run.behavior_policies[(seat.generation, seat.seat_index)] = policy
        elif phase == "repeat":
            demo = session._demonstrator_trial(session.current_step.network_id)
            while session.phase == "repeat":
                session.move(demo.moves[session._env.move_index])
        else:  # individual_learning, try_self, demonstration
            policy.reset()
            for _ in range(N_MOVES):
                session.move(policy.act(session._env))
    return seat
