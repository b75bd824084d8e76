"""Durable experiment state: population snapshots, an append-only trial event
log with monotone sequence numbers, seat claiming, and scripted fills."""

from __future__ import annotations

import json
import random
import threading
import uuid
from pathlib import Path

from .errors import GenerationIncomplete, PoolExhausted
from .ioutil import atomic_write_text, derive_seed
from .networks import Network
from .engine import (
    PopulationRun,
    PopulationSpec,
    SeatRecord,
    Session,
    TrialRecord,
    build_population,
    scripted_play_seat,
)


def trial_row(run: PopulationRun, seat: SeatRecord, trial: TrialRecord) -> dict:
    return {
        "type": "trial",
        "seq": trial.seq,
        "population_id": run.population_id,
        "condition": run.condition,
        "generation": seat.generation,
        "seat_index": seat.seat_index,
        "kind": seat.kind,
        "phase": trial.phase,
        "network_id": trial.network_id,
        "moves": trial.moves,
        "rewards": trial.rewards,
        "total": trial.total,
        "bonus": trial.bonus,
    }


class ExperimentStore:
    """All live populations and sessions. One lock serializes mutation and
    the event-log writer; generation gating is therefore atomic."""

    def __init__(self, pool: list[Network], machine_policies: list,
                 root: Path | str | None = None, master_seed: int = 0):
        self.pool = pool
        self.machine_policies = machine_policies
        self.root = Path(root) if root else None
        self.master_seed = master_seed
        self.runs: dict[str, PopulationRun] = {}
        self.sessions: dict[str, Session] = {}
        self._claimed: set[tuple[str, int, int]] = set()
        self._lock = threading.Lock()
        if self.root:
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / "populations").mkdir(exist_ok=True)

    # -- persistence --------------------------------------------------------

    def _persist(self, run: PopulationRun):
        if not self.root:
            return
        path = self.root / "populations" / f"{run.population_id}.json"
        atomic_write_text(path, json.dumps(run.to_dict(), sort_keys=True))

    def _append_event(self, run: PopulationRun, seat: SeatRecord, trial: TrialRecord):
        with self._lock:
            if self.root:
                with open(self.root / "events.ndjson", "a", encoding="utf-8") as f:
                    f.write(json.dumps(trial_row(run, seat, trial), sort_keys=True) + "\n")
                self._persist(run)

    # -- populations --------------------------------------------------------

    def create_population(self, spec: PopulationSpec,
                          population_id: str | None = None) -> PopulationRun:
        with self._lock:
            pid = population_id or f"pop-{len(self.runs)}-{uuid.uuid4().hex[:8]}"
            rng = random.Random(derive_seed(self.master_seed, "population", pid))
            run = build_population(spec, self.pool, self.machine_policies, rng,
                                   population_id=pid)
            self.runs[pid] = run
        self._persist(run)
        return run

    def get(self, population_id: str) -> PopulationRun:
        try:
            return self.runs[population_id]
        except KeyError:
            raise PoolExhausted(f"unknown population {population_id!r}")

    def export(self, population_id: str) -> list[dict]:
        run = self.get(population_id)
        rows = [trial_row(run, seat, trial) for seat, trial in run.all_trials()]
        rows.sort(key=lambda r: r["seq"])
        for gen in run.seats:
            for seat in gen:
                for key in sorted(seat.strategies):
                    rows.append({
                        "type": "strategy",
                        "population_id": run.population_id,
                        "condition": run.condition,
                        "generation": seat.generation,
                        "seat_index": seat.seat_index,
                        "kind": seat.kind,
                        "key": key,
                        "text": seat.strategies[key],
                    })
        return rows

    # -- seat claiming ------------------------------------------------------

    def _open_seats(self, run: PopulationRun):
        for g in range(run.spec.generations):
            if g > 0 and not run.generation_complete(g - 1):
                break
            for seat in run.seats[g]:
                key = (run.population_id, g, seat.seat_index)
                if seat.kind == "human" and not seat.complete and key not in self._claimed:
                    yield seat

    def claim_seat(self, population_id: str) -> tuple[str, Session]:
        """Hand out the next open human seat, depth-first by generation."""
        run = self.get(population_id)
        with self._lock:
            seat = next(self._open_seats(run), None)
            if seat is None:
                raise GenerationIncomplete("no open seat; a gate generation may be incomplete")
            self._claimed.add((run.population_id, seat.generation, seat.seat_index))
            token = uuid.uuid4().hex
            rng = random.Random(derive_seed(
                self.master_seed, "session", run.population_id,
                seat.generation, seat.seat_index))
            session = Session(run, seat, rng, on_trial=self._append_event)
            self.sessions[token] = session
        return token, session

    def get_session(self, token: str) -> Session:
        try:
            return self.sessions[token]
        except KeyError:
            raise GenerationIncomplete(f"unknown session token {token!r}")

    # -- scripted fills -----------------------------------------------------

    def scripted_fill(self, population_id: str, fidelity: float = 1.0,
                      generations: list[int] | None = None):
        """Complete every open human seat with a scripted learner."""
        run = self.get(population_id)
        for g in range(run.spec.generations):
            if generations is not None and g not in generations:
                continue
            for seat in run.seats[g]:
                if seat.complete or seat.kind == "machine":
                    continue
                key = (run.population_id, g, seat.seat_index)
                with self._lock:
                    if key in self._claimed:
                        continue
                    self._claimed.add(key)
                rng = random.Random(derive_seed(
                    self.master_seed, "scripted", run.population_id, g, seat.seat_index))
                scripted_play_seat(run, seat, fidelity, rng,
                                   on_trial=self._append_event)
        self._persist(run)
        return run
