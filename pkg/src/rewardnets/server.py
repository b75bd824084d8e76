"""HTTP session API over the experiment store.

JSON in and out; errors carry machine-readable codes in the body, mirroring
the engine's exception taxonomy.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
import json

from .errors import (
    EpisodeOver,
    GenerationIncomplete,
    IllegalMove,
    IncompleteTrajectory,
    PhaseViolation,
    PoolExhausted,
)
from .engine import PopulationSpec
from .store import ExperimentStore

ERROR_STATUS = {
    "illegal_move": 400,
    "episode_over": 400,
    "phase_violation": 409,
    "generation_incomplete": 409,
    "pool_exhausted": 409,
    "incomplete_trajectory": 400,
    "not_found": 404,
    "invalid_config": 422,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message


def _code_of(exc: Exception) -> str:
    return getattr(exc, "code", None) or {
        IllegalMove: "illegal_move",
        EpisodeOver: "episode_over",
        PhaseViolation: "phase_violation",
        GenerationIncomplete: "generation_incomplete",
        PoolExhausted: "pool_exhausted",
        IncompleteTrajectory: "incomplete_trajectory",
    }.get(type(exc), "runtime_error")


def create_app(store: ExperimentStore) -> FastAPI:
    app = FastAPI(title="reward-network sessions")

    @app.exception_handler(Exception)
    async def on_error(request: Request, exc: Exception):
        if isinstance(exc, ApiError):
            code, message = exc.code, exc.message
        elif isinstance(exc, KeyError):
            code, message = "not_found", str(exc)
        else:
            code, message = _code_of(exc), str(exc)
        status = ERROR_STATUS.get(code, 500)
        return JSONResponse(status_code=status,
                            content={"error": code, "message": message})

    for exc_type in (ApiError, KeyError, IllegalMove, EpisodeOver, PhaseViolation,
                     GenerationIncomplete, PoolExhausted, IncompleteTrajectory,
                     ValueError):
        app.add_exception_handler(exc_type, on_error)

    def session_of(token: str):
        if token not in store.sessions:
            raise ApiError("not_found", f"unknown session {token}")
        return store.sessions[token]

    @app.post("/populations")
    async def create_population(body: dict | None = None):
        body = body or {}
        try:
            spec = PopulationSpec(**body)
            spec.validate()
        except (TypeError, ValueError) as e:
            raise ApiError("invalid_config", str(e))
        run = store.create_population(spec)
        return {"population_id": run.population_id, "condition": run.condition}

    @app.post("/populations/{population_id}/seats/claim")
    async def claim(population_id: str):
        if population_id not in store.runs:
            raise ApiError("not_found", f"unknown population {population_id}")
        token, session = store.claim_seat(population_id)
        return {
            "session_token": token,
            "generation": session.seat.generation,
            "seat_index": session.seat.seat_index,
        }

    @app.get("/sessions/{token}/state")
    async def state(token: str):
        return session_of(token).state()

    @app.get("/sessions/{token}/candidates")
    async def candidates(token: str):
        return session_of(token).get_candidates()

    @app.post("/sessions/{token}/select")
    async def select(token: str, body: dict):
        session = session_of(token)
        session.select(body.get("candidate_label", ""))
        return session.state()

    @app.get("/sessions/{token}/replay")
    async def replay(token: str):
        return session_of(token).replay()

    @app.post("/sessions/{token}/move")
    async def move(token: str, body: dict):
        target = body.get("target")
        if not isinstance(target, int):
            raise ApiError("illegal_move", "body must carry an integer target")
        return session_of(token).move(target)

    @app.post("/sessions/{token}/advance")
    async def advance(token: str):
        session = session_of(token)
        session.advance()
        return session.state()

    @app.post("/sessions/{token}/strategy")
    async def strategy(token: str, body: dict):
        session = session_of(token)
        session.submit_strategy(str(body.get("text", "")))
        return session.state()

    @app.get("/populations/{population_id}/export")
    async def export(population_id: str):
        if population_id not in store.runs:
            raise ApiError("not_found", f"unknown population {population_id}")
        rows = store.export(population_id)
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.post("/populations/{population_id}/scripted")
    async def scripted(population_id: str, body: dict | None = None):
        # testing/demo helper: complete open seats with scripted learners
        body = body or {}
        if population_id not in store.runs:
            raise ApiError("not_found", f"unknown population {population_id}")
        run = store.scripted_fill(
            population_id,
            fidelity=float(body.get("fidelity", 1.0)),
            generations=body.get("generations"),
        )
        return {"population_id": run.population_id, "complete": run.complete()}

    return app
