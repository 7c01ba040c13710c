"""HTTP front end for the trial store.

Thin JSON layer over :mod:`brar.trial`; all statistics stay server-side so a
browser console can render snapshots without reimplementing any math. Errors
are reported as ``{"code": ..., "message": ...}`` with conventional status
classes (422 validation, 404 not found, 409 conflict).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import BrarError, InvalidArgumentError, TrialConflictError, TrialNotFoundError
from .trial import (
    TrialConfig,
    TrialStore,
    create_trial,
    draw_allocation,
    evidence_history,
    get_snapshot,
    record_outcome,
)

__all__ = ["create_app"]


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(store_root: str) -> FastAPI:
    store = TrialStore(store_root)
    app = FastAPI(title="brar trial service")

    @app.exception_handler(InvalidArgumentError)
    async def _invalid(_req: Request, exc: InvalidArgumentError):
        return _error(422, "validation", str(exc))

    @app.exception_handler(TrialNotFoundError)
    async def _missing(_req: Request, exc: TrialNotFoundError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(TrialConflictError)
    async def _conflict(_req: Request, exc: TrialConflictError):
        return _error(409, "conflict", str(exc))

    @app.exception_handler(BrarError)
    async def _other(_req: Request, exc: BrarError):
        return _error(422, "validation", str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/trials")
    async def list_trials():
        return {"trials": store.list_ids()}

    @app.post("/trials", status_code=201)
    async def post_trial(request: Request):
        body = await request.json()
        try:
            config = TrialConfig.from_json(body)
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"bad trial config: {exc}") from exc
        trial_id = create_trial(store, config)
        return get_snapshot(store, trial_id).to_json()

    @app.get("/trials/{trial_id}")
    async def get_trial(trial_id: str):
        return get_snapshot(store, trial_id).to_json()

    @app.post("/trials/{trial_id}/draw")
    async def post_draw(trial_id: str, request: Request):
        body = await request.json() if await request.body() else {}
        patient = body.get("patient")
        allow_pending = bool(body.get("allow_pending", False))
        allocation, arm, patient = draw_allocation(
            store, trial_id, patient=patient, allow_pending=allow_pending
        )
        return {"patient": patient, "allocation": list(allocation.probs), "arm": arm}

    @app.post("/trials/{trial_id}/outcomes")
    async def post_outcome(trial_id: str, request: Request):
        body = await request.json()
        try:
            patient = int(body["patient"])
            outcome = int(body["outcome"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"bad outcome payload: {exc}") from exc
        arm = body.get("arm")
        snapshot = record_outcome(
            store,
            trial_id,
            patient,
            outcome,
            arm=int(arm) if arm is not None else None,
            external_arm=bool(body.get("external_arm", False)),
        )
        return snapshot.to_json()

    @app.get("/trials/{trial_id}/evidence")
    async def get_evidence(trial_id: str, history: bool = False):
        snapshot = get_snapshot(store, trial_id)
        out = snapshot.to_json()
        if history:
            out["history"] = evidence_history(store, trial_id)
        return out

    return app
