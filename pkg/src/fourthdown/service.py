"""HTTP inference service over a loaded bootstrap ensemble.

All endpoints are pure reads of an immutable ensemble loaded at startup;
identical requests produce byte-identical responses. Invalid states get
a 400 with field-level messages; before the ensemble finishes loading
every endpoint returns 503.
"""

from __future__ import annotations

import contextlib
import logging
from typing import Literal

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .bootstrap import BootstrapEnsemble, uncertainty_batch
from .coach import CoachModel
from .engine import FourthDownState, InvalidState, boundary_grid, evaluate

logger = logging.getLogger(__name__)


class StateBody(BaseModel):
    yardline: int = Field(ge=1, le=99)
    ydstogo: int = Field(ge=1)
    game_seconds_remaining: int = Field(ge=1, le=3600)
    score_differential: int
    posteam_spread: float = 0.0
    total_points_line: float = 44.0
    posteam_timeouts: int = Field(default=3, ge=0, le=3)
    defteam_timeouts: int = Field(default=3, ge=0, le=3)
    receive_2h_ko: int = Field(default=0, ge=0, le=1)
    home: int = Field(default=0, ge=0, le=1)
    total_score: int = Field(default=0, ge=0)
    kq: float = 0.0
    pq: float = 0.0

    def to_state(self) -> FourthDownState:
        state = FourthDownState(**self.model_dump())
        state.validate()
        return state


class BoundaryBody(BaseModel):
    state: StateBody
    y_range: tuple[int, int] = (1, 99)
    z_range: tuple[int, int] = (1, 10)
    mode: Literal["point", "boot"] = "point"


class CoachProbsBody(BaseModel):
    state: StateBody
    season: int | None = None


def create_app(
    ensemble_dir=None,
    coach_model_path=None,
    cors_origins: list[str] | None = None,
    ensemble: BootstrapEnsemble | None = None,
    coach_model: CoachModel | None = None,
) -> FastAPI:
    """Build the service; the ensemble loads during startup."""

    ctx: dict = {"ensemble": ensemble, "coach": coach_model, "loaded": ensemble is not None}

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        if ctx["ensemble"] is None:
            logger.info("loading ensemble from %s", ensemble_dir)
            ctx["ensemble"] = BootstrapEnsemble.load(ensemble_dir)
        if ctx["coach"] is None and coach_model_path:
            ctx["coach"] = CoachModel.load(coach_model_path)
        ctx["loaded"] = True
        yield

    app = FastAPI(title="fourthdown", lifespan=lifespan)

    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=cors_origins,
            allow_methods=["*"], allow_headers=["*"],
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        fields = [
            {"field": ".".join(str(p) for p in e["loc"] if p != "body"), "message": e["msg"]}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"errors": fields})

    @app.exception_handler(InvalidState)
    async def state_handler(request: Request, exc: InvalidState):
        return JSONResponse(status_code=400, content={"errors": [{"field": "state", "message": str(exc)}]})

    def _ensemble() -> BootstrapEnsemble:
        if not ctx["loaded"] or ctx["ensemble"] is None:
            raise HTTPException(status_code=503, detail="ensemble not loaded yet")
        return ctx["ensemble"]

    @app.get("/health")
    def health():
        if not ctx["loaded"] or ctx["ensemble"] is None:
            raise HTTPException(status_code=503, detail="loading")
        ens = ctx["ensemble"]
        return {
            "status": "ok",
            "ensemble_fingerprint": ens.data_fingerprint,
            "B": ens.B,
        }

    @app.post("/recommend")
    def recommend(body: StateBody):
        ens = _ensemble()
        state = body.to_state()
        report = uncertainty_batch([state], ens)[0]
        dv = evaluate(state, ens.point_model)
        return {
            "wp": {"go": dv.wp_go, "field_goal": dv.wp_fg, "punt": dv.wp_punt},
            "best": report.decision,
            "effect_size": report.point_effect_size,
            "boot_pct": report.boot_pct,
            "ci": [report.ci_lo, report.ci_hi],
            "bin": report.bin,
            "gains": report.gains,
            "detail": dv.detail,
        }

    @app.post("/boundary")
    def boundary(body: BoundaryBody):
        ens = _ensemble()
        template = body.state.to_state()
        y_lo, y_hi = body.y_range
        z_lo, z_hi = body.z_range
        cells = boundary_grid(
            template, range(y_lo, y_hi + 1), range(z_lo, z_hi + 1),
            ens.point_model, ensemble=ens if body.mode == "boot" else None,
        )
        if body.mode == "point":
            for c in cells:
                c.pop("boot_pct", None)
        return {"cells": cells, "mode": body.mode}

    @app.post("/coach_probs")
    def coach_probs(body: CoachProbsBody):
        _ensemble()
        if ctx["coach"] is None:
            raise HTTPException(status_code=503, detail="no coach model loaded")
        state = body.state.to_state()
        probs = ctx["coach"].probs_for_state(state, season=body.season)
        return {"p_go": probs["go"], "p_fg": probs["field_goal"], "p_punt": probs["punt"]}

    return app
