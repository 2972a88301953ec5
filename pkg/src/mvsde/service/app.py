"""HTTP face of the experiment runners."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import DegenerateInputError, IoError, MvsdeError
from ..report import PACKAGE_VERSION
from .handlers import handle_simulate, handle_study, handle_validate
from .schemas import (
    HealthResponse,
    SimulateResponse,
    StudyRequest,
    StudyResponse,
    ValidateResponse,
)

STUDY_PATHS = {
    "trotter-kato": "trotter_kato",
    "zeroth-order": "zeroth_order",
    "parametric": "parametric",
    "initial": "initial",
    "moments": "moments",
}


def create_app() -> FastAPI:
    app = FastAPI(title="mvsde lab", version=PACKAGE_VERSION)

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=PACKAGE_VERSION)

    @app.post("/v1/validate-config", response_model=ValidateResponse)
    def validate(req: StudyRequest) -> ValidateResponse:
        return handle_validate(req.config_text)

    @app.post("/v1/simulate", response_model=SimulateResponse)
    def simulate(req: StudyRequest) -> SimulateResponse:
        try:
            return handle_simulate(req)
        except (DegenerateInputError, MvsdeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    def make_study_endpoint(kind: str):
        def endpoint(req: StudyRequest) -> StudyResponse:
            try:
                return handle_study(kind, req)
            except IoError as exc:
                raise HTTPException(status_code=500, detail=str(exc)) from exc
            except MvsdeError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc

        return endpoint

    for path, kind in STUDY_PATHS.items():
        app.post(f"/v1/studies/{path}", response_model=StudyResponse, name=f"study_{kind}")(
            make_study_endpoint(kind)
        )
    return app


app = create_app()
