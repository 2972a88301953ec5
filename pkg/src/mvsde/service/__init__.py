from .app import app, create_app
from .handlers import handle_simulate, handle_study, handle_validate
from .schemas import (
    CriterionModel,
    HealthResponse,
    RowModel,
    SimulateResponse,
    StudyRequest,
    StudyResponse,
    ValidateResponse,
)

__all__ = [
    "app",
    "create_app",
    "handle_simulate",
    "handle_study",
    "handle_validate",
    "CriterionModel",
    "HealthResponse",
    "RowModel",
    "SimulateResponse",
    "StudyRequest",
    "StudyResponse",
    "ValidateResponse",
]
