"""Plain-function service handlers; the HTTP app and the CLI both call these."""

from __future__ import annotations

import numpy as np

from ..config import Overrides, study_kind, validate_config
from ..errors import MvsdeError
from ..report import ConvergenceReport
from ..studies import (
    run_initial_dependence,
    run_moment_bound,
    run_parametric,
    run_simulate,
    run_trotter_kato,
    run_zeroth_order,
)
from .schemas import (
    CriterionModel,
    RowModel,
    SimulateResponse,
    StudyRequest,
    StudyResponse,
    ValidateResponse,
)

STUDY_RUNNERS = {
    "trotter_kato": run_trotter_kato,
    "zeroth_order": run_zeroth_order,
    "parametric": run_parametric,
    "initial": run_initial_dependence,
    "moments": run_moment_bound,
}


def _overrides(req: StudyRequest) -> Overrides:
    return Overrides(seed=req.seed, particles=req.particles, steps=req.steps, workers=req.workers)


def _to_response(report: ConvergenceReport) -> StudyResponse:
    return StudyResponse(
        study=report.study,
        seed=report.seed,
        passed=report.passed,
        rows=[
            RowModel(
                sweep_param=r.sweep_param,
                sup_coupled_err=r.sup_coupled_err,
                sup_coupled_err_se=r.sup_coupled_err_se,
                sup_rho_upper=r.sup_rho_upper,
                slope_fit=r.slope_fit,
                criterion=r.criterion,
                passed=r.passed,
            )
            for r in report.rows
        ],
        criteria=[
            CriterionModel(name=c.name, passed=c.passed, detail=c.detail) for c in report.criteria
        ],
        csv_text=report.to_csv(),
    )


def handle_study(kind: str, req: StudyRequest) -> StudyResponse:
    report = STUDY_RUNNERS[kind](req.config_text, _overrides(req))
    return _to_response(report)


def handle_simulate(req: StudyRequest) -> SimulateResponse:
    report = run_simulate(req.config_text, _overrides(req))
    m2 = np.asarray(report.columns["moment2"])
    return SimulateResponse(
        seed=report.seed,
        final_moment2=float(m2[-1]),
        sup_moment2=float(np.max(m2)),
        csv_text=report.to_csv(),
    )


def handle_validate(config_text: str) -> ValidateResponse:
    try:
        cfg = validate_config(config_text, None)
    except MvsdeError as exc:
        return ValidateResponse(valid=False, study=None, problems=str(exc).split("; "))
    return ValidateResponse(valid=True, study=study_kind(cfg), problems=[])
