"""Convergence reports and their CSV serialisation.

One data row per sweep point with a fixed column set; everything report-level
(config echo, seed, version, note values, aggregate criteria) lives on `#`
header lines.  Serialisation is deterministic byte-for-byte for identical
inputs: floats render with shortest round-trip repr and ordering is fixed.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import IoError

PACKAGE_VERSION = "0.1.0"
CSV_COLUMNS = (
    "sweep_param",
    "sup_coupled_err",
    "sup_coupled_err_se",
    "sup_rho_upper",
    "slope_fit",
    "criterion",
    "pass",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return repr(float(value))


@dataclass(frozen=True)
class ReportRow:
    sweep_param: str
    sup_coupled_err: float
    sup_coupled_err_se: float
    sup_rho_upper: float | None
    slope_fit: float | None
    criterion: str
    passed: bool


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConvergenceReport:
    study: str
    seed: int
    config_text: str
    rows: list[ReportRow] = field(default_factory=list)
    criteria: list[CriterionResult] = field(default_factory=list)
    notes: list[tuple[str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows) and all(c.passed for c in self.criteria)

    def to_csv(self) -> str:
        lines = [
            f"# version = {PACKAGE_VERSION}",
            f"# study = {self.study}",
            f"# seed = {self.seed}",
        ]
        for key, value in self.notes:
            lines.append(f"# {key} = {value}")
        for crit in self.criteria:
            detail = f" ({crit.detail})" if crit.detail else ""
            lines.append(f"# criterion {crit.name} = {'pass' if crit.passed else 'fail'}{detail}")
        lines.append("# config-begin")
        for cfg_line in self.config_text.splitlines():
            lines.append(f"# {cfg_line}" if cfg_line else "#")
        lines.append("# config-end")
        lines.append(",".join(CSV_COLUMNS))
        for row in self.rows:
            lines.append(
                ",".join(
                    [
                        _fmt(row.sweep_param),
                        _fmt(row.sup_coupled_err),
                        _fmt(row.sup_coupled_err_se),
                        _fmt(row.sup_rho_upper),
                        _fmt(row.slope_fit),
                        row.criterion,
                        "pass" if row.passed else "fail",
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def emit_report(report: ConvergenceReport, path: str) -> None:
    """Write the CSV; partial files are not left behind on failure."""
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        os.replace(tmp, path)
    except OSError as exc:
        try:
            if os.path.exists(tmp):
                os.unlink(tmp)
        except OSError:
            pass
        raise IoError(f"cannot write report to {path}: {exc}") from exc


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x; inputs must be positive."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size != ys.size or xs.size < 2:
        raise ValueError("slope fit needs at least two matched points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("slope fit needs strictly positive values")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def monte_carlo_floor(replicate_values) -> float:
    """Spread (max - min) across seed replicates: the resolvable-error floor."""
    vals = [float(v) for v in replicate_values]
    if len(vals) < 2:
        raise ValueError("floor estimate needs at least two replicates")
    return max(vals) - min(vals)


def default_tolerance(replicate_values) -> float:
    """max(1e-10, 5 * Monte Carlo floor)."""
    return max(1e-10, 5.0 * monte_carlo_floor(replicate_values))


@dataclass
class TimeSeriesReport:
    """Plain trajectory summary (no pass/fail semantics)."""

    seed: int
    config_text: str
    times: np.ndarray
    columns: dict  # name -> array over times
    notes: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [
            f"# version = {PACKAGE_VERSION}",
            "# study = simulate",
            f"# seed = {self.seed}",
        ]
        for key, value in self.notes:
            lines.append(f"# {key} = {value}")
        lines.append("# config-begin")
        for cfg_line in self.config_text.splitlines():
            lines.append(f"# {cfg_line}" if cfg_line else "#")
        lines.append("# config-end")
        names = list(self.columns)
        lines.append(",".join(["t"] + names))
        for j, t in enumerate(self.times):
            vals = [repr(float(t))] + [repr(float(self.columns[n][j])) for n in names]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"


def emit_time_series(report: TimeSeriesReport, path: str) -> None:
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        os.replace(tmp, path)
    except OSError as exc:
        try:
            if os.path.exists(tmp):
                os.unlink(tmp)
        except OSError:
            pass
        raise IoError(f"cannot write report to {path}: {exc}") from exc


def within_se(value: float, target: float, se: float, factor: float = 3.0) -> bool:
    return abs(value - target) <= factor * se


def se_of_max(values, ses) -> tuple[float, float]:
    """Value and standard error of a series at its maximum."""
    idx = int(np.argmax(np.asarray(values)))
    return float(values[idx]), float(ses[idx])


def is_finite_positive(x: float) -> bool:
    return math.isfinite(x) and x > 0
