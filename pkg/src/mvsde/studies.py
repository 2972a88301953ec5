"""Experiment runners: sweep, compare, assert, report.

Every runner takes config text plus command-line overrides, drives coupled
particle simulations (common random numbers within each compared pair), and
returns a ConvergenceReport whose rows and criteria encode the checks.
Sweep points run under deterministically derived sub-seeds, so reports are
byte-identical regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .coefficients import scaled_drift, shifted_drift
from .config import (
    ExperimentConfig,
    Overrides,
    NO_OVERRIDES,
    build_generator,
    build_initial,
    build_problem,
    drift_profile,
    effective_seed,
    effective_workers,
    flux_profile,
    validate_config,
)
from .dynamics import (
    SdeProblem,
    coupled_difference,
    estimate_moment,
    fixed_initial,
    initial_dependence_constant,
    simulate_particle_system,
    with_coefficients,
    with_generator,
)
from .errors import ConfigError, DegenerateInputError
from .measure import EmpiricalMeasure, rho_method, rho_upper
from .noise import derive_seed
from .report import (
    ConvergenceReport,
    CriterionResult,
    ReportRow,
    TimeSeriesReport,
    fit_loglog_slope,
)
from .semigroup import (
    Generator,
    divergence_form_family,
    make_generator,
    trotter_kato_defect,
    yosida_family,
)

DEFECT_GRID_POINTS = 33


def _map_indexed(fn, count: int, workers: int) -> list:
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(workers, count)) as pool:
        return list(pool.map(fn, range(count)))


def _require_sweep(cfg: ExperimentConfig) -> list[float]:
    if not cfg.has("study", "sweep"):
        raise ConfigError("[study] sweep is required for this runner")
    sweep = cfg.get("study", "sweep")
    if not sweep:
        raise ConfigError("[study] sweep must not be empty")
    return [float(v) for v in sweep]


def _rho_time_indices(steps: int, count: int) -> np.ndarray:
    count = max(2, min(count, steps + 1))
    return np.unique(np.linspace(0, steps, count).round().astype(int))


def _sup_rho(ens_a, ens_b, indices) -> float:
    worst = 0.0
    for j in indices:
        worst = max(worst, rho_upper(ens_a.law_at(j), ens_b.law_at(j)))
    return worst


def _fmt_value(v: float) -> str:
    return f"{v:g}"


def _decreasing_rows(labels, sups, ses, rhos, slope) -> list[ReportRow]:
    rows = []
    for i, label in enumerate(labels):
        if i == 0:
            crit, ok = "first_point", True
        else:
            crit, ok = "err_decreasing_vs_prev", sups[i] < sups[i - 1]
        rows.append(
            ReportRow(
                sweep_param=label,
                sup_coupled_err=sups[i],
                sup_coupled_err_se=ses[i],
                sup_rho_upper=rhos[i],
                slope_fit=slope,
                criterion=crit,
                passed=ok,
            )
        )
    return rows


def _safe_slope(xs, ys) -> float | None:
    xs = [x for x, y in zip(xs, ys) if x > 0 and y > 0]
    ys = [y for y in ys if y > 0]
    if len(xs) != len(ys) or len(xs) < 2:
        return None
    return fit_loglog_slope(xs, ys)


def _rho_sqrt_criterion(sups, rhos) -> CriterionResult:
    # identical coupled gaps attain Jensen equality, so allow rounding-level excess
    slack = 64.0 * math.ulp(1.0)
    ok = all(r <= math.sqrt(s) + slack * max(1.0, math.sqrt(s)) for r, s in zip(rhos, sups))
    worst = max((r - math.sqrt(s) for r, s in zip(rhos, sups)), default=0.0)
    return CriterionResult("rho_le_sqrt_coupled", ok, f"worst excess {worst:.3e}")


def run_trotter_kato(config_text: str, overrides: Overrides = NO_OVERRIDES) -> ConvergenceReport:
    """Approximating-generator sweep against the limit dynamics."""
    cfg = validate_config(config_text, "trotter_kato")
    problem = build_problem(cfg, overrides)
    seed = effective_seed(cfg, overrides)
    workers = effective_workers(cfg, overrides)
    sweep = _require_sweep(cfg)
    family_kind = cfg.get_or("study", "family", "yosida")

    if family_kind == "yosida":
        family = yosida_family(problem.generator, sweep, t_max=problem.horizon)
    else:
        if cfg.get("problem", "generator") != "divergence_form":
            raise ConfigError("flux_coefficients family needs a divergence_form generator")
        q = flux_profile(cfg.get("problem", "flux_coefficient"))
        r = drift_profile(cfg.get("problem", "drift_coefficient"), cfg.get("problem", "drift_value"))
        family = divergence_form_family(
            q,
            r,
            cfg.get("problem", "grid_size"),
            sweep,
            q_perturbation=lambda z: math.sin(math.pi * z),
            t_max=problem.horizon,
        )

    indices = _rho_time_indices(problem.steps, cfg.get("study", "rho_times"))

    def one_point(i: int):
        sub_seed = derive_seed(seed, i)
        ens_member = simulate_particle_system(with_generator(problem, family.members[i]), sub_seed)
        ens_limit = simulate_particle_system(problem, sub_seed)
        diff = coupled_difference(ens_member, ens_limit)
        return diff.sup_value, diff.sup_se, _sup_rho(ens_member, ens_limit, indices)

    results = _map_indexed(one_point, len(sweep), workers)
    sups = [r[0] for r in results]
    ses = [r[1] for r in results]
    rhos = [r[2] for r in results]
    slope = _safe_slope(sweep, sups)
    rows = _decreasing_rows([_fmt_value(v) for v in sweep], sups, ses, rhos, slope)

    final_ratio = cfg.get("study", "final_ratio")
    criteria = [
        CriterionResult(
            "final_le_ratio_of_first",
            sups[-1] <= final_ratio * sups[0],
            f"final {sups[-1]:.6e} vs {final_ratio:g} * first {sups[0]:.6e}",
        ),
        _rho_sqrt_criterion(sups, rhos),
    ]

    defect_grid = np.linspace(0.0, problem.horizon, DEFECT_GRID_POINTS)
    defects = trotter_kato_defect(family, defect_grid)
    notes = [
        ("family", family_kind),
        ("rho_method", rho_method(problem.particles, problem.dim)),
        ("shared_bound_m", repr(float(family.bound_m))),
        ("shared_bound_alpha", repr(float(family.bound_alpha))),
    ]
    notes += [(f"semigroup_defect n={_fmt_value(lbl)}", repr(float(d))) for lbl, d in defects]
    notes += overrides.describe()
    return ConvergenceReport("trotter_kato", seed, cfg.raw_text, rows, criteria, notes)


def run_zeroth_order(config_text: str, overrides: Overrides = NO_OVERRIDES) -> ConvergenceReport:
    """Noise-amplitude sweep against the deterministic limit path."""
    cfg = validate_config(config_text, "zeroth_order")
    problem = build_problem(cfg, overrides)
    seed = effective_seed(cfg, overrides)
    workers = effective_workers(cfg, overrides)
    sweep = _require_sweep(cfg)
    if any(v <= 0 for v in sweep):
        raise ConfigError("zeroth-order sweep values must be > 0")
    sweep = sorted(sweep, reverse=True)
    shift = cfg.get("study", "generator_shift")

    def scaled_generator(eps: float) -> Generator:
        if shift == 0.0:
            return problem.generator
        mat = problem.generator.matrix + eps * shift * np.eye(problem.dim)
        return make_generator(mat, problem.horizon)

    baseline = replace(problem, noise_scale=0.0)
    indices = _rho_time_indices(problem.steps, cfg.get("study", "rho_times"))

    def one_point(i: int):
        eps = sweep[i]
        sub_seed = derive_seed(seed, i)
        member = replace(problem, noise_scale=eps, generator=scaled_generator(eps))
        ens_eps = simulate_particle_system(member, sub_seed)
        ens_det = simulate_particle_system(baseline, sub_seed)
        diff = coupled_difference(ens_eps, ens_det)
        return diff.sup_value, diff.sup_se, _sup_rho(ens_eps, ens_det, indices)

    results = _map_indexed(one_point, len(sweep), workers)
    sups = [r[0] for r in results]
    ses = [r[1] for r in results]
    rhos = [r[2] for r in results]
    slope = _safe_slope(sweep, sups)
    rows = _decreasing_rows([_fmt_value(v) for v in sweep], sups, ses, rhos, slope)

    criteria = [_rho_sqrt_criterion(sups, rhos)]
    pure_noise_limit = shift == 0.0 and problem.coefficients.measure_free
    if pure_noise_limit:
        band = cfg.get_or("study", "slope_band", [1.8, 2.2])
        if len(band) != 2:
            raise ConfigError("slope_band needs exactly two entries")
        ok = slope is not None and band[0] <= slope <= band[1]
        criteria.append(
            CriterionResult("slope_in_band", ok, f"slope {slope} vs [{band[0]:g}, {band[1]:g}]")
        )
    notes = [
        ("rho_method", rho_method(problem.particles, problem.dim)),
        ("generator_shift", _fmt_value(shift)),
        ("slope_asserted", "yes" if pure_noise_limit else "no"),
    ]
    notes += overrides.describe()
    return ConvergenceReport("zeroth_order", seed, cfg.raw_text, rows, criteria, notes)


def _probe_states(dim: int, radius: float, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(seed, 0x50524F42))
    pts = rng.standard_normal((count, dim))
    norms = np.maximum(np.linalg.norm(pts, axis=1, keepdims=True), 1e-12)
    radii = radius * rng.random((count, 1)) ** (1.0 / dim)
    return pts / norms * radii


def run_parametric(config_text: str, overrides: Overrides = NO_OVERRIDES) -> ConvergenceReport:
    """Coefficient-family sweep against the limit coefficients."""
    cfg = validate_config(config_text, "parametric")
    problem = build_problem(cfg, overrides)
    seed = effective_seed(cfg, overrides)
    workers = effective_workers(cfg, overrides)
    sweep = _require_sweep(cfg)
    family_kind = cfg.get_or("study", "family", "bump")
    base = problem.coefficients

    probes = _probe_states(
        problem.dim, cfg.get("study", "probe_radius"), cfg.get("study", "probe_count"), seed
    )
    probe_mu = EmpiricalMeasure(probes)

    if family_kind == "bump":
        if any(v <= 0 for v in sweep):
            raise ConfigError("bump sweep indices must be > 0")
        sweep = sorted(sweep)
        bump = cfg.get("study", "bump_scale") * np.eye(problem.dim)[0]
        members = [with_coefficients(problem, shifted_drift(base, bump / n)) for n in sweep]
        limit = problem
        labels = [_fmt_value(n) for n in sweep]
        distances = list(sweep)  # abscissa for the slope fit
    else:
        lam_limit = cfg.get("study", "limit_value")
        order = sorted(range(len(sweep)), key=lambda i: -abs(sweep[i] - lam_limit))
        sweep = [sweep[i] for i in order]
        members = [with_coefficients(problem, scaled_drift(base, lam)) for lam in sweep]
        limit = with_coefficients(problem, scaled_drift(base, lam_limit))
        labels = [_fmt_value(lam) for lam in sweep]
        distances = [abs(lam - lam_limit) for lam in sweep]

    indices = _rho_time_indices(problem.steps, cfg.get("study", "rho_times"))

    def one_point(i: int):
        sub_seed = derive_seed(seed, i)
        ens_member = simulate_particle_system(members[i], sub_seed)
        ens_limit = simulate_particle_system(limit, sub_seed)
        diff = coupled_difference(ens_member, ens_limit)
        drift_gap = members[i].coefficients.drift(probes, probe_mu) - limit.coefficients.drift(
            probes, probe_mu
        )
        premise = float(np.max(np.linalg.norm(drift_gap, axis=1)))
        return diff.sup_value, diff.sup_se, _sup_rho(ens_member, ens_limit, indices), premise

    results = _map_indexed(one_point, len(sweep), workers)
    sups = [r[0] for r in results]
    ses = [r[1] for r in results]
    rhos = [r[2] for r in results]
    premises = [r[3] for r in results]

    slope = _safe_slope(distances, sups)
    rows = _decreasing_rows(labels, sups, ses, rhos, slope)

    criteria = [
        _rho_sqrt_criterion(sups, rhos),
        CriterionResult(
            "premise_sup_nonincreasing",
            all(premises[i + 1] <= premises[i] + 1e-15 for i in range(len(premises) - 1)),
            "sup over probe ball of the coefficient gap",
        ),
    ]
    if family_kind == "bump":
        band = cfg.get_or("study", "slope_band", [-2.3, -1.7])
        if len(band) != 2:
            raise ConfigError("slope_band needs exactly two entries")
        ok = slope is not None and band[0] <= slope <= band[1]
        criteria.append(
            CriterionResult("slope_in_band", ok, f"slope {slope} vs [{band[0]:g}, {band[1]:g}]")
        )
    notes = [
        ("family", family_kind),
        ("rho_method", rho_method(problem.particles, problem.dim)),
    ]
    notes += [(f"premise_sup {lbl}", repr(float(p))) for lbl, p in zip(labels, premises)]
    notes += overrides.describe()
    return ConvergenceReport("parametric", seed, cfg.raw_text, rows, criteria, notes)


def run_initial_dependence(config_text: str, overrides: Overrides = NO_OVERRIDES) -> ConvergenceReport:
    """Coupled runs from two initial laws; sup-ratio against the closed-form constant."""
    cfg = validate_config(config_text, "initial")
    problem = build_problem(cfg, overrides)
    seed = effective_seed(cfg, overrides)
    workers = effective_workers(cfg, overrides)
    replicates = cfg.get("study", "replicates")
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    second = build_initial(cfg, problem.dim, section="initial_b")
    problem_b = replace(problem, initial=second)
    c_value = initial_dependence_constant(
        problem.generator, problem.coefficients, problem.covariance, problem.horizon
    )
    indices = _rho_time_indices(problem.steps, cfg.get("study", "rho_times"))

    def one_point(i: int):
        sub_seed = derive_seed(seed, i)
        ens_a = simulate_particle_system(problem, sub_seed)
        ens_b = simulate_particle_system(problem_b, sub_seed)
        diff = coupled_difference(ens_a, ens_b)
        gap0 = float(diff.values[0])
        if gap0 == 0.0:
            raise DegenerateInputError("initial laws coincide pathwise; the ratio is undefined")
        final_ratio = float(diff.values[-1]) / gap0
        return diff.sup_value, diff.sup_se, _sup_rho(ens_a, ens_b, indices), gap0, final_ratio

    results = _map_indexed(one_point, replicates, workers)
    rows = []
    notes = [
        ("c_constant", repr(float(c_value))),
        ("rho_method", rho_method(problem.particles, problem.dim)),
    ]
    for i, (sup, se, rho, gap0, final_ratio) in enumerate(results):
        ratio = sup / gap0
        rows.append(
            ReportRow(
                sweep_param=str(i),
                sup_coupled_err=sup,
                sup_coupled_err_se=se,
                sup_rho_upper=rho,
                slope_fit=ratio,
                criterion="sup_ratio_le_c",
                passed=ratio <= c_value,
            )
        )
        notes.append((f"replicate {i} initial_gap", repr(float(gap0))))
        notes.append((f"replicate {i} final_ratio", repr(float(final_ratio))))
    notes += overrides.describe()
    return ConvergenceReport("initial", seed, cfg.raw_text, rows, [], notes)


def run_moment_bound(config_text: str, overrides: Overrides = NO_OVERRIDES) -> ConvergenceReport:
    """Freeze a moment-bound constant on a calibration seed, check it on fresh seeds."""
    cfg = validate_config(config_text, "moments")
    problem = build_problem(cfg, overrides)
    seed = effective_seed(cfg, overrides)
    workers = effective_workers(cfg, overrides)
    order = cfg.get("study", "order")
    if order not in (2, 4):
        raise ConfigError(f"moment order must be 2 or 4, got {order}")
    x0_values = cfg.get("study", "x0_values")
    if not x0_values:
        raise ConfigError("x0_values must not be empty")
    calibration_seed = cfg.get("study", "calibration_seed")
    check_seeds = cfg.get("study", "check_seeds")
    slack = cfg.get("study", "slack_se")

    def problem_for(v: float) -> SdeProblem:
        vec = v * np.eye(problem.dim)[0]
        return replace(problem, initial=fixed_initial(vec))

    denoms = [1.0 + abs(v) ** order for v in x0_values]

    def calibrate(i: int) -> float:
        ens = simulate_particle_system(problem_for(x0_values[i]), calibration_seed)
        return estimate_moment(ens, order).sup_value / denoms[i]

    fitted_j = max(_map_indexed(calibrate, len(x0_values), workers))

    cases = [(s, i) for s in check_seeds for i in range(len(x0_values))]

    def check(ci: int):
        s, i = cases[ci]
        mom = estimate_moment(simulate_particle_system(problem_for(x0_values[i]), s), order)
        return mom.sup_value, mom.sup_se

    results = _map_indexed(check, len(cases), workers)
    rows = []
    for (s, i), (sup, se) in zip(cases, results):
        bound = fitted_j * denoms[i]
        rows.append(
            ReportRow(
                sweep_param=f"seed{s}_x0{_fmt_value(x0_values[i])}",
                sup_coupled_err=sup,
                sup_coupled_err_se=se,
                sup_rho_upper=None,
                slope_fit=None,
                criterion="sup_le_frozen_bound",
                passed=sup <= bound + slack * se,
            )
        )
    notes = [
        ("moment_order", str(order)),
        ("fitted_j", repr(float(fitted_j))),
        ("calibration_seed", str(calibration_seed)),
    ]
    notes += overrides.describe()
    return ConvergenceReport("moments", seed, cfg.raw_text, rows, [], notes)


def run_simulate(config_text: str, overrides: Overrides = NO_OVERRIDES) -> TimeSeriesReport:
    """Single ensemble run; reports second/fourth moment trajectories."""
    cfg = validate_config(config_text, None)
    problem = build_problem(cfg, overrides)
    seed = effective_seed(cfg, overrides)
    ens = simulate_particle_system(problem, seed)
    m2 = estimate_moment(ens, 2)
    m4 = estimate_moment(ens, 4)
    notes = [
        ("particles", str(problem.particles)),
        ("steps", str(problem.steps)),
    ]
    notes += overrides.describe()
    return TimeSeriesReport(
        seed=seed,
        config_text=cfg.raw_text,
        times=ens.times,
        columns={
            "moment2": m2.values,
            "moment2_se": m2.standard_errors,
            "moment4": m4.values,
            "moment4_se": m4.standard_errors,
        },
        notes=notes,
    )
