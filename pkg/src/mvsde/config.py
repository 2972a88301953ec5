"""Line-based experiment configuration.

Format: `[section]` headers followed by `key = value` lines; `#` starts a
full-line comment; values are scalars, comma-separated lists, or names.
Unknown sections or keys are hard errors.  The raw text is kept verbatim so
reports can echo exactly what was run.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientSpec, make_coefficients
from .dynamics import InitialLaw, SdeProblem, fixed_initial, gaussian_initial
from .errors import ConfigError
from .noise import QWienerSpec
from .semigroup import (
    Generator,
    build_divergence_form_generator,
    diagonal_generator,
    heat_mode_generator,
    scalar_generator,
)

_SECTION_RE = re.compile(r"^\[([a-z0-9_]+)\]$")
_KEY_RE = re.compile(r"^[a-z0-9_]+$")


def _parse_float(raw: str) -> float:
    try:
        val = float(raw)
    except ValueError as exc:
        raise ValueError(f"not a number: {raw!r}") from exc
    if not math.isfinite(val):
        raise ValueError(f"number must be finite: {raw!r}")
    return val


def _parse_int(raw: str) -> int:
    try:
        return int(raw, 10)
    except ValueError as exc:
        raise ValueError(f"not an integer: {raw!r}") from exc


def _parse_floats(raw: str) -> list[float]:
    toks = [tok.strip() for tok in raw.split(",")]
    if not toks or any(not tok for tok in toks):
        raise ValueError(f"not a comma-separated number list: {raw!r}")
    return [_parse_float(tok) for tok in toks]


def _parse_ints(raw: str) -> list[int]:
    return [_parse_int(tok.strip()) for tok in raw.split(",")]


def _parse_choice(options):
    def parse(raw: str) -> str:
        if raw not in options:
            raise ValueError(f"must be one of {sorted(options)}, got {raw!r}")
        return raw

    return parse


_INITIAL_KEYS = {
    "kind": _parse_choice({"fixed", "gaussian"}),
    "value": _parse_floats,
    "mean": _parse_floats,
    "std": _parse_floats,
}

SECTION_KEYS = {
    "problem": {
        "generator": _parse_choice({"scalar", "diagonal", "heat_modes", "divergence_form"}),
        "rate": _parse_float,
        "eigenvalues": _parse_floats,
        "modes": _parse_int,
        "grid_size": _parse_int,
        "flux_coefficient": _parse_choice({"one", "one_plus_sine"}),
        "drift_coefficient": _parse_choice({"zero", "constant"}),
        "drift_value": _parse_float,
        "horizon": _parse_float,
        "noise_scale": _parse_float,
    },
    "coefficients": {
        "drift": _parse_choice({"zero", "constant", "linear", "mean_field"}),
        "drift_value": _parse_float,
        "drift_rate": _parse_float,
        "drift_theta": _parse_float,
        "diffusion": _parse_choice({"zero", "constant", "rank_one_coupled"}),
        "diffusion_value": _parse_float,
        "diffusion_state": _parse_float,
        "diffusion_mean": _parse_float,
    },
    "noise": {
        "kappas": _parse_floats,
    },
    "initial": _INITIAL_KEYS,
    "initial_b": _INITIAL_KEYS,
    "run": {
        "particles": _parse_int,
        "steps": _parse_int,
        "seed": _parse_int,
        "workers": _parse_int,
    },
    "study": {
        "kind": _parse_choice({"trotter_kato", "zeroth_order", "parametric", "initial", "moments"}),
        "sweep": _parse_floats,
        "rho_times": _parse_int,
        "family": str,
        "final_ratio": _parse_float,
        "generator_shift": _parse_float,
        "slope_band": _parse_floats,
        "bump_scale": _parse_float,
        "limit_value": _parse_float,
        "probe_radius": _parse_float,
        "probe_count": _parse_int,
        "replicates": _parse_int,
        "order": _parse_int,
        "x0_values": _parse_floats,
        "calibration_seed": _parse_int,
        "check_seeds": _parse_ints,
        "slack_se": _parse_float,
    },
}

# keys each study kind may use inside [study], beyond kind/sweep/rho_times
STUDY_KEYS = {
    "trotter_kato": {"family", "final_ratio"},
    "zeroth_order": {"generator_shift", "slope_band"},
    "parametric": {"family", "bump_scale", "limit_value", "slope_band", "probe_radius", "probe_count"},
    "initial": {"replicates"},
    "moments": {"order", "x0_values", "calibration_seed", "check_seeds", "slack_se"},
}

DEFAULTS = {
    ("problem", "horizon"): 1.0,
    ("problem", "noise_scale"): 1.0,
    ("problem", "flux_coefficient"): "one",
    ("problem", "drift_coefficient"): "zero",
    ("problem", "drift_value"): 0.0,
    ("coefficients", "drift"): "zero",
    ("coefficients", "drift_value"): 0.0,
    ("coefficients", "drift_rate"): 0.0,
    ("coefficients", "drift_theta"): 0.0,
    ("coefficients", "diffusion"): "constant",
    ("coefficients", "diffusion_value"): 1.0,
    ("coefficients", "diffusion_state"): 0.0,
    ("coefficients", "diffusion_mean"): 0.0,
    ("noise", "kappas"): [1.0],
    ("initial", "kind"): "fixed",
    ("initial", "value"): [0.0],
    ("run", "particles"): 1000,
    ("run", "steps"): 1024,
    ("run", "seed"): 0,
    ("run", "workers"): 1,
    ("study", "rho_times"): 17,
    ("study", "final_ratio"): 0.1,
    ("study", "generator_shift"): 0.0,
    ("study", "bump_scale"): 1.0,
    ("study", "limit_value"): 1.0,
    ("study", "probe_radius"): 2.0,
    ("study", "probe_count"): 16,
    ("study", "replicates"): 5,
    ("study", "order"): 2,
    ("study", "x0_values"): [0.0, 1.0, 4.0],
    ("study", "calibration_seed"): 0,
    ("study", "check_seeds"): [1, 2, 3, 4, 5],
    ("study", "slack_se"): 3.0,
}


@dataclass(frozen=True)
class Overrides:
    """Command-line values that take precedence over the config file."""

    seed: int | None = None
    particles: int | None = None
    steps: int | None = None
    workers: int | None = None

    def describe(self) -> list[tuple[str, str]]:
        out = []
        for name in ("seed", "particles", "steps"):
            val = getattr(self, name)
            if val is not None:
                out.append((f"override {name}", str(val)))
        return out


NO_OVERRIDES = Overrides()


@dataclass(frozen=True)
class ExperimentConfig:
    raw_text: str
    values: dict

    def get(self, section: str, key: str):
        if (section, key) in self.values:
            return self.values[(section, key)]
        if (section, key) in DEFAULTS:
            return DEFAULTS[(section, key)]
        raise ConfigError(f"missing required key {key!r} in section [{section}]")

    def get_or(self, section: str, key: str, fallback):
        if (section, key) in self.values:
            return self.values[(section, key)]
        return fallback

    def has(self, section: str, key: str) -> bool:
        return (section, key) in self.values

    def has_section(self, section: str) -> bool:
        return any(s == section for s, _ in self.values)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and schema-check config text; collects all problems before failing."""
    problems: list[str] = []
    values: dict = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if section not in SECTION_KEYS:
                problems.append(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, _, raw_value = line.partition("=")
        key, raw_value = key.strip(), raw_value.strip()
        if section is None:
            problems.append(f"line {lineno}: key {key!r} appears outside any section")
            continue
        if not _KEY_RE.match(key):
            problems.append(f"line {lineno}: malformed key {key!r}")
            continue
        if key not in SECTION_KEYS[section]:
            problems.append(f"line {lineno}: unknown key {key!r} in section [{section}]")
            continue
        if (section, key) in values:
            problems.append(f"line {lineno}: duplicate key {key!r} in section [{section}]")
            continue
        try:
            values[(section, key)] = SECTION_KEYS[section][key](raw_value)
        except ValueError as exc:
            problems.append(f"line {lineno}: bad value for {key!r}: {exc}")
    if problems:
        raise ConfigError("; ".join(problems))
    return ExperimentConfig(text, values)


def _vector(values: list[float], dim: int, what: str) -> np.ndarray:
    """A scalar fans out along the first basis direction; a list must match dim."""
    if len(values) == 1 and dim > 1:
        return values[0] * np.eye(dim)[0]
    if len(values) != dim:
        raise ConfigError(f"{what} needs 1 or {dim} entries, got {len(values)}")
    return np.asarray(values, dtype=np.float64)


def flux_profile(name: str):
    if name == "one":
        return lambda z: 1.0
    if name == "one_plus_sine":
        return lambda z: 1.0 + 0.5 * math.sin(math.pi * z)
    raise ConfigError(f"unknown flux coefficient {name!r}")


def drift_profile(name: str, value: float):
    if name == "zero":
        return lambda z: 0.0
    if name == "constant":
        return lambda z: value
    raise ConfigError(f"unknown drift coefficient {name!r}")


def build_generator(cfg: ExperimentConfig) -> Generator:
    kind = cfg.get("problem", "generator")
    horizon = cfg.get("problem", "horizon")
    if kind == "scalar":
        return scalar_generator(cfg.get("problem", "rate"), t_max=horizon)
    if kind == "diagonal":
        return diagonal_generator(cfg.get("problem", "eigenvalues"), t_max=horizon)
    if kind == "heat_modes":
        return heat_mode_generator(cfg.get("problem", "modes"), t_max=horizon)
    q = flux_profile(cfg.get("problem", "flux_coefficient"))
    r = drift_profile(cfg.get("problem", "drift_coefficient"), cfg.get("problem", "drift_value"))
    return build_divergence_form_generator(q, r, cfg.get("problem", "grid_size"), t_max=horizon)


def build_covariance(cfg: ExperimentConfig) -> QWienerSpec:
    return QWienerSpec(np.asarray(cfg.get("noise", "kappas"), dtype=np.float64))


def build_coefficients(cfg: ExperimentConfig, d: int, k: int) -> CoefficientSpec:
    return make_coefficients(
        d,
        k,
        drift=cfg.get("coefficients", "drift"),
        drift_value=cfg.get("coefficients", "drift_value"),
        drift_rate=cfg.get("coefficients", "drift_rate"),
        drift_theta=cfg.get("coefficients", "drift_theta"),
        diffusion=cfg.get("coefficients", "diffusion"),
        diffusion_value=cfg.get("coefficients", "diffusion_value"),
        diffusion_state=cfg.get("coefficients", "diffusion_state"),
        diffusion_mean=cfg.get("coefficients", "diffusion_mean"),
    )


def build_initial(cfg: ExperimentConfig, d: int, section: str = "initial") -> InitialLaw:
    kind = cfg.get(section, "kind")
    if kind == "fixed":
        return fixed_initial(_vector(cfg.get(section, "value"), d, f"[{section}] value"))
    mean = _vector(cfg.get(section, "mean") if cfg.has(section, "mean") else [0.0], d, f"[{section}] mean")
    std_raw = cfg.get(section, "std") if cfg.has(section, "std") else [1.0]
    if len(std_raw) == 1:
        std = np.full(d, std_raw[0])
    elif len(std_raw) == d:
        std = np.asarray(std_raw, dtype=np.float64)
    else:
        raise ConfigError(f"[{section}] std needs 1 or {d} entries, got {len(std_raw)}")
    return gaussian_initial(mean, std)


def build_problem(cfg: ExperimentConfig, overrides: Overrides = NO_OVERRIDES) -> SdeProblem:
    gen = build_generator(cfg)
    cov = build_covariance(cfg)
    coeffs = build_coefficients(cfg, gen.dim, cov.dim)
    initial = build_initial(cfg, gen.dim)
    particles = overrides.particles if overrides.particles is not None else cfg.get("run", "particles")
    steps = overrides.steps if overrides.steps is not None else cfg.get("run", "steps")
    return SdeProblem(
        generator=gen,
        coefficients=coeffs,
        covariance=cov,
        initial=initial,
        horizon=cfg.get("problem", "horizon"),
        steps=steps,
        particles=particles,
        noise_scale=cfg.get("problem", "noise_scale"),
    )


def effective_seed(cfg: ExperimentConfig, overrides: Overrides = NO_OVERRIDES) -> int:
    return overrides.seed if overrides.seed is not None else cfg.get("run", "seed")


def effective_workers(cfg: ExperimentConfig, overrides: Overrides = NO_OVERRIDES) -> int:
    w = overrides.workers if overrides.workers is not None else cfg.get("run", "workers")
    if w < 1:
        raise ConfigError(f"workers must be >= 1, got {w}")
    return w


def study_kind(cfg: ExperimentConfig) -> str | None:
    if cfg.has("study", "kind"):
        return cfg.get("study", "kind")
    return None


def check_study_section(cfg: ExperimentConfig, expected_kind: str | None) -> None:
    """Verify [study] is present, declares the expected kind, and uses only its keys."""
    kind = study_kind(cfg)
    if expected_kind is None:
        if kind is None and any(s == "study" for s, _ in cfg.values):
            raise ConfigError("[study] section present but missing 'kind'")
    else:
        if kind is None:
            raise ConfigError(f"missing [study] section with kind = {expected_kind}")
        if kind != expected_kind:
            raise ConfigError(f"[study] kind is {kind!r}, expected {expected_kind!r}")
    if kind is None:
        return
    allowed = {"kind", "sweep", "rho_times"} | STUDY_KEYS[kind]
    stray = sorted(k for (s, k) in cfg.values if s == "study" and k not in allowed)
    if stray:
        raise ConfigError(f"keys {stray} are not valid for study kind {kind!r}")
    if cfg.has("study", "family"):
        fams = {"trotter_kato": {"yosida", "flux_coefficients"}, "parametric": {"bump", "scaling"}}
        family = cfg.get("study", "family")
        if family not in fams.get(kind, set()):
            raise ConfigError(f"family {family!r} is not valid for study kind {kind!r}")
    if cfg.has("initial_b", "kind") or cfg.has("initial_b", "value") or cfg.has("initial_b", "mean"):
        if kind != "initial":
            raise ConfigError("[initial_b] is only meaningful for the initial-dependence study")


def validate_config(text: str, expected_kind: str | None = None) -> ExperimentConfig:
    """Full validation: syntax, schema, study keys, and buildability."""
    cfg = parse_config(text)
    check_study_section(cfg, expected_kind)
    build_problem(cfg)  # surfaces dimension/consistency errors early
    kind = study_kind(cfg)
    if kind == "initial":
        gen = build_generator(cfg)
        build_initial(cfg, gen.dim, section="initial_b")
    return cfg
