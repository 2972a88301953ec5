"""Interacting-particle integration of measure-coupled mild equations.

The state follows dx = [A x + f(x, law)] dt + eps * g(x, law) dW, with the law
replaced by the ensemble's empirical measure (or a frozen law trajectory).
One step of the exponential scheme propagates the whole bracket through the
semigroup: x_{j+1} = S(dt) [x_j + f dt + eps g dW_j], with f, g and the law
frozen at the start of the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .coefficients import CoefficientSpec, apply_diffusion
from .errors import (
    ConfigError,
    CouplingError,
    DimensionError,
    GridError,
    NumericalRangeError,
    StepSizeError,
)
from .measure import EmpiricalMeasure, LawTrajectory, constant_law, d_metric
from .noise import ParticleNoise, QWienerSpec, initial_normals
from .semigroup import Generator, propagator

NOISE_CHUNK_STEPS = 256


@dataclass(frozen=True)
class InitialLaw:
    """Initial condition: a fixed vector or a diagonal Gaussian."""

    kind: str
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.ndim != 1 or std.shape != mean.shape:
            raise DimensionError("initial mean and std must be 1-D vectors of equal length")
        if self.kind not in ("fixed", "gaussian"):
            raise ValueError(f"unknown initial law kind {self.kind!r}")
        if self.kind == "fixed" and np.any(std != 0.0):
            raise ValueError("a fixed initial law cannot carry a spread")
        if np.any(std < 0):
            raise ValueError("initial spread must be >= 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, normals: np.ndarray) -> np.ndarray:
        """Transform shared standard normals; coupled laws share the normals."""
        if self.kind == "fixed":
            return np.broadcast_to(self.mean, normals.shape).copy()
        return self.mean + self.std * normals

    def second_moment(self) -> float:
        return float(self.mean @ self.mean + self.std @ self.std)


def fixed_initial(value) -> InitialLaw:
    vec = np.atleast_1d(np.asarray(value, dtype=np.float64))
    return InitialLaw("fixed", vec, np.zeros_like(vec))


def gaussian_initial(mean, std) -> InitialLaw:
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    std = np.asarray(std, dtype=np.float64)
    if std.ndim == 0:
        std = np.full_like(mean, float(std))
    return InitialLaw("gaussian", mean, std)


@dataclass(frozen=True)
class SdeProblem:
    generator: Generator
    coefficients: CoefficientSpec
    covariance: QWienerSpec
    initial: InitialLaw
    horizon: float
    steps: int
    particles: int
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.initial.dim != self.generator.dim:
            raise DimensionError(
                f"initial law dimension {self.initial.dim} != generator dimension {self.generator.dim}"
            )
        if not self.horizon > 0:
            raise ConfigError(f"horizon must be > 0, got {self.horizon}")
        if self.steps < 1 or self.particles < 1:
            raise ConfigError("need at least one step and one particle")
        if self.noise_scale < 0:
            raise ConfigError(f"noise scale must be >= 0, got {self.noise_scale}")
        if not self.coefficients.measure_free and self.particles < 2:
            raise ConfigError("measure-coupled coefficients need at least two particles")

    @property
    def dim(self) -> int:
        return self.generator.dim


def time_grid(horizon: float, steps: int) -> np.ndarray:
    return np.arange(steps + 1, dtype=np.float64) * (horizon / steps)


@dataclass(frozen=True)
class PathEnsemble:
    """Particle trajectories on a uniform grid: states[j] is the time-t_j slice."""

    times: np.ndarray
    states: np.ndarray
    seed: int

    def __post_init__(self):
        if self.states.ndim != 3 or self.states.shape[0] != self.times.shape[0]:
            raise DimensionError(
                f"states of shape {self.states.shape} do not match grid of length {self.times.shape[0]}"
            )

    @property
    def n_particles(self) -> int:
        return self.states.shape[1]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def law_at(self, j: int) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.states[j])

    def law_trajectory(self) -> LawTrajectory:
        return LawTrajectory(self.times, self.states)


def step_mild_euler(
    gen: Generator,
    x: np.ndarray,
    mu: EmpiricalMeasure,
    dt: float,
    dw: np.ndarray,
    coefficients: CoefficientSpec,
    noise_scale: float = 1.0,
) -> np.ndarray:
    """Reference single step on a batch x (n, d) with increments dw (n, k)."""
    if not dt > 0:
        raise StepSizeError(f"step size must be > 0, got {dt}")
    bracket = x + coefficients.drift(x, mu) * dt
    if noise_scale != 0.0:
        bracket = bracket + noise_scale * apply_diffusion(coefficients.diffusion(x, mu), dw)
    return bracket @ propagator(gen.matrix, dt).T


def simulate_particle_system(
    problem: SdeProblem,
    seed: int,
    frozen_law: LawTrajectory | None = None,
) -> PathEnsemble:
    """Advance all particles jointly; deterministic given (problem, seed).

    All particles inside a step read the same start-of-step empirical measure.
    When frozen_law is given, the coefficients read that trajectory instead of
    the evolving ensemble (the non-coupled equation driven by a fixed law).
    """
    d, k = problem.dim, problem.covariance.dim
    n, s = problem.particles, problem.steps
    dt = problem.horizon / s
    times = time_grid(problem.horizon, s)
    if frozen_law is not None:
        if not np.array_equal(frozen_law.times, times):
            raise GridError("frozen law lives on a different time grid")
        if frozen_law.n_atoms != n or frozen_law.dim != d:
            raise CouplingError(
                f"frozen law atoms {frozen_law.atoms.shape[1:]} do not match the ensemble ({n}, {d})"
            )

    x = problem.initial.sample(initial_normals(seed, n, d))
    states = np.empty((s + 1, n, d))

    mat = problem.generator.matrix
    diag = np.diagonal(mat)
    is_diag = np.count_nonzero(mat - np.diag(diag)) == 0
    if is_diag:
        decay = np.exp(dt * diag)
        prop_t = None
    else:
        decay = None
        prop_t = propagator(mat, dt).T

    eps = problem.noise_scale
    scale = np.sqrt(problem.covariance.kappas * dt)
    noise = ParticleNoise(seed, n) if eps != 0.0 else None

    block = None
    block_start = 0
    # overflow surfaces as the typed range error below, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(s):
            states[j] = x
            here = states[j]
            if not np.all(np.isfinite(here)):
                raise NumericalRangeError(f"non-finite state at step {j}")
            mu = frozen_law.measure_at(j) if frozen_law is not None else EmpiricalMeasure(here)
            bracket = here + problem.coefficients.drift(here, mu) * dt
            if eps != 0.0:
                if block is None or j - block_start >= block.shape[0]:
                    block = noise.draw_block(min(NOISE_CHUNK_STEPS, s - j), k) * scale
                    block_start = j
                dw = block[j - block_start]
                bracket = bracket + eps * apply_diffusion(problem.coefficients.diffusion(here, mu), dw)
            x = bracket * decay if is_diag else bracket @ prop_t
        states[s] = x
    if not np.all(np.isfinite(x)):
        raise NumericalRangeError(f"non-finite state at step {s}")
    return PathEnsemble(times, states, seed)


@dataclass(frozen=True)
class MomentSeries:
    times: np.ndarray
    values: np.ndarray
    standard_errors: np.ndarray

    @property
    def sup_index(self) -> int:
        return int(np.argmax(self.values))

    @property
    def sup_value(self) -> float:
        return float(self.values[self.sup_index])

    @property
    def sup_se(self) -> float:
        return float(self.standard_errors[self.sup_index])


def estimate_moment(ensemble: PathEnsemble, order: float) -> MomentSeries:
    """Monte Carlo E|x(t)|^order with per-time standard errors."""
    if order <= 0:
        raise ValueError(f"moment order must be > 0, got {order}")
    powers = np.linalg.norm(ensemble.states, axis=2) ** order
    values = powers.mean(axis=1)
    m = ensemble.n_particles
    if m > 1:
        ses = powers.std(axis=1, ddof=1) / math.sqrt(m)
    else:
        ses = np.zeros_like(values)
    return MomentSeries(ensemble.times, values, ses)


def coupled_difference(a: PathEnsemble, b: PathEnsemble) -> MomentSeries:
    """Per-time mean squared gap between two pathwise-coupled ensembles."""
    if not np.array_equal(a.times, b.times):
        raise CouplingError("ensembles live on different time grids")
    if a.n_particles != b.n_particles or a.dim != b.dim:
        raise CouplingError("ensembles carry different particle shapes")
    if a.seed != b.seed:
        raise CouplingError(f"ensembles were driven by different seeds: {a.seed} vs {b.seed}")
    sq = np.sum((a.states - b.states) ** 2, axis=2)
    values = sq.mean(axis=1)
    m = a.n_particles
    if m > 1:
        ses = sq.std(axis=1, ddof=1) / math.sqrt(m)
    else:
        ses = np.zeros_like(values)
    return MomentSeries(a.times, values, ses)


@dataclass(frozen=True)
class PicardResult:
    """Successive laws of the frozen-law equation and their uniform distances.

    laws[i] is the law after i+1 sweeps from the constant initial law;
    gaps[i] = d_metric(laws[i+1], laws[i]), available from the second sweep on.
    """

    laws: list
    gaps: list


def picard_law_iteration(problem: SdeProblem, n_iterations: int, seed: int) -> PicardResult:
    """Iterate law -> law of the equation driven by that frozen law.

    The same seed (hence the same noise and initial draws) is reused for every
    sweep, so successive laws differ only through the frozen input law.
    """
    if n_iterations < 1:
        raise ValueError("need at least one iteration")
    times = time_grid(problem.horizon, problem.steps)
    x0 = problem.initial.sample(initial_normals(seed, problem.particles, problem.dim))
    current = constant_law(times, EmpiricalMeasure(x0))
    laws: list[LawTrajectory] = []
    gaps: list[float] = []
    for _ in range(n_iterations):
        ens = simulate_particle_system(problem, seed, frozen_law=current)
        nxt = ens.law_trajectory()
        if laws:
            gaps.append(d_metric(nxt, laws[-1]))
        laws.append(nxt)
        current = nxt
    return PicardResult(laws, gaps)


def contraction_condition_value(
    gen: Generator, coefficients: CoefficientSpec, q: QWienerSpec, horizon: float
) -> float:
    """4 T m^2 e^{2 alpha T} (T K1^2 + trQ K2^2); below 1/3 the law map contracts."""
    m, alpha, t = gen.bound_m, gen.bound_alpha, horizon
    k1, k2 = coefficients.lipschitz_drift, coefficients.lipschitz_diffusion
    return 4.0 * t * m**2 * math.exp(2.0 * alpha * t) * (t * k1**2 + q.trace_q * k2**2)


def initial_dependence_constant(
    gen: Generator, coefficients: CoefficientSpec, q: QWienerSpec, horizon: float
) -> float:
    """Continuity constant: sup_t E|x-y|^2 <= C E|x0-y0|^2 for coupled solutions."""
    m, alpha, t = gen.bound_m, gen.bound_alpha, horizon
    k1, k2 = coefficients.lipschitz_drift, coefficients.lipschitz_diffusion
    growth = m**2 * math.exp(2.0 * alpha * t)
    return 3.0 * growth * math.exp(12.0 * t * growth * (t * k1**2 + q.trace_q * k2**2))


def with_generator(problem: SdeProblem, gen: Generator) -> SdeProblem:
    return replace(problem, generator=gen)


def with_coefficients(problem: SdeProblem, coefficients: CoefficientSpec) -> SdeProblem:
    return replace(problem, coefficients=coefficients)
