"""Numerical laboratory for measure-coupled stochastic evolution equations.

Finite-mode Hilbert space states, certified generator semigroups, Q-Wiener
driving noise, interacting-particle integration of the mild equation, and
study runners that verify convergence behaviour empirically.
"""

from .coefficients import CoefficientSpec, make_coefficients
from .config import ExperimentConfig, Overrides, parse_config, validate_config
from .dynamics import (
    InitialLaw,
    PathEnsemble,
    SdeProblem,
    contraction_condition_value,
    coupled_difference,
    estimate_moment,
    fixed_initial,
    gaussian_initial,
    initial_dependence_constant,
    picard_law_iteration,
    simulate_particle_system,
    step_mild_euler,
    time_grid,
)
from .errors import (
    ConfigError,
    CouplingError,
    DegenerateInputError,
    DimensionError,
    EllipticityError,
    GridError,
    IoError,
    MvsdeError,
    NumericalRangeError,
    NumericalSingularityError,
    ResolventDomainError,
    StepSizeError,
    SupportMismatchError,
)
from .measure import EmpiricalMeasure, LawTrajectory, d_metric, phi_norm, rho_upper
from .noise import NoiseStream, QWienerSpec, derive_seed, ito_moment_check, sample_increment
from .report import ConvergenceReport, emit_report, fit_loglog_slope
from .semigroup import (
    Generator,
    GeneratorFamily,
    build_divergence_form_generator,
    diagonal_generator,
    heat_mode_generator,
    make_generator,
    resolvent,
    scalar_generator,
    semigroup_apply,
    trotter_kato_defect,
    yosida,
    yosida_family,
)
from .studies import (
    run_initial_dependence,
    run_moment_bound,
    run_parametric,
    run_simulate,
    run_trotter_kato,
    run_zeroth_order,
)

__version__ = "0.1.0"
