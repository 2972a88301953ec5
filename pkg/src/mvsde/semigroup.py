"""Generators and the strongly continuous semigroups they induce.

A generator is a dense matrix together with numerically certified stability
bounds (m, alpha) such that ||exp(t A)|| <= m e^{alpha t} on a sampled time
grid.  The bounds are certified on the grid, not proven symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    EllipticityError,
    NumericalRangeError,
    NumericalSingularityError,
    ResolventDomainError,
)
from .linalg import apply_operator, as_operator, operator_norm

CERT_GRID_POINTS = 65
RESOLVENT_RESIDUAL_TOL = 1e-10


def certification_grid(t_max: float) -> np.ndarray:
    return np.linspace(0.0, float(t_max), CERT_GRID_POINTS)


def _is_diagonal(matrix: np.ndarray) -> bool:
    return np.count_nonzero(matrix - np.diag(np.diagonal(matrix))) == 0


def propagator(matrix, t: float) -> np.ndarray:
    """Matrix exponential exp(t * matrix).

    Diagonal matrices take an exact elementwise path; dense matrices go
    through scaling-and-squaring.  Raises NumericalRangeError if the result
    overflows to non-finite values.
    """
    mat = as_operator(matrix)
    if mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"propagator needs a square matrix, got {mat.shape}")
    if t < 0:
        raise ValueError(f"propagator time must be >= 0, got {t}")
    with np.errstate(over="ignore"):
        if _is_diagonal(mat):
            out = np.diag(np.exp(t * np.diagonal(mat)))
        else:
            out = scipy.linalg.expm(t * mat)
    if not np.all(np.isfinite(out)):
        raise NumericalRangeError(f"exp({t} * A) produced non-finite entries")
    return out


def spectral_abscissa(matrix) -> float:
    mat = as_operator(matrix)
    if _is_diagonal(mat):
        return float(np.max(np.diagonal(mat)))
    return float(np.max(np.linalg.eigvals(mat).real))


def _stability_prefactor(matrix: np.ndarray, alpha: float, ts: np.ndarray) -> float:
    """Smallest m >= 1 with ||exp(t A)|| <= m e^{alpha t} on the sampled grid."""
    if _is_diagonal(matrix):
        top = spectral_abscissa(matrix)
        # ||exp(tD)|| = e^{t max(D)}; the ratio e^{(top-alpha)t} peaks at an endpoint
        return max(1.0, float(np.max(np.exp((top - alpha) * ts))))
    worst = 1.0
    for t in ts:
        worst = max(worst, operator_norm(propagator(matrix, t)) * np.exp(-alpha * t))
    return worst


@dataclass(frozen=True)
class Generator:
    """Dense generator with certified stability bounds on [0, certified_horizon]."""

    matrix: np.ndarray
    bound_m: float
    bound_alpha: float
    certified_horizon: float = 1.0

    def __post_init__(self):
        mat = as_operator(self.matrix)
        if mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"generator matrix must be square, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("generator matrix has non-finite entries")
        if self.bound_m < 1.0:
            raise ValueError(f"stability prefactor must be >= 1, got {self.bound_m}")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def stability_defect(gen: Generator, ts=None) -> float:
    """Largest relative excess of ||exp(tA)|| over m e^{alpha t} on the grid.

    A certified generator keeps this at or below 1e-8.
    """
    if ts is None:
        ts = certification_grid(gen.certified_horizon)
    worst = -np.inf
    for t in ts:
        bound = gen.bound_m * np.exp(gen.bound_alpha * t)
        worst = max(worst, operator_norm(propagator(gen.matrix, t)) / bound - 1.0)
    return float(worst)


def make_generator(matrix, t_max: float = 1.0) -> Generator:
    """Certify (m, alpha) numerically on [0, t_max] and wrap the matrix."""
    mat = as_operator(matrix)
    alpha = spectral_abscissa(mat)
    m = _stability_prefactor(mat, alpha, certification_grid(t_max)) * (1.0 + 1e-12)
    return Generator(mat, max(1.0, m), alpha, float(t_max))


def scalar_generator(a: float, t_max: float = 1.0) -> Generator:
    return Generator(np.array([[float(a)]]), 1.0, float(a), float(t_max))


def diagonal_generator(eigenvalues, t_max: float = 1.0) -> Generator:
    eigs = np.asarray(eigenvalues, dtype=np.float64)
    if eigs.ndim != 1 or eigs.size == 0:
        raise DimensionError("diagonal generator needs a non-empty 1-D eigenvalue list")
    return Generator(np.diag(eigs), 1.0, float(np.max(eigs)), float(t_max))


def heat_mode_generator(modes: int, t_max: float = 1.0) -> Generator:
    """diag(-k^2 pi^2) for k = 1..modes: leading Dirichlet Laplacian modes."""
    if modes < 1:
        raise DimensionError("need at least one mode")
    k = np.arange(1, modes + 1, dtype=np.float64)
    return diagonal_generator(-(k**2) * np.pi**2, t_max)


def semigroup_apply(gen: Generator, t: float, x) -> np.ndarray:
    """Evaluate S(t) x = exp(t A) x."""
    return apply_operator(propagator(gen.matrix, t), x)


def resolvent(gen: Generator, lam: float) -> np.ndarray:
    """R(lam; A) = (lam I - A)^{-1} for lam > bound_alpha.

    The solve is verified: ||(lam I - A) R - I|| must stay within 1e-10.
    """
    if not lam > gen.bound_alpha:
        raise ResolventDomainError(
            f"resolvent point {lam} is not to the right of alpha = {gen.bound_alpha}"
        )
    mat = lam * np.eye(gen.dim) - gen.matrix
    try:
        res = np.linalg.solve(mat, np.eye(gen.dim))
    except np.linalg.LinAlgError as exc:
        raise NumericalSingularityError(f"resolvent solve failed at lam = {lam}: {exc}") from exc
    residual = operator_norm(mat @ res - np.eye(gen.dim))
    if not residual <= RESOLVENT_RESIDUAL_TOL:
        raise NumericalSingularityError(
            f"resolvent residual {residual:.3e} exceeds {RESOLVENT_RESIDUAL_TOL} at lam = {lam}"
        )
    return res


def yosida(gen: Generator, n: float) -> Generator:
    """Bounded approximation n^2 R(n; A) - n I of the generator.

    Scalar a gives n a / (n - a).  The returned generator carries its own
    certified bounds (its transient can exceed the parent envelope when
    alpha < 0; families recertify a shared envelope instead).
    """
    res = resolvent(gen, n)
    approx = n * n * res - n * np.eye(gen.dim)
    return make_generator(approx, gen.certified_horizon)


@dataclass(frozen=True)
class GeneratorFamily:
    """Approximating generators with a shared certified stability envelope."""

    labels: tuple
    members: tuple
    limit: Generator
    bound_m: float
    bound_alpha: float

    def __post_init__(self):
        if len(self.labels) != len(self.members) or not self.members:
            raise DimensionError("family needs one label per member and at least one member")
        dims = {g.dim for g in self.members} | {self.limit.dim}
        if len(dims) != 1:
            raise DimensionError(f"family members live in different dimensions: {sorted(dims)}")


def _family_from_matrices(labels, matrices, limit: Generator, t_max: float) -> GeneratorFamily:
    ts = certification_grid(t_max)
    all_mats = list(matrices) + [limit.matrix]
    alpha = max(spectral_abscissa(m) for m in all_mats)
    m_shared = max(_stability_prefactor(m, alpha, ts) for m in all_mats) * (1.0 + 1e-12)
    m_shared = max(1.0, m_shared)
    members = tuple(Generator(m, m_shared, alpha, float(t_max)) for m in matrices)
    return GeneratorFamily(tuple(labels), members, limit, m_shared, alpha)


def yosida_family(gen: Generator, ns, t_max: float | None = None) -> GeneratorFamily:
    """Yosida members for each index in ns, certified under one shared envelope."""
    horizon = gen.certified_horizon if t_max is None else float(t_max)
    mats = []
    for n in ns:
        res = resolvent(gen, float(n))
        mats.append(float(n) ** 2 * res - float(n) * np.eye(gen.dim))
    return _family_from_matrices([float(n) for n in ns], mats, gen, horizon)


def default_probes(dim: int) -> np.ndarray:
    """Unit probe vectors: leading basis directions plus the diagonal direction."""
    probes = [np.eye(dim)[i] for i in range(min(dim, 3))]
    probes.append(np.ones(dim) / np.sqrt(dim))
    return np.array(probes)


def trotter_kato_defect(family: GeneratorFamily, t_grid, probes=None) -> list[tuple[float, float]]:
    """Per-member sup over (t, probe) of |S_n(t) x - S(t) x|."""
    ts = np.asarray(t_grid, dtype=np.float64)
    if ts.ndim != 1 or ts.size == 0 or np.any(ts < 0):
        raise ValueError("defect needs a non-empty grid of times >= 0")
    if probes is None:
        probes = default_probes(family.limit.dim)
    probes = np.asarray(probes, dtype=np.float64)
    if probes.ndim != 2 or probes.shape[1] != family.limit.dim:
        raise DimensionError(f"probes of shape {probes.shape} do not match dimension {family.limit.dim}")
    table = []
    for label, member in zip(family.labels, family.members):
        worst = 0.0
        for t in ts:
            diff = probes @ (propagator(member.matrix, t) - propagator(family.limit.matrix, t)).T
            worst = max(worst, float(np.max(np.linalg.norm(diff, axis=1))))
        table.append((label, worst))
    return table


def build_divergence_form_generator(
    q,
    r,
    dim: int,
    *,
    sigma_min: float = 0.0,
    coefficient_bound: float | None = None,
    t_max: float = 1.0,
) -> Generator:
    """Finite-difference generator for (q u')' + r u' on (0, 1), zero boundary.

    Interior nodes z_i = i h with h = 1/(dim+1).  The second-order part uses
    the conservative flux form with q evaluated at half-grid points by
    arithmetic mean; the first-order part uses centred differences.  q must
    stay strictly above sigma_min at all sample points.
    """
    if dim < 1:
        raise DimensionError("need at least one interior node")
    h = 1.0 / (dim + 1)
    nodes = np.arange(dim + 2, dtype=np.float64) * h
    qv = np.array([float(q(z)) for z in nodes])
    rv = np.array([float(r(z)) for z in nodes])
    if not (np.all(np.isfinite(qv)) and np.all(np.isfinite(rv))):
        raise EllipticityError("coefficients produced non-finite samples")
    if np.any(qv <= sigma_min) or np.any(qv <= 0.0):
        raise EllipticityError(
            f"flux coefficient drops to {qv.min():.6g}, below the ellipticity floor {max(sigma_min, 0.0):.6g}"
        )
    if coefficient_bound is not None and (
        np.any(np.abs(qv) > coefficient_bound) or np.any(np.abs(rv) > coefficient_bound)
    ):
        raise EllipticityError(f"coefficient samples exceed the stated bound {coefficient_bound}")
    half = 0.5 * (qv[:-1] + qv[1:])  # q at z_{i+1/2}, i = 0..dim
    mat = np.zeros((dim, dim))
    for i in range(dim):
        qm, qp = half[i], half[i + 1]
        mat[i, i] = -(qp + qm) / h**2
        if i + 1 < dim:
            mat[i, i + 1] = qp / h**2 + rv[i + 1] / (2 * h)
        if i - 1 >= 0:
            mat[i, i - 1] = qm / h**2 - rv[i + 1] / (2 * h)
    return make_generator(mat, t_max)


def divergence_form_family(
    q,
    r,
    dim: int,
    ns,
    q_perturbation,
    r_perturbation=None,
    *,
    t_max: float = 1.0,
) -> GeneratorFamily:
    """Members built from q + q_perturbation/n (and r + r_perturbation/n)."""
    limit = build_divergence_form_generator(q, r, dim, t_max=t_max)
    mats = []
    for n in ns:
        scale = 1.0 / float(n)

        def qn(z, _s=scale):
            return q(z) + _s * q_perturbation(z)

        if r_perturbation is None:
            rn = r
        else:

            def rn(z, _s=scale):
                return r(z) + _s * r_perturbation(z)

        mats.append(build_divergence_form_generator(qn, rn, dim, t_max=t_max).matrix)
    return _family_from_matrices([float(n) for n in ns], mats, limit, t_max)
