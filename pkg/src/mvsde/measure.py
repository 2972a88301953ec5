"""Empirical measures on the state space and distances between them.

The distance of interest is a Wasserstein-type metric over laws with finite
second moment.  On equal-weight atom sets an upper bound is computable: the
exact optimal assignment for one-dimensional states (sorting) or for at most
`EXACT_ASSIGNMENT_LIMIT` atoms (augmenting-path assignment), and the identity
coupling bound above that size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import DimensionError, GridError, SupportMismatchError

EXACT_ASSIGNMENT_LIMIT = 512


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Equal-weight atoms, one row per sample."""

    atoms: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.atoms, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise DimensionError(f"atoms must form a non-empty (n, d) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("atoms contain non-finite coordinates")
        object.__setattr__(self, "atoms", arr)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mean(self) -> np.ndarray:
        return self.atoms.mean(axis=0)


def phi_norm(mu: EmpiricalMeasure, p: float) -> float:
    """Weighted total-variation style norm (1/n) sum (1 + |x_i|)^p, p >= 1."""
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    weights = (1.0 + np.linalg.norm(mu.atoms, axis=1)) ** p
    return math.fsum(weights) / mu.n_atoms


def _check_same_support_shape(mu: EmpiricalMeasure, nu: EmpiricalMeasure):
    if mu.n_atoms != nu.n_atoms:
        raise SupportMismatchError(f"atom counts differ: {mu.n_atoms} vs {nu.n_atoms}")
    if mu.dim != nu.dim:
        raise SupportMismatchError(f"atom dimensions differ: {mu.dim} vs {nu.dim}")


def rho_method(n_atoms: int, dim: int) -> str:
    """Which bound `rho_upper` computes at this size: "exact" or "coupling"."""
    if dim == 1 or n_atoms <= EXACT_ASSIGNMENT_LIMIT:
        return "exact"
    return "coupling"


def rho_upper(mu: EmpiricalMeasure, nu: EmpiricalMeasure, method: str = "auto") -> float:
    """Upper bound on the transport distance between two equal-size atom sets.

    "exact" solves the optimal assignment (sorting when d = 1); "coupling"
    pairs atom i with atom i, which dominates the optimum for any ordering.
    "auto" picks exact whenever affordable.
    """
    _check_same_support_shape(mu, nu)
    if method == "auto":
        method = rho_method(mu.n_atoms, mu.dim)
    if method == "coupling":
        gaps = np.linalg.norm(mu.atoms - nu.atoms, axis=1)
        return math.fsum(gaps) / mu.n_atoms
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    if mu.dim == 1:
        gaps = np.abs(np.sort(mu.atoms[:, 0]) - np.sort(nu.atoms[:, 0]))
        return math.fsum(gaps) / mu.n_atoms
    # canonical argument order so both call orders run the same arithmetic
    a, b = mu.atoms, nu.atoms
    if b.tobytes() < a.tobytes():
        a, b = b, a
    costs = cdist(a, b)
    rows, cols = linear_sum_assignment(costs)
    return math.fsum(costs[rows, cols]) / mu.n_atoms


@dataclass(frozen=True)
class LawTrajectory:
    """Empirical law at every grid time: atoms[j] holds the time-t_j sample."""

    times: np.ndarray
    atoms: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        atoms = np.asarray(self.atoms, dtype=np.float64)
        if times.ndim != 1 or atoms.ndim != 3 or atoms.shape[0] != times.shape[0]:
            raise DimensionError(
                f"need times (s,) and atoms (s, n, d); got {times.shape} and {atoms.shape}"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    @property
    def dim(self) -> int:
        return self.atoms.shape[2]

    def measure_at(self, j: int) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.atoms[j])


def constant_law(times, measure: EmpiricalMeasure) -> LawTrajectory:
    times = np.asarray(times, dtype=np.float64)
    atoms = np.broadcast_to(measure.atoms, (times.shape[0],) + measure.atoms.shape).copy()
    return LawTrajectory(times, atoms)


def d_metric(a: LawTrajectory, b: LawTrajectory, method: str = "auto") -> float:
    """Uniform-in-time distance: max over the shared grid of rho_upper."""
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise GridError("law trajectories live on different time grids")
    if a.n_atoms != b.n_atoms or a.dim != b.dim:
        raise SupportMismatchError(
            f"trajectories carry different atom shapes: {a.atoms.shape[1:]} vs {b.atoms.shape[1:]}"
        )
    if method == "auto":
        method = rho_method(a.n_atoms, a.dim)
    if method == "exact" and a.dim == 1:
        # vectorised sorted coupling, exact in one dimension
        xs = np.sort(a.atoms[:, :, 0], axis=1)
        ys = np.sort(b.atoms[:, :, 0], axis=1)
        per_time = np.abs(xs - ys).mean(axis=1)
        return float(np.max(per_time))
    if method == "coupling":
        per_time = np.linalg.norm(a.atoms - b.atoms, axis=2).mean(axis=1)
        return float(np.max(per_time))
    worst = 0.0
    for j in range(a.times.shape[0]):
        worst = max(worst, rho_upper(a.measure_at(j), b.measure_at(j), method=method))
    return worst
