"""Drift and diffusion coefficient pairs with certified constants.

Drift maps a batch of states (n, d) and the current empirical law to (n, d).
Diffusion maps the same inputs to either a shared (d, k) matrix or a
per-particle (n, d, k) stack.  Each spec carries Lipschitz constants in the
joint (state, law-distance) metric and quadratic growth constants, which the
closed-form stability constants consume.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import DimensionError
from .measure import EmpiricalMeasure, phi_norm, rho_upper


@dataclass(frozen=True)
class CoefficientSpec:
    drift: Callable[[np.ndarray, EmpiricalMeasure], np.ndarray]
    diffusion: Callable[[np.ndarray, EmpiricalMeasure], np.ndarray]
    lipschitz_drift: float
    lipschitz_diffusion: float
    growth_drift: float
    growth_diffusion: float
    measure_free: bool
    label: str


def _rect_identity(d: int, k: int) -> np.ndarray:
    out = np.zeros((d, k))
    np.fill_diagonal(out, 1.0)
    return out


def zero_drift() -> Callable:
    def f(x, mu):
        return np.zeros_like(x)

    return f


def constant_diffusion_matrix(d: int, k: int, value: float) -> np.ndarray:
    return value * _rect_identity(d, k)


def make_coefficients(
    d: int,
    k: int,
    *,
    drift: str = "zero",
    drift_value: float = 0.0,
    drift_rate: float = 0.0,
    drift_theta: float = 0.0,
    diffusion: str = "constant",
    diffusion_value: float = 1.0,
    diffusion_state: float = 0.0,
    diffusion_mean: float = 0.0,
) -> CoefficientSpec:
    """Assemble a named coefficient pair with its certified constants."""
    if d < 1 or k < 1:
        raise DimensionError("state and noise dimensions must be >= 1")

    if drift == "zero":
        f = zero_drift()
        k1, k3 = 0.0, 0.0
        f_measure_free = True
    elif drift == "constant":
        shift = drift_value * np.eye(d)[0]

        def f(x, mu, _c=shift):
            return np.broadcast_to(_c, x.shape).copy()

        k1, k3 = 0.0, float(drift_value) ** 2
        f_measure_free = True
    elif drift == "linear":

        def f(x, mu, _c=float(drift_rate)):
            return _c * x

        k1 = abs(float(drift_rate))
        k3 = float(drift_rate) ** 2
        f_measure_free = True
    elif drift == "mean_field":
        # pull toward the law's mean; |mean(mu) - mean(nu)| <= rho, so the
        # joint Lipschitz constant is theta
        def f(x, mu, _t=float(drift_theta)):
            return _t * (mu.mean() - x)

        k1 = abs(float(drift_theta))
        k3 = 2.0 * float(drift_theta) ** 2
        f_measure_free = False
    else:
        raise ValueError(f"unknown drift kind {drift!r}")

    if diffusion == "zero":
        gmat = np.zeros((d, k))

        def g(x, mu, _g=gmat):
            return _g

        k2, k4 = 0.0, 0.0
        g_measure_free = True
    elif diffusion == "constant":
        gmat = constant_diffusion_matrix(d, k, float(diffusion_value))

        def g(x, mu, _g=gmat):
            return _g

        # growth is certified in the Hilbert-Schmidt norm of the (d, k) block
        k2, k4 = 0.0, float(diffusion_value) ** 2 * min(d, k)
        g_measure_free = True
    elif diffusion == "rank_one_coupled":
        base = constant_diffusion_matrix(d, k, float(diffusion_value))
        col = np.eye(k)[0]
        c1, c2 = float(diffusion_state), float(diffusion_mean)

        def g(x, mu, _g=base, _col=col, _c1=c1, _c2=c2):
            load = _c1 * x + _c2 * mu.mean()  # (n, d)
            return _g + load[:, :, None] * _col[None, None, :]

        k2 = max(abs(c1), abs(c2))
        k4 = 2.0 * float(diffusion_value) ** 2 * min(d, k) + 4.0 * c1**2 + 4.0 * c2**2
        g_measure_free = c2 == 0.0
    else:
        raise ValueError(f"unknown diffusion kind {diffusion!r}")

    return CoefficientSpec(
        drift=f,
        diffusion=g,
        lipschitz_drift=k1,
        lipschitz_diffusion=k2,
        growth_drift=k3,
        growth_diffusion=k4,
        measure_free=f_measure_free and g_measure_free,
        label=f"f={drift},g={diffusion}",
    )


def shifted_drift(spec: CoefficientSpec, shift: np.ndarray) -> CoefficientSpec:
    """Add a constant vector to the drift (perturbation families)."""
    shift = np.asarray(shift, dtype=np.float64)
    base = spec.drift

    def f(x, mu, _b=base, _s=shift):
        return _b(x, mu) + _s

    return replace(
        spec,
        drift=f,
        growth_drift=2.0 * spec.growth_drift + 2.0 * float(shift @ shift),
        label=spec.label + "+shift",
    )


def scaled_drift(spec: CoefficientSpec, lam: float) -> CoefficientSpec:
    """Multiply the drift by a scalar (parametric families)."""
    base = spec.drift

    def f(x, mu, _b=base, _l=float(lam)):
        return _l * _b(x, mu)

    return replace(
        spec,
        drift=f,
        lipschitz_drift=abs(lam) * spec.lipschitz_drift,
        growth_drift=lam**2 * spec.growth_drift,
        label=spec.label + f"*{lam:g}",
    )


def apply_diffusion(gval: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """Contract a diffusion value with increments dw of shape (n, k)."""
    if gval.ndim == 2:
        return dw @ gval.T
    if gval.ndim == 3:
        return np.einsum("ndk,nk->nd", gval, dw)
    raise DimensionError(f"diffusion value must be (d, k) or (n, d, k), got shape {gval.shape}")


def _random_measure(rng, n_atoms: int, d: int, spread: float) -> EmpiricalMeasure:
    return EmpiricalMeasure(spread * rng.standard_normal((n_atoms, d)))


def lipschitz_spot_check(
    spec: CoefficientSpec,
    d: int,
    n_pairs: int = 64,
    seed: int = 0,
    slack: float = 1e-9,
) -> float:
    """Largest violation of the joint Lipschitz bounds over random input pairs.

    Certified specs keep this at or below `slack`; positive values mean the
    stated constants fail on some sampled pair.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_pairs):
        x = rng.standard_normal((1, d)) * 2.0
        y = rng.standard_normal((1, d)) * 2.0
        mu = _random_measure(rng, 8, d, 1.5)
        nu = _random_measure(rng, 8, d, 1.5)
        gap = float(np.linalg.norm(x - y)) + rho_upper(mu, nu, method="exact")
        df = float(np.linalg.norm(spec.drift(x, mu) - spec.drift(y, nu)))
        worst = max(worst, df - spec.lipschitz_drift * gap - slack)
        gx = np.atleast_3d(spec.diffusion(x, mu))
        gy = np.atleast_3d(spec.diffusion(y, nu))
        dg = float(np.linalg.norm(gx.reshape(-1) - gy.reshape(-1)))
        worst = max(worst, dg - spec.lipschitz_diffusion * gap - slack)
    return worst


def growth_spot_check(
    spec: CoefficientSpec,
    d: int,
    n_points: int = 64,
    seed: int = 0,
    slack: float = 1e-9,
) -> float:
    """Largest violation of the quadratic growth bounds over random inputs."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_points):
        x = rng.standard_normal((1, d)) * 3.0
        mu = _random_measure(rng, 8, d, 2.0)
        envelope = 1.0 + float(np.sum(x * x)) + phi_norm(mu, 1) ** 2
        fv = spec.drift(x, mu)
        worst = max(worst, float(np.sum(fv * fv)) - spec.growth_drift * envelope - slack)
        gv = np.atleast_3d(spec.diffusion(x, mu))
        worst = max(worst, float(np.sum(gv * gv)) - spec.growth_diffusion * envelope - slack)
    return worst
