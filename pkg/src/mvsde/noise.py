"""Q-Wiener increments from counter-based, per-particle random streams.

Each particle owns a Philox stream keyed by (seed, particle_id), so draws are
bit-reproducible regardless of scheduling or how many particles run alongside.
Initial-condition draws use a reserved stream id that no particle can occupy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator as RandomGenerator
from numpy.random import Philox

from .errors import DimensionError, StepSizeError
from .linalg import operator_norm

_U64 = (1 << 64) - 1
INITIAL_STREAM_ID = _U64  # reserved; particle ids are always < 2^64 - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _U64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Deterministic sub-seed for sweep point / replicate `index`."""
    return splitmix64((master_seed & _U64) ^ splitmix64(index & _U64))


def _stream_generator(seed: int, stream_id: int) -> RandomGenerator:
    key = np.array([seed & _U64, stream_id & _U64], dtype=np.uint64)
    return RandomGenerator(Philox(key=key))


@dataclass(frozen=True)
class QWienerSpec:
    """Diagonal covariance of the driving Wiener process in the fixed basis."""

    kappas: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.kappas, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionError("covariance needs a non-empty 1-D list of eigenvalues")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("covariance eigenvalues must be finite and >= 0")
        object.__setattr__(self, "kappas", arr)

    @property
    def dim(self) -> int:
        return self.kappas.shape[0]

    @property
    def trace_q(self) -> float:
        return float(math.fsum(self.kappas))


@dataclass
class NoiseStream:
    """One particle's increment stream; `step` is the consumption counter."""

    seed: int
    particle_id: int
    step: int = 0
    _gen: RandomGenerator | None = field(default=None, repr=False, compare=False)
    _pos: int = field(default=0, repr=False, compare=False)


def _raw_normals(stream: NoiseStream, k: int) -> np.ndarray:
    """Standard normals for the stream's current step, honouring random access."""
    if stream._gen is None or stream.step < stream._pos:
        stream._gen = _stream_generator(stream.seed, stream.particle_id)
        stream._pos = 0
    if stream.step > stream._pos:
        stream._gen.standard_normal((stream.step - stream._pos, k))
        stream._pos = stream.step
    out = stream._gen.standard_normal(k)
    stream.step += 1
    stream._pos = stream.step
    return out


def sample_increment(q: QWienerSpec, dt: float, stream: NoiseStream) -> np.ndarray:
    """Draw the Wiener increment over one step of length dt, advancing the stream.

    Component k is N(0, kappa_k * dt); components are independent.
    """
    if not dt > 0:
        raise StepSizeError(f"step size must be > 0, got {dt}")
    return np.sqrt(q.kappas * dt) * _raw_normals(stream, q.dim)


class ParticleNoise:
    """Block sampler over a whole ensemble, column i matching stream (seed, i)."""

    def __init__(self, seed: int, n_particles: int):
        self.seed = seed
        self.n_particles = n_particles
        self._gens = [_stream_generator(seed, i) for i in range(n_particles)]

    def draw_block(self, n_steps: int, k: int) -> np.ndarray:
        """Standard normals of shape (n_steps, n_particles, k), advancing all streams."""
        out = np.empty((n_steps, self.n_particles, k))
        for i, gen in enumerate(self._gens):
            out[:, i, :] = gen.standard_normal((n_steps, k))
        return out


def initial_normals(seed: int, n: int, dim: int) -> np.ndarray:
    """Standard normals used to build initial conditions, from the reserved stream."""
    return _stream_generator(seed, INITIAL_STREAM_ID).standard_normal((n, dim))


@dataclass(frozen=True)
class ItoMomentCheck:
    """Monte Carlo moment of a Wiener integral against its analytic envelope."""

    lhs: float
    lhs_se: float
    rhs: float

    @property
    def within_three_se(self) -> bool:
        return self.lhs <= self.rhs + 3.0 * self.lhs_se


def ito_moment_check(
    g_path,
    q: QWienerSpec,
    horizon: float,
    p: float,
    n_samples: int,
    seed: int = 0,
) -> ItoMomentCheck:
    """Estimate E|int_0^T G(s) dW(s)|^p and compare with the moment envelope.

    g_path is a step function: one (d, k) matrix per uniform step over
    [0, horizon].  The envelope is
    [p(p-1)/2]^{p/2} (tr Q)^{p/2} T^{p/2-1} * sum_j ||G_j||^p dt.
    """
    if p < 2:
        raise ValueError(f"moment order must be >= 2, got {p}")
    if not horizon > 0:
        raise StepSizeError(f"horizon must be > 0, got {horizon}")
    if n_samples < 2:
        raise ValueError("need at least two Monte Carlo samples")
    mats = [np.atleast_2d(np.asarray(g, dtype=np.float64)) for g in g_path]
    if not mats:
        raise DimensionError("g_path must contain at least one step matrix")
    d, k = mats[0].shape
    if k != q.dim or any(m.shape != (d, k) for m in mats):
        raise DimensionError("every step matrix must share one (d, k) shape matching the covariance")
    n_steps = len(mats)
    dt = horizon / n_steps
    scale = np.sqrt(q.kappas * dt)
    noise = ParticleNoise(seed, n_samples)
    y = np.zeros((n_samples, d))
    chunk = max(1, min(n_steps, 256))
    j = 0
    while j < n_steps:
        block = noise.draw_block(min(chunk, n_steps - j), k) * scale
        for dw in block:
            y += dw @ mats[j].T
            j += 1
    powers = np.linalg.norm(y, axis=1) ** p
    lhs = float(np.mean(powers))
    lhs_se = float(np.std(powers, ddof=1) / np.sqrt(n_samples))
    rhs = (
        (0.5 * p * (p - 1.0)) ** (p / 2.0)
        * q.trace_q ** (p / 2.0)
        * horizon ** (p / 2.0 - 1.0)
        * math.fsum(operator_norm(m) ** p * dt for m in mats)
    )
    return ItoMomentCheck(lhs, lhs_se, float(rhs))
