import numpy as np
import pytest

from mvsde.coefficients import (
    apply_diffusion,
    growth_spot_check,
    lipschitz_spot_check,
    make_coefficients,
    scaled_drift,
    shifted_drift,
)
from mvsde.errors import DimensionError
from mvsde.measure import EmpiricalMeasure

BUILTIN_SPECS = [
    ("zero/zero", dict(drift="zero", diffusion="zero")),
    ("const/const", dict(drift="constant", drift_value=0.7, diffusion="constant", diffusion_value=0.5)),
    ("linear/const", dict(drift="linear", drift_rate=-0.8, diffusion="constant", diffusion_value=1.0)),
    ("mf/const", dict(drift="mean_field", drift_theta=1.3, diffusion="constant", diffusion_value=0.5)),
    (
        "mf/rank1",
        dict(
            drift="mean_field",
            drift_theta=0.6,
            diffusion="rank_one_coupled",
            diffusion_value=0.4,
            diffusion_state=0.3,
            diffusion_mean=0.2,
        ),
    ),
]


@pytest.mark.parametrize("label,kwargs", BUILTIN_SPECS)
@pytest.mark.parametrize("d,k", [(1, 1), (3, 2), (2, 4)])
def test_builtin_certificates_hold(label, kwargs, d, k):
    """Stored Lipschitz/growth constants survive randomized spot checks."""
    spec = make_coefficients(d, k, **kwargs)
    assert lipschitz_spot_check(spec, d, n_pairs=80, seed=1) <= 1e-9
    assert growth_spot_check(spec, d, n_points=80, seed=2) <= 1e-9


def test_mean_field_drift_value():
    spec = make_coefficients(1, 1, drift="mean_field", drift_theta=1.0)
    x = np.array([[1.0], [3.0]])
    mu = EmpiricalMeasure(x)
    # theta (mean(mu) - x) with mean 2
    assert np.allclose(spec.drift(x, mu), [[1.0], [-1.0]])
    assert not spec.measure_free
    assert spec.lipschitz_drift == pytest.approx(1.0)


def test_linear_drift_is_measure_free():
    spec = make_coefficients(2, 1, drift="linear", drift_rate=-0.5)
    x = np.array([[2.0, 0.0]])
    mu_a = EmpiricalMeasure(np.array([[0.0, 0.0]]))
    mu_b = EmpiricalMeasure(np.array([[9.0, 9.0]]))
    assert np.allclose(spec.drift(x, mu_a), spec.drift(x, mu_b))
    assert np.allclose(spec.drift(x, mu_a), [[-1.0, 0.0]])
    assert spec.measure_free


def test_constant_drift_hits_first_coordinate():
    spec = make_coefficients(3, 1, drift="constant", drift_value=2.0)
    x = np.zeros((2, 3))
    out = spec.drift(x, EmpiricalMeasure(x))
    assert np.allclose(out, [[2.0, 0.0, 0.0], [2.0, 0.0, 0.0]])


def test_constant_diffusion_shape_and_value():
    spec = make_coefficients(3, 2, diffusion="constant", diffusion_value=0.5)
    g = spec.diffusion(np.zeros((4, 3)), EmpiricalMeasure(np.zeros((4, 3))))
    assert g.shape == (3, 2)
    assert np.allclose(g, 0.5 * np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    assert spec.lipschitz_diffusion == 0.0


def test_rank_one_coupled_diffusion_value():
    spec = make_coefficients(
        2, 2, diffusion="rank_one_coupled", diffusion_value=0.0, diffusion_state=1.0, diffusion_mean=2.0
    )
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    mu = EmpiricalMeasure(np.array([[2.0, 2.0], [0.0, 0.0]]))  # mean (1, 1)
    g = spec.diffusion(x, mu)
    assert g.shape == (2, 2, 2)
    # column 0 carries x + 2 * mean, the other column stays zero
    assert np.allclose(g[0][:, 0], [3.0, 2.0])
    assert np.allclose(g[1][:, 0], [2.0, 3.0])
    assert np.allclose(g[..., 1], 0.0)
    assert not spec.measure_free


def test_apply_diffusion_shared_and_per_particle():
    rng = np.random.default_rng(3)
    dw = rng.standard_normal((5, 2))
    shared = rng.standard_normal((3, 2))
    out = apply_diffusion(shared, dw)
    assert out.shape == (5, 3)
    assert np.allclose(out, dw @ shared.T)
    per = rng.standard_normal((5, 3, 2))
    out2 = apply_diffusion(per, dw)
    assert np.allclose(out2, np.stack([per[i] @ dw[i] for i in range(5)]))
    with pytest.raises(DimensionError):
        apply_diffusion(rng.standard_normal(4), dw)


def test_shifted_drift_adds_constant():
    base = make_coefficients(2, 1, drift="linear", drift_rate=-1.0)
    shifted = shifted_drift(base, np.array([0.25, 0.0]))
    x = np.zeros((1, 2))
    mu = EmpiricalMeasure(x)
    assert np.allclose(shifted.drift(x, mu), [[0.25, 0.0]])
    assert shifted.lipschitz_drift == base.lipschitz_drift
    assert shifted.label.endswith("+shift")
    assert lipschitz_spot_check(shifted, 2, n_pairs=60, seed=5) <= 1e-9
    assert growth_spot_check(shifted, 2, n_points=60, seed=6) <= 1e-9


def test_scaled_drift_scales_constants():
    base = make_coefficients(1, 1, drift="mean_field", drift_theta=1.0)
    scaled = scaled_drift(base, 0.5)
    x = np.array([[2.0]])
    mu = EmpiricalMeasure(np.array([[0.0]]))
    assert np.allclose(scaled.drift(x, mu), 0.5 * base.drift(x, mu))
    assert scaled.lipschitz_drift == pytest.approx(0.5)
    assert lipschitz_spot_check(scaled, 1, n_pairs=60, seed=7) <= 1e-9


def test_make_coefficients_rejects_unknown_names():
    with pytest.raises(ValueError):
        make_coefficients(1, 1, drift="bogus")
    with pytest.raises(ValueError):
        make_coefficients(1, 1, diffusion="bogus")
    with pytest.raises(DimensionError):
        make_coefficients(0, 1)
