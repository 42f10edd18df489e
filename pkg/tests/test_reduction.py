import math

import numpy as np
import pytest

from nonlocal_capillarity.errors import DomainError
from nonlocal_capillarity.kernels import AnisotropyFn
from nonlocal_capillarity.reduction import PhiProfile, build_phi, project_anisotropy

# int_R (1 + t^2)^(-(3+s)/2) dt, computed once with scipy.integrate.quad over the whole line
LINE_INTEGRAL = {0.5: 1.74803836952808, 0.3: 1.8372859626822924}


def _unit(t):
    return np.array([math.cos(t), math.sin(t)])


def test_planar_projection_is_identity():
    a = AnisotropyFn.planar(lambda t: 1 + np.cos(t) ** 2)
    for t in (0.0, 0.4, 2.0, 5.1):
        assert project_anisotropy(a, 2, 0.5, _unit(t)) == a(_unit(t))


@pytest.mark.parametrize("s", [0.5, 0.3])
def test_constant_three_dimensional_projection(s):
    a = AnisotropyFn.constant(1.0, 3)
    assert project_anisotropy(a, 3, s, _unit(0.7)) == pytest.approx(LINE_INTEGRAL[s], abs=1e-9)


def test_projection_is_linear_in_a():
    one = project_anisotropy(AnisotropyFn.constant(1.0, 3), 3, 0.5, _unit(1.1))
    two = project_anisotropy(AnisotropyFn.constant(2.5, 3), 3, 0.5, _unit(1.1))
    assert two == pytest.approx(2.5 * one, rel=1e-10)


def test_projection_monotone_in_a():
    a = AnisotropyFn.from_function(lambda w: 1 + 0.5 * w[..., 1] ** 2, dim=3)
    b = AnisotropyFn.from_function(lambda w: 2 + 0.5 * w[..., 1] ** 2, dim=3)
    for t in np.linspace(0, np.pi, 7):
        assert project_anisotropy(a, 3, 0.5, _unit(t)) < project_anisotropy(b, 3, 0.5, _unit(t))


def test_non_unit_vector_rejected():
    with pytest.raises(DomainError):
        project_anisotropy(AnisotropyFn.constant(1.0, 3), 3, 0.5, np.array([1.0, 0.1]))


def test_monte_carlo_projection_in_four_dimensions():
    a = AnisotropyFn.constant(1.0, 4)
    val, err = project_anisotropy(a, 4, 0.5, _unit(0.3), mc_samples=20000, return_error=True)
    # constant a: the estimate is exactly the normalising constant pi * G(1.25) / G(2.25)
    exact = math.pi * math.gamma(1.25) / math.gamma(2.25)
    assert val == pytest.approx(exact, rel=1e-12)
    b = AnisotropyFn.from_function(lambda w: 1 + w[..., 1] ** 2, dim=4)
    v, e = project_anisotropy(b, 4, 0.5, _unit(0.3), mc_samples=200000, return_error=True)
    assert e > 0
    assert exact < v < 2 * exact


def test_build_phi_constant_planar():
    phi = build_phi(AnisotropyFn.constant(), 2, 0.5)
    assert np.all(phi.values == 1.0)


def test_build_phi_planar_formula():
    phi = build_phi(AnisotropyFn.planar(lambda t: 1 + np.cos(t) ** 2), 2, 0.5, grid_size=64)
    assert np.allclose(phi.values, 1 + np.cos(phi.grid) ** 2, atol=1e-14)


def test_build_phi_three_dimensional_constant():
    phi = build_phi(AnisotropyFn.constant(1.0, 3), 3, 0.5, grid_size=16)
    assert np.allclose(phi.values, math.sqrt(math.pi) * math.gamma(1.25) / math.gamma(1.75), atol=1e-9)


def test_half_period_symmetry_is_exact():
    a = AnisotropyFn.from_function(lambda w: 1 + 0.3 * w[..., 0] ** 2 + 0.2 * (w[..., 0] * w[..., 2]), dim=3)
    phi = build_phi(a, 3, 0.4, grid_size=32)
    assert phi.symmetry_defect() == 0.0
    assert np.all(phi.values > 0)


def test_monte_carlo_profile_is_flagged():
    phi = build_phi(AnisotropyFn.constant(1.0, 5), 5, 0.5, grid_size=16, mc_samples=1000)
    assert phi.stochastic
    assert phi.symmetry_defect() == 0.0


def test_grid_size_validation():
    with pytest.raises(DomainError):
        build_phi(AnisotropyFn.constant(), 2, 0.5, grid_size=15)
    with pytest.raises(DomainError):
        PhiProfile(0.5, np.ones(8))


def test_profile_table_round_trip(tmp_path):
    phi = build_phi(AnisotropyFn.planar(lambda t: 1 + 0.5 * np.sin(t) ** 2), 2, 0.3, grid_size=64)
    path = tmp_path / "phi.txt"
    phi.save(path)
    back = PhiProfile.from_table(path)
    assert back.s == 0.3
    assert np.array_equal(back.values, phi.values)


def test_interpolation_is_linear_between_nodes():
    vals = np.ones(16)
    vals[1] = vals[9] = 3.0
    phi = PhiProfile(0.5, vals)
    step = 2 * np.pi / 16
    assert phi(0.5 * step) == pytest.approx(2.0)
    assert phi(np.pi + 0.5 * step) == pytest.approx(2.0)
