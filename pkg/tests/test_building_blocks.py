import math

import numpy as np
import pytest
from scipy.special import beta

from nonlocal_capillarity.errors import DomainError
from nonlocal_capillarity.fields import FieldTerm, planar_field, radial_segment_integral
from nonlocal_capillarity.quadrature import (angular_rule, gauss_legendre, graded_rule, jacobi_left,
                                             jacobi_right, radial_power_integral, sphere_rule)
from nonlocal_capillarity.regions import (Ball, Box, Complement, Cylinder, GridMask, HalfSpace, Wedge,
                                          format_raster, read_raster)


def test_gauss_legendre_is_exact_for_polynomials():
    x, w = gauss_legendre(-1.0, 2.0, 5)
    assert np.dot(w, x ** 9) == pytest.approx((2 ** 10 - 1) / 10, rel=1e-13)


@pytest.mark.parametrize("b", [0.3, 0.7])
def test_jacobi_rules_absorb_power(b):
    # int_0^2 x^b * x^3 dx and the mirrored rule on the right end
    x, w = jacobi_left(0.0, 2.0, b, 6)
    assert np.dot(w, x ** 3) == pytest.approx(2 ** (4 + b) / (4 + b), rel=1e-13)
    x, w = jacobi_right(0.0, 2.0, b, 6)
    assert np.dot(w, x) == pytest.approx(2 ** (2 + b) * beta(2, 1 + b), rel=1e-13)


def test_graded_rule_handles_endpoint_singularity():
    x, w = graded_rule([0.0, 1.0], levels=20, order=8)
    # the innermost panel [0, eps] carries the error: it shrinks with eps
    assert np.dot(w, x ** -0.5) == pytest.approx(2.0, rel=1e-6)
    x, w = graded_rule([0.0, 1.0], levels=30, ratio=0.3, order=8)
    assert np.dot(w, x ** -0.5) == pytest.approx(2.0, rel=1e-8)


def test_angular_and_sphere_rules_have_full_measure():
    a, w = angular_rule([0.3, 2.0], period=2 * math.pi)
    assert w.sum() == pytest.approx(2 * math.pi, rel=1e-14)
    assert np.all((a >= 0) & (a <= 2 * math.pi))
    d, w = sphere_rule(16, 24)
    assert w.sum() == pytest.approx(4 * math.pi, rel=1e-12)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)


def test_radial_integrals():
    assert radial_power_integral(1.0, np.inf, 0.5) == pytest.approx(2.0)
    assert radial_power_integral(1.0, 4.0, 0.5) == pytest.approx(1.0)
    # on a tiny segment the integral is its length times the integrand
    v = radial_segment_integral(np.array([1.0]), np.array([1.0 + 1e-9]), 0.5, radial=lambda r: np.exp(-r))
    assert v[0] == pytest.approx(1e-9 * math.exp(-1.0), rel=1e-6)
    with pytest.raises(DomainError):
        radial_segment_integral(np.array([0.0]), np.array([1.0]), 0.5, radial=lambda r: r)


def test_region_membership():
    pts = np.array([[1.0, 1.0], [-1.0, 1.0], [0.0, -2.0]])
    assert Wedge(0.0, math.pi / 2).contains(pts).tolist() == [True, False, False]
    assert HalfSpace((0.0, 1.0), 0.0).contains(pts).tolist() == [True, True, False]
    assert Complement(Ball((0.0, 0.0), 1.5)).contains(pts).tolist() == [False, False, True]
    assert Box((-2, -3), (0, 3)).contains(pts).tolist() == [False, True, False]
    assert Cylinder(1.0, 0.0, 2.0, dim=2).contains(np.array([[0.5, 1.0], [1.5, 1.0]])).tolist() == [True, False]
    with pytest.raises(DomainError):
        Wedge(1.0, 1.0)


def test_grid_mask_cells_and_raster_round_trip():
    m = np.zeros((3, 4), bool)
    m[0, 1] = m[2, 3] = True
    g = GridMask(m, h=0.5, origin=(1.0, 0.0))
    assert g.contains(np.array([[1.75, 0.25], [2.75, 1.25], [1.25, 0.25]])).tolist() == [True, True, False]
    assert np.array_equal(read_raster(format_raster(m)), m)
    # rows are written top-down
    assert format_raster(m).splitlines()[2] == "0 0 0 1"
    with pytest.raises(DomainError):
        read_raster("P1\n2 2\n0 1 1\n")


def test_planar_field_of_disk_complement():
    # int_{|y| > 1} |y|^{-2-s} dy = 2 pi / s at the centre; no principal value needed
    v = planar_field(np.zeros(2), [FieldTerm(Complement(Ball((0.0, 0.0), 1.0)))], 0.5, delta=0.5)
    assert v == pytest.approx(4 * math.pi, rel=1e-12)
