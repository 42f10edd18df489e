import math

import numpy as np
import pytest

from nonlocal_capillarity.droplet import (AngleRegime, CapillaryProblem, GridDomain, Schedule,
                                          complement_duality_check, delta_energy, energy_eval,
                                          exhaustive_minimum, free_energy, measure_contact_angle,
                                          minimize, wall_contact_fraction)
from nonlocal_capillarity.errors import DomainError, IndeterminateAngle
from nonlocal_capillarity.geometry import rect_interaction
from nonlocal_capillarity.kernels import AnisotropyFn, KernelSpec
from nonlocal_capillarity.regions import Box

K1 = KernelSpec.isotropic(0.5)
K2 = KernelSpec(0.5, AnisotropyFn.planar(lambda t: 1 + 0.5 * np.cos(t) ** 2))


def _cell(i, j, h=1.0):
    return Box((i * h, j * h), ((i + 1) * h, (j + 1) * h))


def _energy_by_rectangles(E, omega, sigma, h, g):
    """Pairwise cell integrals plus the container exterior split into four boxes."""
    H, W = omega.shape
    inside = list(zip(*np.nonzero(E)))
    rest = list(zip(*np.nonzero(omega & ~E)))
    i1 = math.fsum(rect_interaction(K1, _cell(a, b, h), _cell(c, d, h)) for b, a in inside for d, c in rest)
    outer = (Box((-np.inf, -np.inf), (0, np.inf)), Box((W * h, -np.inf), (np.inf, np.inf)),
             Box((0, -np.inf), (W * h, 0)), Box((0, H * h), (W * h, np.inf)))
    i2 = math.fsum(rect_interaction(K2, _cell(a, b, h), o) for b, a in inside for o in outer)
    return i1 + sigma * i2 + h * h * g[E].sum()


def test_energy_matches_rectangle_decomposition():
    rng = np.random.default_rng(1)
    g = rng.normal(size=(5, 6))
    dom = GridDomain.rectangle(6, 5, h=0.5, g_field=g)
    E = np.zeros((5, 6), bool)
    E[0:3, 1:4] = True
    E[3, 2] = True
    p = CapillaryProblem(dom, K1, K2, 0.7, int(E.sum()))
    ref = _energy_by_rectangles(E, dom.omega_mask, 0.7, 0.5, g)
    assert energy_eval(p, E) == pytest.approx(ref, rel=1e-9)


def test_volume_and_containment_checks():
    omega = np.ones((4, 4), bool)
    omega[0, 0] = False
    p = CapillaryProblem(GridDomain(omega), K1, K1, 0.0, 3)
    E = np.zeros((4, 4), bool)
    E[1, 1:3] = True
    with pytest.raises(DomainError):
        energy_eval(p, E)
    E[0, 0] = True
    with pytest.raises(DomainError):
        free_energy(p, E)
    with pytest.raises(DomainError):
        CapillaryProblem(GridDomain(omega), K1, K1, 0.0, 0)


def test_exchange_energy_matches_difference():
    rng = np.random.default_rng(5)
    dom = GridDomain.rectangle(7, 6, g_field=rng.normal(size=(6, 7)))
    p = CapillaryProblem(dom, K1, K2, -0.4, 15)
    cells = rng.permutation(42)
    E = np.zeros(42, bool)
    E[cells[:15]] = True
    E = E.reshape(6, 7)
    jo, io = np.argwhere(E)[3]
    ji, ii = np.argwhere(~E)[7]
    E2 = E.copy()
    E2[jo, io], E2[ji, ii] = False, True
    d = delta_energy(p, E, (io, jo), (ii, ji))
    assert d == pytest.approx(energy_eval(p, E2) - energy_eval(p, E), abs=1e-10)


@pytest.mark.parametrize("sigma", [-1.0, 0.5])
def test_complement_duality(sigma):
    rng = np.random.default_rng(11)
    p = CapillaryProblem(GridDomain.rectangle(16, 16), K1, K2, sigma, 10)
    for _ in range(3):
        F = rng.random((16, 16)) < 0.3
        lhs, rhs, defect = complement_duality_check(p, F)
        assert defect <= 1e-9 * abs(lhs)


def test_annealing_is_deterministic_and_descends():
    p = CapillaryProblem(GridDomain.rectangle(12, 10), K1, K1, 0.3, 30)
    sched = Schedule(sweeps=60, seed=4)
    a, b = minimize(p, sched), minimize(p, sched)
    assert np.array_equal(a.final_mask, b.final_mask)
    assert a.final_energy == b.final_energy
    assert a.final_energy <= a.initial_energy
    assert int(a.final_mask.sum()) == 30
    # the zero-temperature tail of the trace never increases
    steps = [e for k, e in a.energy_trace if k >= a.energy_trace[-1][0] - 5]
    assert all(y <= x + 1e-9 for x, y in zip(steps, steps[1:]))


def test_annealing_reaches_exhaustive_minimum():
    for sigma, m in ((0.0, 4), (0.8, 3), (-0.8, 5)):
        p = CapillaryProblem(GridDomain.rectangle(4, 3), K1, K2, sigma, m)
        best, arg, total = exhaustive_minimum(p)
        assert total == math.comb(12, m)
        rep = minimize(p, Schedule(sweeps=100, seed=1))
        assert rep.final_energy == best


def test_exhaustive_limit():
    p = CapillaryProblem(GridDomain.rectangle(8, 8), K1, K1, 0.0, 5)
    with pytest.raises(DomainError):
        exhaustive_minimum(p)


def test_gravity_pulls_droplet_down():
    H, W = 16, 12
    g = np.repeat(np.arange(H, dtype=float)[:, None], W, axis=1) * 0.5
    heavy = CapillaryProblem(GridDomain.rectangle(W, H, g_field=g), K1, K1, 0.0, 40)
    light = CapillaryProblem(GridDomain.rectangle(W, H), K1, K1, 0.0, 40)
    yh = np.argwhere(minimize(heavy, Schedule(sweeps=80)).final_mask)[:, 0].mean()
    yl = np.argwhere(minimize(light, Schedule(sweeps=80)).final_mask)[:, 0].mean()
    assert yh < yl


def test_angle_of_block_and_triangle():
    omega = np.ones((30, 40), bool)
    block = np.zeros_like(omega)
    block[:10, 10:20] = True
    m = measure_contact_angle(block, omega, "bottom")
    assert m.regime is AngleRegime.MEASURED
    assert m.degrees == pytest.approx(90.0, abs=1e-9)
    jj, ii = np.mgrid[0:30, 0:40]
    tri = (ii >= 5) & (ii + jj < 25)
    m = measure_contact_angle(tri, omega, "bottom")
    # the left end is vertical, the right end leans at 45 degrees
    assert m.degrees == pytest.approx(0.5 * (90 + 45), abs=1e-9)
    assert measure_contact_angle(tri, omega, "bottom", fit="quadratic").degrees == pytest.approx(67.5, abs=1e-9)


def test_angle_on_other_walls():
    omega = np.ones((30, 40), bool)
    jj, ii = np.mgrid[0:30, 0:40]
    tri = (ii >= 5) & (ii + jj < 25)
    ref = measure_contact_angle(tri, omega, "bottom").theta
    assert measure_contact_angle(tri[::-1], omega, "top").theta == pytest.approx(ref)
    assert measure_contact_angle(tri.T, omega.T, "left").theta == pytest.approx(ref)
    assert measure_contact_angle(tri, omega, "auto").theta == pytest.approx(ref)


def test_detachment_and_sticking_signatures():
    omega = np.ones((20, 20), bool)
    floating = np.zeros_like(omega)
    floating[8:12, 8:12] = True
    assert measure_contact_angle(floating, omega, "bottom").regime is AngleRegime.DETACHMENT
    film = np.zeros_like(omega)
    film[:2, :] = True
    m = measure_contact_angle(film, omega, "bottom")
    assert m.regime is AngleRegime.STICKING and m.theta == 0.0
    assert wall_contact_fraction(film, omega, "bottom") == 1.0
    assert wall_contact_fraction(film, omega, "top") == 0.0
    half = np.zeros_like(omega)
    half[:, :10] = True
    assert measure_contact_angle(half, omega, "bottom").degrees == pytest.approx(90.0)
    # a single-row strip covers half the wall but gives no interface to fit
    strip = np.zeros_like(omega)
    strip[0, :10] = True
    with pytest.raises(IndeterminateAngle):
        measure_contact_angle(strip, omega, "bottom")


def test_wall_report_from_minimize():
    p = CapillaryProblem(GridDomain.rectangle(24, 16), K1, K1, -0.5, 60)
    rep = minimize(p, Schedule(sweeps=80), wall="auto")
    assert rep.wall_contact_fraction > 0
    assert rep.measured_angle is None or 0 <= rep.measured_angle <= math.pi
