"""Interaction integrals, nonlocal curvature and slab calibration integrals.

Rectangle pairs in the plane are integrated through the overlap function
``w(z) = |A ∩ (B - z)|``, which is a product of two piecewise linear
functions; along each ray ``z = rho * (cos t, sin t)`` it is a piecewise
quadratic in ``rho``, so the radial integral against ``rho**(-1-s)`` is
exact and only the angle needs quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import gammaln

from .errors import AccuracyError, DomainError, OverlapError
from .fields import AngularParams, FieldTerm, planar_field, spatial_field
from .kernels import KernelSpec
from .quadrature import angular_rule, gauss_legendre, graded_rule, sphere_rule
from .regions import Ball, Box, Complement, Cylinder, GridMask, HalfSpace, Intersection, Region

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class QuadratureParams:
    """Resolution knobs for the geometric integrals.

    ``delta`` is the principal-value pairing radius, ``outer_levels`` and
    ``outer_order`` control the outer (volume) rule of generic
    interaction integrals, ``sphere`` the direction rule in 3D and ``tol``
    the accepted relative difference between two outer resolutions.
    """

    h: float = 1.0
    delta: float = 0.25
    R: float = math.inf
    angular: AngularParams = field(default_factory=AngularParams)
    outer_levels: int = 4
    outer_order: int = 4
    sphere: tuple = (32, 32)
    tol: float = 1e-2

    def __post_init__(self):
        if not (0 < self.delta < self.R):
            raise DomainError("need 0 < delta < R")
        if not self.tol > 0:
            raise DomainError("tolerance must be positive")


# -- exact radial integrals of piecewise quadratics ---------------------------

def _poly_radial(lo, hi, q0, q1, q2, s, radial=None):
    """``int_lo^hi rho**(-1-s) m(rho) (q0 + q1 rho + q2 rho^2) d rho`` elementwise."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    fin = np.isfinite(hi)
    if np.any(~fin & ((q1 != 0) | (q2 != 0))):
        raise DomainError("overlap grows without bound: the interaction diverges")
    if np.any((lo == 0) & (q0 != 0)):
        raise OverlapError("regions overlap: the interaction diverges")
    if radial is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            i0 = np.where(q0 != 0, (np.where(lo > 0, lo ** -s, 0.0) - np.where(fin, hi ** -s, 0.0)) / s, 0.0)
            hif = np.where(fin, hi, 0.0)
            i1 = np.where(q1 != 0, (hif ** (1 - s) - lo ** (1 - s)) / (1 - s), 0.0)
            i2 = np.where(q2 != 0, (hif ** (2 - s) - lo ** (2 - s)) / (2 - s), 0.0)
        return q0 * i0 + q1 * i1 + q2 * i2
    return _poly_radial_profiled(lo, hi, q0, q1, q2, s, radial)


def _poly_radial_profiled(lo, hi, q0, q1, q2, s, radial, order: int = 16):
    out = np.zeros(lo.shape)
    x, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (x + 1.0)
    w = 0.5 * w
    fin = np.isfinite(hi)
    # finite segments away from 0: plain Gauss-Legendre in rho
    sel = fin & (lo > 0)
    if np.any(sel):
        a, b = lo[sel][:, None], hi[sel][:, None]
        r = a + (b - a) * u
        f = r ** (-1 - s) * radial(r) * (q0[sel][:, None] + q1[sel][:, None] * r + q2[sel][:, None] * r * r)
        out[sel] = ((b - a) * w * f).sum(axis=1)
    # segments from 0 (q0 = 0): rho = hi * v**p with p = 1/(1-s)
    sel = fin & (lo == 0)
    if np.any(sel):
        b = hi[sel][:, None]
        p = 1.0 / (1.0 - s)
        r = b * u**p
        g = radial(r) * (q1[sel][:, None] + q2[sel][:, None] * r)
        out[sel] = p * b[:, 0] ** (1 - s) * (w * g).sum(axis=1)
    # tails (only q0): t = rho**(-s)
    sel = ~fin
    if np.any(sel):
        ta = lo[sel][:, None] ** (-s)
        t = ta * u
        with np.errstate(divide="ignore"):
            r = np.where(t > 0, t ** (-1.0 / s), 1e300)
        out[sel] = q0[sel] * (ta[:, 0] * (w * radial(r)).sum(axis=1)) / s
    return out


def _overlap_linear(a0, a1, b0, b1, c, rho):
    """Linear coefficients of ``|[a0,a1] ∩ [b0 - t, b1 - t]|`` at ``t = rho c``."""
    t = rho * c
    hi_const = a1 <= b1 - t
    lo_const = a0 >= b0 - t
    with np.errstate(invalid="ignore"):
        p0 = np.where(hi_const, a1, b1) - np.where(lo_const, a0, b0)
        p1 = np.where(hi_const, 0.0, -c) - np.where(lo_const, 0.0, -c)
        val = p0 + p1 * rho
    pos = val > 0
    return np.where(pos, p0, 0.0), np.where(pos, p1, 0.0)


def _overlap_breaks(a0, a1, b0, b1, c):
    out = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for t in (b0 - a1, b0 - a0, b1 - a1, b1 - a0):
            r = t / c
            out.append(np.where(np.isfinite(r) & (r > 0), r, np.inf))
    return out


def _rect_rays(c, sn, A, B, s, radial=None):
    """Radial integrals along rays for rectangle pairs.

    ``A`` and ``B`` are tuples ``(x0, x1, y0, y1)`` of arrays broadcastable
    against the direction arrays ``c``, ``sn``.
    """
    ax0, ax1, ay0, ay1 = A
    bx0, bx1, by0, by1 = B
    shape = np.broadcast(c, ax0, bx0).shape
    c = np.broadcast_to(c, shape).ravel()
    sn = np.broadcast_to(sn, shape).ravel()
    ax0, ax1, ay0, ay1, bx0, bx1, by0, by1 = (np.broadcast_to(np.asarray(v, dtype=float), shape).ravel()
                                              for v in (ax0, ax1, ay0, ay1, bx0, bx1, by0, by1))
    brk = _overlap_breaks(ax0, ax1, bx0, bx1, c) + _overlap_breaks(ay0, ay1, by0, by1, sn)
    b = np.sort(np.stack([np.zeros_like(c)] + brk, axis=1), axis=1)
    lo = b
    hi = np.concatenate([b[:, 1:], np.full((len(c), 1), np.inf)], axis=1)
    valid = hi > lo
    with np.errstate(invalid="ignore"):
        probe = np.where(np.isfinite(hi), 0.5 * (lo + hi), 2.0 * lo + 1.0)
    probe = np.where(valid, probe, 0.0)
    col = lambda v: v[:, None]
    p0, p1 = _overlap_linear(col(ax0), col(ax1), col(bx0), col(bx1), col(c), probe)
    r0, r1 = _overlap_linear(col(ay0), col(ay1), col(by0), col(by1), col(sn), probe)
    q0 = p0 * r0
    q1 = p0 * r1 + p1 * r0
    q2 = p1 * r1
    bad = ~np.isfinite(q0) | ~np.isfinite(q1) | ~np.isfinite(q2)
    if np.any(bad & valid):
        raise DomainError("both rectangles are unbounded in a common direction: the interaction diverges")
    q0 = np.where(valid, q0, 0.0)
    q1 = np.where(valid, q1, 0.0)
    q2 = np.where(valid, q2, 0.0)
    nz = valid & ((q0 != 0) | (q1 != 0) | (q2 != 0))
    out = np.zeros(lo.shape)
    if np.any(nz):
        out[nz] = _poly_radial(lo[nz], hi[nz], q0[nz], q1[nz], q2[nz], s, radial)
    return out.sum(axis=1).reshape(shape)


def _box_tuple(box: Box):
    return (box.lo[0], box.hi[0], box.lo[1], box.hi[1])


def rect_interaction(K: KernelSpec, A: Box, B: Box, params: AngularParams = AngularParams(levels=12, order=12)) -> float:
    """Exact-radial polar evaluation of ``int_A int_B K(x - y) dx dy`` for planar boxes."""
    if K.dim != 2 or A.dim != 2 or B.dim != 2:
        raise DomainError("rect_interaction works in the plane")
    if not A.bounded and not B.bounded:
        raise DomainError("at least one rectangle must be bounded")
    ta, tb = _box_tuple(A), _box_tuple(B)
    if (ta[0] < tb[1] and tb[0] < ta[1] and ta[2] < tb[3] and tb[2] < ta[3]):
        raise OverlapError("rectangles overlap")
    xs = [tb[0] - ta[1], tb[0] - ta[0], tb[1] - ta[1], tb[1] - ta[0]]
    ys = [tb[2] - ta[3], tb[2] - ta[2], tb[3] - ta[3], tb[3] - ta[2]]
    special = [0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi]
    for x in xs:
        for y in ys:
            if np.isfinite(x) and np.isfinite(y) and (x, y) != (0.0, 0.0):
                special.append(math.atan2(y, x))
    alpha, w = angular_rule(np.array(special), period=TWO_PI, levels=params.levels,
                            ratio=params.ratio, order=params.order)
    c, sn = np.cos(alpha), np.sin(alpha)
    radial = _rect_rays(c, sn, ta, tb, K.s, K.radial)
    aw = K.anisotropy.func(np.stack([c, sn], axis=1))
    return float(np.dot(w, aw * radial))


def cell_perimeter(K: KernelSpec, h: float = 1.0, params: AngularParams = AngularParams(levels=12, order=12)) -> float:
    """``int_Q int_{R^2 \\ Q} K(x - y)`` for a square cell ``Q`` of side ``h``."""
    special = np.arange(8) * (np.pi / 4)
    alpha, w = angular_rule(special, period=TWO_PI, levels=params.levels, ratio=params.ratio, order=params.order)
    c, sn = np.abs(np.cos(alpha)), np.abs(np.sin(alpha))
    rexit = h / np.maximum(c, sn)
    zero = np.zeros_like(c)
    inner = _poly_radial(zero, rexit, zero, h * (c + sn), -c * sn, K.s, K.radial)
    tail = _poly_radial(rexit, np.full_like(c, np.inf), np.full_like(c, h * h), zero, zero, K.s, K.radial)
    aw = K.anisotropy.func(np.stack([np.cos(alpha), np.sin(alpha)], axis=1))
    return float(np.dot(w, aw * (inner + tail)))


# -- cell-pair tables ----------------------------------------------------------

def _far_offsets_table(K: KernelSpec, h: float, offs: np.ndarray, order: int = 16, chunk: int = 512) -> np.ndarray:
    """Pair integrals of two cells at integer offsets with Chebyshev distance >= 2."""
    out = np.empty(len(offs))
    gx, gw = np.polynomial.legendre.leggauss(order)
    axes = np.array([0.0, 0.5, 1.0, 1.5, -0.5, -1.0, -1.5]) * np.pi
    for start in range(0, len(offs), chunk):
        o = offs[start:start + chunk].astype(float)
        n = len(o)
        center = np.arctan2(o[:, 1], o[:, 0])
        vx = (o[:, 0:1] + np.array([-1.0, 0.0, 1.0])[None, :]) * h
        vy = (o[:, 1:2] + np.array([-1.0, 0.0, 1.0])[None, :]) * h
        ang = np.arctan2(vy[:, :, None], vx[:, None, :]).reshape(n, 9)
        rel = np.mod(ang - center[:, None] + np.pi, TWO_PI) - np.pi
        lo_r, hi_r = rel.min(axis=1), rel.max(axis=1)
        arel = np.mod(axes[None, :] - center[:, None] + np.pi, TWO_PI) - np.pi
        arel = np.where((arel > lo_r[:, None]) & (arel < hi_r[:, None]), arel, lo_r[:, None])
        brk = np.sort(np.concatenate([rel, arel], axis=1), axis=1)
        a, b = brk[:, :-1], brk[:, 1:]
        half = 0.5 * (b - a)
        nodes = (0.5 * (a + b))[:, :, None] + half[:, :, None] * gx
        weights = half[:, :, None] * gw
        phi = (nodes + center[:, None, None]).reshape(n, -1)
        wts = weights.reshape(n, -1)
        c, sn = np.cos(phi), np.sin(phi)
        A = (0.0, h, 0.0, h)
        B = tuple(v[:, None] for v in (o[:, 0] * h, (o[:, 0] + 1) * h, o[:, 1] * h, (o[:, 1] + 1) * h))
        rad = _rect_rays(c, sn, A, B, K.s, K.radial)
        aw = K.anisotropy.func(np.stack([c, sn], axis=-1))
        out[start:start + n] = (wts * aw * rad).sum(axis=1)
    return out


def _symmetries(K: KernelSpec) -> dict:
    """Reflection symmetries of the anisotropy, detected on a direction grid."""
    t = np.linspace(0.0, TWO_PI, 721)[:-1] + 0.0123
    d = np.stack([np.cos(t), np.sin(t)], axis=1)
    a = K.anisotropy.func(d)
    scale = np.max(np.abs(a))

    def same(e):
        return np.max(np.abs(K.anisotropy.func(e) - a)) <= 1e-12 * scale

    return {"flip_x": same(d * [-1.0, 1.0]), "flip_y": same(d * [1.0, -1.0]), "swap": same(d[:, ::-1])}


@lru_cache(maxsize=32)
def _unit_table(K: KernelSpec, nx: int, ny: int, h: float) -> np.ndarray:
    P = np.zeros((2 * ny - 1, 2 * nx - 1))
    dy, dx = np.mgrid[-(ny - 1):ny, -(nx - 1):nx]
    half = (dy > 0) | ((dy == 0) & (dx > 0))
    cheb = np.maximum(np.abs(dx), np.abs(dy))
    far = half & (cheb >= 2)
    offs = np.stack([dx[far], dy[far]], axis=1)
    P[far] = _far_offsets_table(K, h, offs)
    for jy, ix in zip(*np.nonzero(half & (cheb == 1))):
        o = (dx[jy, ix], dy[jy, ix])
        P[jy, ix] = rect_interaction(K, Box((0.0, 0.0), (h, h)),
                                     Box((o[0] * h, o[1] * h), ((o[0] + 1) * h, (o[1] + 1) * h)))
    # the pair integral is even in the offset
    P = np.where(half, P, P[::-1, ::-1])
    sym = _symmetries(K)
    if sym["flip_x"]:
        P = 0.5 * (P + P[:, ::-1])
    if sym["flip_y"]:
        P = 0.5 * (P + P[::-1, :])
    if sym["swap"] and nx == ny:
        P = 0.5 * (P + P.T)
    P[ny - 1, nx - 1] = 0.0
    P.flags.writeable = False
    return P


@dataclass(frozen=True, eq=False)
class CellTable:
    """Pair integrals ``P(o)`` between grid cells at integer offset ``o``.

    ``values[dy + ny - 1, dx + nx - 1]`` holds ``P((dx, dy))`` with
    ``P(0) = 0``; ``perimeter`` is the interaction of one cell with the rest
    of the plane.
    """

    kernel: KernelSpec
    h: float
    nx: int
    ny: int
    values: np.ndarray
    perimeter: float

    def at(self, dx, dy):
        return self.values[np.asarray(dy) + self.ny - 1, np.asarray(dx) + self.nx - 1]


def cell_pair_table(K: KernelSpec, h: float, nx: int, ny: int) -> CellTable:
    """Cached pair table for an ``nx`` by ``ny`` grid of cells of side ``h``.

    Homogeneous kernels are tabulated once at unit spacing and rescaled by
    ``h**(2 - s)``.
    """
    if K.dim != 2:
        raise DomainError("grid tables are planar")
    if K.homogeneous:
        base = _unit_table(K, nx, ny, 1.0)
        scale = h ** (2.0 - K.s)
        vals = base if scale == 1.0 else base * scale
        per = _unit_perimeter(K) * scale
    else:
        vals = _unit_table(K, nx, ny, float(h))
        per = cell_perimeter(K, h)
    return CellTable(K, h, nx, ny, vals, per)


@lru_cache(maxsize=32)
def _unit_perimeter(K: KernelSpec) -> float:
    return cell_perimeter(K, 1.0)


def _cells(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    jj, ii = np.nonzero(mask)
    return ii, jj


def grid_pair_sum(table: CellTable, mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """``sum_{c in A, d in B} P(c - d)`` with exactly rounded summation."""
    ia, ja = _cells(mask_a)
    ib, jb = _cells(mask_b)
    if len(ia) == 0 or len(ib) == 0:
        return 0.0
    vals = table.at(ia[:, None] - ib[None, :], ja[:, None] - jb[None, :])
    return math.fsum(vals.ravel())


def _same_grid(a: GridMask, b: GridMask) -> bool:
    return a.shape == b.shape and a.h == b.h and tuple(a.origin) == tuple(b.origin)


# -- generic volume rules ------------------------------------------------------

def _volume_rule(region: Region, levels: int, order: int):
    """Outer quadrature points and weights for a bounded region."""
    lo, hi = region.bbox()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise DomainError("outer integration region must be bounded")
    if isinstance(region, Ball) and region.dim == 2:
        r, wr = graded_rule([0.0, region.radius], levels=levels, ratio=0.2, order=order)
        # the integrand is smooth and periodic in the angle: plain panels suffice
        t, wt = gauss_legendre(np.linspace(0, TWO_PI, 13)[:-1], np.linspace(0, TWO_PI, 13)[1:], order)
        t, wt = t.ravel(), wt.ravel()
        rr, tt = np.meshgrid(r, t, indexing="ij")
        pts = np.stack([region.center[0] + rr * np.cos(tt), region.center[1] + rr * np.sin(tt)], -1)
        return pts.reshape(-1, 2), (np.outer(wr * r, wt)).ravel()
    axes = [graded_rule([lo[i], hi[i]], levels=levels, ratio=0.2, order=order) for i in range(region.dim)]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrid = np.ones_like(grids[0])
    for i, a in enumerate(axes):
        shape = [1] * region.dim
        shape[i] = -1
        wgrid = wgrid * a[1].reshape(shape)
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = wgrid.ravel()
    inside = region.contains(pts)
    return pts[inside], wts[inside]


@dataclass(frozen=True)
class InteractionReport:
    value: float
    error_estimate: float
    tail_bound: float
    method: str


def _weight_fn(K: KernelSpec):
    return lambda d, _a=K.anisotropy: _a.func(d)


def _field_at(K: KernelSpec, x: np.ndarray, B: Region, q: QuadratureParams, sphere=None) -> float:
    term = FieldTerm(B, 1.0, _weight_fn(K), K.anisotropy.nodes)
    if K.dim == 2:
        return planar_field(x, [term], K.s, delta=q.delta, radial=K.radial, params=q.angular)
    dirs, wts = sphere
    return spatial_field(x, [term], K.s, dirs, wts, radial=K.radial)


def interaction_integral(K: KernelSpec, A: Region, B: Region, q: QuadratureParams = QuadratureParams(),
                         *, report: bool = False):
    """``I_K(A, B) = int_A int_B K(x - y) dy dx`` for essentially disjoint ``A`` and ``B``."""
    res = _interaction(K, A, B, q)
    return res if report else res.value


def _interaction(K, A, B, q) -> InteractionReport:
    if A.dim != K.dim or B.dim != K.dim:
        raise DomainError("region and kernel dimensions differ")
    # grid masks
    if isinstance(A, GridMask) and isinstance(B, GridMask):
        if not _same_grid(A, B):
            raise DomainError("grid masks must share the same grid")
        if np.any(A.mask & B.mask):
            raise OverlapError("grid masks overlap")
        table = cell_pair_table(K, A.h, A.shape[1], A.shape[0])
        return InteractionReport(grid_pair_sum(table, A.mask, B.mask), 0.0, 0.0, "grid")
    if isinstance(B, GridMask) and isinstance(A, Complement):
        A, B = B, A
    if isinstance(A, GridMask) and isinstance(B, Complement) and isinstance(B.inner, GridMask):
        M = B.inner
        if not _same_grid(A, M):
            raise DomainError("grid masks must share the same grid")
        if np.any(A.mask & ~M.mask):
            raise OverlapError("the first mask meets the complement")
        table = cell_pair_table(K, A.h, A.shape[1], A.shape[0])
        per = table.perimeter * A.cell_count
        inner = grid_pair_sum(table, A.mask, M.mask)
        return InteractionReport(math.fsum([per, -inner]), 0.0, 0.0, "grid-complement")
    # planar rectangles
    if K.dim == 2 and isinstance(A, Box) and isinstance(B, Box):
        if not A.bounded and B.bounded:
            A, B = B, A
        return InteractionReport(rect_interaction(K, A, B), 0.0, 0.0, "rectangles")
    if not A.bounded:
        if not B.bounded:
            raise DomainError("at least one region must be bounded")
        A, B = B, A
    values = []
    sphere = sphere_rule(*q.sphere) if K.dim == 3 else None
    for levels in (q.outer_levels, q.outer_levels + 2):
        pts, wts = _volume_rule(A, levels, q.outer_order)
        if np.any(B.contains(pts)):
            raise OverlapError("regions overlap on a set of positive measure")
        f = np.array([_field_at(K, x, B, q, sphere) for x in pts])
        values.append(float(np.dot(wts, f)))
    err = abs(values[1] - values[0])
    if err > q.tol * max(abs(values[1]), 1e-300):
        raise AccuracyError(f"near-singular configuration, tolerance not met (relative change {err / abs(values[1]):.3g})")
    return InteractionReport(values[1], err, 0.0, "outer-volume")


# -- slab calibration ------------------------------------------------------------

# the 3D slab rules resolve a cylinder touching the other region along a face
SLAB_PARAMS = QuadratureParams(outer_levels=8, outer_order=6)

def c_star(n: int, s: float) -> float:
    """The slab constant in the closed form ``2 pi^((2n-1)/2) G((1+s)/2) / (s (1-s) G(n/2) G((n+s)/2))``."""
    _check_ns(n, s)
    return float(np.exp(math.log(2.0) + 0.5 * (2 * n - 1) * math.log(math.pi) + gammaln((1 + s) / 2)
                        - gammaln(n / 2) - gammaln((n + s) / 2)) / (s * (1 - s)))


def c_star_exact(n: int, s: float) -> float:
    """Slab constant with the (n-1)-ball volume as the cross-section factor.

    ``pi^(n-1) G((1+s)/2) / (s (1-s) G((n+1)/2) G((n+s)/2))``; this is the
    value the slab integral actually takes.
    """
    _check_ns(n, s)
    return float(np.exp((n - 1) * math.log(math.pi) + gammaln((1 + s) / 2)
                        - gammaln((n + 1) / 2) - gammaln((n + s) / 2)) / (s * (1 - s)))


def _check_ns(n, s):
    if n < 2:
        raise DomainError("n must be at least 2")
    if not 0 < s < 1:
        raise DomainError("s must lie in (0, 1)")


def _axisymmetric_outer(r: float, t: float, levels: int, order: int):
    """Nodes ``(rho', x_n)`` and weights for a cylinder of radius r and height t in 3D."""
    rr, wr = graded_rule([0.0, r], levels=levels, ratio=0.2, order=order)
    zz, wz = graded_rule([0.0, t], levels=levels, ratio=0.2, order=order)
    R, Z = np.meshgrid(rr, zz, indexing="ij")
    W = np.outer(TWO_PI * rr * wr, wz)
    return R.ravel(), Z.ravel(), W.ravel()


def _slab_3d(B: Region, s: float, r: float, t: float, q: QuadratureParams) -> float:
    K = KernelSpec.isotropic(s, dim=3)
    sphere = sphere_rule(*q.sphere, polar_breaks=(0.0,))
    R, Z, W = _axisymmetric_outer(r, t, q.outer_levels, q.outer_order)
    f = np.array([_field_at(K, np.array([rho, 0.0, z]), B, q, sphere) for rho, z in zip(R, Z)])
    return float(np.dot(W, f))


def slab_halfspace_interaction(n: int, s: float, r: float, t: float,
                               q: QuadratureParams = SLAB_PARAMS) -> tuple[float, float]:
    """Interaction of the cylinder ``{|x'| < r, 0 < x_n < t}`` with ``{y_n < 0}``.

    Returns ``(numeric, closed_form)`` where the closed form is
    ``c_star(n, s) r^(n-1) t^(1-s)``.
    """
    if n not in (2, 3):
        raise DomainError("slab integrals are implemented for n = 2 and n = 3")
    if not (r > 0 and t > 0):
        raise DomainError("r and t must be positive")
    closed = c_star(n, s) * r ** (n - 1) * t ** (1 - s)
    if n == 2:
        K = KernelSpec.isotropic(s)
        num = rect_interaction(K, Box((-r, 0.0), (r, t)), Box((-np.inf, -np.inf), (np.inf, 0.0)))
    else:
        num = _slab_3d(HalfSpace((0.0, 0.0, -1.0), 0.0), s, r, t, q)
    return num, closed


def slab_annulus_interaction(n: int, s: float, r: float, t: float,
                             q: QuadratureParams = SLAB_PARAMS) -> float:
    """Interaction of the cylinder ``D`` with the coaxial shell ``{|y'| > r, 0 < y_n < t}``."""
    if n not in (2, 3):
        raise DomainError("slab integrals are implemented for n = 2 and n = 3")
    if not (r > 0 and t > 0):
        raise DomainError("r and t must be positive")
    if n == 2:
        K = KernelSpec.isotropic(s)
        D = Box((-r, 0.0), (r, t))
        right = rect_interaction(K, D, Box((r, 0.0), (np.inf, t)))
        left = rect_interaction(K, D, Box((-np.inf, 0.0), (-r, t)))
        return right + left
    shell = Intersection((Box((-np.inf, -np.inf, 0.0), (np.inf, np.inf, t)),
                          Complement(Cylinder(r, -np.inf, np.inf))))
    return _slab_3d(shell, s, r, t, q)


def slab_annulus_bound(n: int, s: float, r: float, t: float, q: QuadratureParams = SLAB_PARAMS,
                       calibration: Optional[float] = None) -> tuple[float, float]:
    """``(numeric, C t r^(n-1-s))`` with ``C`` fitted once at ``r = t = 1``
    unless a ``calibration`` constant is supplied."""
    num = slab_annulus_interaction(n, s, r, t, q)
    if calibration is None:
        calibration = slab_annulus_interaction(n, s, 1.0, 1.0, q)
    return num, calibration * t * r ** (n - 1 - s)


# -- curvature and the Euler-Lagrange residual -------------------------------------

def _check_boundary_point(E: Region, x: np.ndarray, eps: float = 1e-7) -> None:
    t = np.linspace(0.0, TWO_PI, 64, endpoint=False) + 0.01
    ring = x[None, :] + eps * np.stack([np.cos(t), np.sin(t)], axis=1)
    inside = E.contains(ring)
    if inside.all() or (~inside).all():
        raise DomainError("x is not on the boundary of E")


def k_mean_curvature(K: KernelSpec, E: Region, x, q: QuadratureParams = QuadratureParams()) -> float:
    """``p.v. int K(x - y) (chi_{E^c}(y) - chi_E(y)) dy`` at a boundary point ``x`` of ``E``."""
    if not K.homogeneous:
        raise DomainError("curvature needs a homogeneous kernel")
    if K.dim != 2:
        raise DomainError("curvature is implemented in the plane")
    x = np.asarray(x, dtype=float)
    _check_boundary_point(E, x)
    w = _weight_fn(K)
    terms = [FieldTerm(Complement(E), 1.0, w, K.anisotropy.nodes), FieldTerm(E, -1.0, w, K.anisotropy.nodes)]
    return planar_field(x, terms, K.s, delta=q.delta, params=q.angular)


def exterior_field(K: KernelSpec, omega: Optional[Region], x, q: QuadratureParams = QuadratureParams()) -> float:
    """``int_{Omega^c} K(x - y) dy`` for ``x`` inside ``Omega`` (0 when Omega is the whole plane)."""
    if omega is None:
        return 0.0
    x = np.asarray(x, dtype=float)
    if not omega.contains(x[None, :])[0]:
        raise DomainError("x must lie inside Omega")
    return planar_field(x, [FieldTerm(Complement(omega), 1.0, _weight_fn(K), K.anisotropy.nodes)], K.s,
                        delta=q.delta, radial=K.radial, params=q.angular)


def el_residual(K1: KernelSpec, K2: KernelSpec, sigma: float, g: Union[float, Callable], omega: Optional[Region],
                E: Region, x, q: QuadratureParams = QuadratureParams()) -> float:
    """Left-hand side of the pointwise Euler-Lagrange equation at ``x``:
    ``H_E(x) - int_{Omega^c} K1 + sigma int_{Omega^c} K2 + g(x)``."""
    x = np.asarray(x, dtype=float)
    h = k_mean_curvature(K1, E, x, q)
    f1 = exterior_field(K1, omega, x, q)
    f2 = exterior_field(K2, omega, x, q) if sigma != 0 else 0.0
    gx = float(g(x)) if callable(g) else float(g)
    return h - f1 + sigma * f2 + gx


def regular_boundary_points(E: GridMask, omega: Optional[GridMask] = None, margin: int = 2) -> np.ndarray:
    """Midpoints of cell edges on the boundary of ``E`` that look regular.

    An edge qualifies when the ``(2 margin + 2)``-cell window across it is a
    single straight step (each line across the edge reads ``1..10..0`` or
    ``0..01..1``) and, if ``omega`` is given, every cell of the window lies in
    Omega. This is a discrete stand-in for boundary points where the set is
    locally a smooth graph away from the container wall.
    """
    mask = E.mask
    inside = np.ones_like(mask) if omega is None else omega.mask
    H, W = mask.shape
    k = margin
    pts = []
    for axis in (0, 1):
        m = mask if axis == 1 else mask.T
        om = inside if axis == 1 else inside.T
        rows, cols = m.shape
        for j in range(k, rows - k):
            for i in range(k - 1, cols - k - 1):
                if m[j, i] == m[j, i + 1]:
                    continue
                win = m[j - k:j + k + 1, i - k + 1:i + k + 1]
                if not om[j - k:j + k + 1, i - k + 1:i + k + 1].all():
                    continue
                left, right = win[:, :k], win[:, k:]
                if not ((left.all() and not right.any()) or (right.all() and not left.any())):
                    continue
                x, y = (i + 1) * E.h, (j + 0.5) * E.h
                pts.append((x, y) if axis == 1 else (y, x))
    out = np.array(pts, dtype=float).reshape(-1, 2)
    return out + np.asarray(E.origin, dtype=float)
