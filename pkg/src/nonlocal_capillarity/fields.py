"""Ray integration of kernel fields ``int K(x - y) f(y) dy`` in polar
coordinates centred at ``x``.

Along each ray the set-valued integrand is piecewise constant, so the radial
integral of ``rho**(-1-s)`` is done exactly between boundary crossings. In
the plane, directions are paired with their opposites: inside the ball of
radius ``delta`` only the paired sum is integrated, which realises the
principal value for even kernels. Outside ``delta`` each ray contributes on
its own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .quadrature import angular_rule, gauss_legendre, radial_power_integral
from .regions import Region


@dataclass(frozen=True)
class FieldTerm:
    """``coeff * weight(direction) * indicator(region)``.

    ``weight`` maps unit direction vectors of shape (k, n) to an array (k,);
    it must be even. ``None`` means the constant weight 1.
    """

    region: Region
    coeff: float = 1.0
    weight: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kinks: Optional[Sequence[float]] = None


@dataclass(frozen=True)
class AngularParams:
    levels: int = 12
    ratio: float = 0.15
    order: int = 8


def radial_segment_integral(a: np.ndarray, b: np.ndarray, s: float,
                            radial: Optional[Callable] = None, order: int = 12) -> np.ndarray:
    """``int_a^b m(rho) rho**(-1-s) d rho`` elementwise (``m = 1`` if ``radial`` is None).

    For a radial multiplier the substitution ``t = rho**(-s)`` turns the
    integral into ``(1/s) int m(t**(-1/s)) dt`` over a finite interval, which
    is done by Gauss-Legendre. Segments starting at 0 must not be passed with
    a radial multiplier.
    """
    if radial is None:
        return radial_power_integral(a, b, s)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0):
        raise DomainError("segments touching the origin need the homogeneous form")
    ta = a ** (-s)
    tb = np.where(np.isfinite(b), b ** (-s), 0.0)
    nodes, weights = gauss_legendre(tb, ta, order)
    with np.errstate(divide="ignore", over="ignore"):
        rho = np.where(nodes > 0, nodes ** (-1.0 / s), np.inf)
    m = np.asarray(radial(np.where(np.isfinite(rho), rho, 1e300)), dtype=float)
    return (weights * m).sum(axis=-1) / s


def _segments(breaks: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sorted segment ends ``(lo, hi)`` per ray plus a probe point inside each."""
    k = breaks.shape[0]
    b = np.concatenate([np.zeros((k, 1)), breaks, np.full((k, 1), delta)], axis=1)
    b = np.sort(np.where(np.isfinite(b), b, np.inf), axis=1)
    lo = b
    hi = np.concatenate([b[:, 1:], np.full((k, 1), np.inf)], axis=1)
    with np.errstate(invalid="ignore"):
        probe = np.where(np.isfinite(hi), 0.5 * (lo + hi), np.where(np.isfinite(lo), 2.0 * lo + 1.0, np.nan))
    return lo, hi, probe


def _indicator_sum(x, dirs, probe, terms, wvals):
    """Sum over terms of ``coeff * weight * indicator`` at the probe points."""
    k, m = probe.shape
    safe = np.where(np.isfinite(probe), probe, 0.0)
    pts = x[None, None, :] + safe[:, :, None] * dirs[:, None, :]
    total = np.zeros((k, m))
    for term, w in zip(terms, wvals):
        inside = term.region.contains(pts.reshape(-1, len(x))).reshape(k, m)
        total += term.coeff * w[:, None] * inside
    return np.where(np.isfinite(probe), total, 0.0)


def planar_field(x, terms: Sequence[FieldTerm], s: float, *, delta: Optional[float] = None,
                 radial: Optional[Callable] = None, extra_special=(),
                 params: AngularParams = AngularParams(), return_directional: bool = False):
    """Principal-value field at ``x`` in the plane.

    Returns ``sum_terms coeff * p.v. int_{region} weight(dir(y - x)) m(|y - x|) |y - x|^(-2-s) dy``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (2,):
        raise DomainError("planar_field needs a point in R^2")
    if delta is None:
        delta = 1.0
    special = [np.asarray(extra_special, dtype=float).ravel()]
    kinks = []
    for t in terms:
        special.append(np.asarray(t.region.special_directions(x), dtype=float).ravel())
        if t.kinks is not None:
            kinks.append(np.asarray(t.kinks, dtype=float).ravel())
    special = np.mod(np.concatenate(special), np.pi)
    kinks = np.mod(np.concatenate(kinks), np.pi) if kinks else None
    alpha, walpha = angular_rule(special, period=np.pi, extra_breaks=kinks,
                                 levels=params.levels, ratio=params.ratio, order=params.order)
    dirs = np.stack([np.cos(alpha), np.sin(alpha)], axis=1)
    wvals = [np.ones(len(alpha)) if t.weight is None else np.asarray(t.weight(dirs), dtype=float)
             for t in terms]

    plus = np.concatenate([t.region.ray_breaks(x, dirs) for t in terms], axis=1)
    minus = np.concatenate([t.region.ray_breaks(x, -dirs) for t in terms], axis=1)
    lo, hi, probe = _segments(np.concatenate([plus, minus], axis=1), delta)
    fp = _indicator_sum(x, dirs, probe, terms, wvals)
    fm = _indicator_sum(x, -dirs, probe, terms, wvals)

    valid = hi > lo
    inner = valid & (hi <= delta)
    outer = valid & (lo >= delta)
    paired = np.where(inner, fp + fm, 0.0)
    at_origin = inner & (lo == 0.0)
    if np.any(np.abs(paired[at_origin]) > 1e-13 * (1.0 + np.abs(fp[at_origin]).max(initial=0.0))):
        raise DomainError("principal value does not exist: the point is not a regular boundary point")
    rad = np.zeros_like(lo)
    nz_inner = inner & (paired != 0.0)
    nz_outer = outer & ((fp != 0.0) | (fm != 0.0))
    use = nz_inner | nz_outer
    if np.any(use):
        rad[use] = radial_segment_integral(lo[use], hi[use], s, radial)
    contrib = np.where(nz_inner, paired * rad, 0.0)
    contrib = contrib + np.where(nz_outer, fp * rad, 0.0) + np.where(nz_outer, fm * rad, 0.0)
    directional = contrib.sum(axis=1)
    value = float(np.dot(walpha, directional))
    if return_directional:
        return value, alpha, directional
    return value


def spatial_field(x, terms: Sequence[FieldTerm], s: float, dirs: np.ndarray, weights: np.ndarray,
                  radial: Optional[Callable] = None) -> float:
    """Field at a point off the boundary in any dimension, with a given sphere rule."""
    x = np.asarray(x, dtype=float)
    wvals = [np.ones(len(dirs)) if t.weight is None else np.asarray(t.weight(dirs), dtype=float)
             for t in terms]
    brk = np.concatenate([t.region.ray_breaks(x, dirs) for t in terms], axis=1)
    lo, hi, probe = _segments(brk, np.inf)
    f = _indicator_sum(x, dirs, probe, terms, wvals)
    valid = (hi > lo) & (f != 0.0)
    if np.any(valid & (lo == 0.0)):
        raise DomainError("field point lies on the closure of an integration region")
    rad = np.zeros_like(lo)
    if np.any(valid):
        rad[valid] = radial_segment_integral(lo[valid], hi[valid], s, radial)
    return float(np.dot(weights, (f * rad).sum(axis=1)))
