"""Quadrature building blocks shared by the geometry and solver modules.

Everything here is deterministic and vectorised with numpy. Rules are
returned as ``(nodes, weights)`` pairs.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=64)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=64)
def _gauss_jacobi(order: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    # weight (1 + x)**beta on [-1, 1]
    x, w = roots_jacobi(order, 0.0, beta)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(a, b, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on ``[a, b]`` (``a``, ``b`` may be arrays of panels).

    With array endpoints the result has shape ``(len(a), order)``.
    """
    x, w = _gauss_legendre(order)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[..., None] + half[..., None] * x
    weights = half[..., None] * w
    return nodes, weights


def jacobi_left(a: float, b: float, beta: float, order: int = 8):
    """Rule for ``int_a^b f(x) (x - a)**beta dx``; returns nodes and weights
    that already include the weight function (so ``sum(w * f(x))``)."""
    x, w = _gauss_jacobi(order, beta)
    half = 0.5 * (b - a)
    nodes = a + half * (1.0 + x)
    weights = w * half ** (1.0 + beta)
    return nodes, weights


def jacobi_right(a: float, b: float, beta: float, order: int = 8):
    """Rule for ``int_a^b f(x) (b - x)**beta dx`` (weight included)."""
    x, w = _gauss_jacobi(order, beta)
    half = 0.5 * (b - a)
    nodes = b - half * (1.0 + x)
    weights = w * half ** (1.0 + beta)
    return nodes, weights


def graded_panels(a: float, b: float, levels: int = 20, ratio: float = 0.15) -> np.ndarray:
    """Panel edges on ``[a, b]`` refined geometrically toward both ends.

    Suitable for integrands with algebraic (Hoelder or integrable power)
    singularities at the endpoints.
    """
    if b <= a:
        return np.array([a, b])
    mid = 0.5 * (a + b)
    half = mid - a
    fr = ratio ** np.arange(levels, 0, -1)
    left = a + half * fr
    right = b - half * fr[::-1]
    return np.concatenate([[a], left, [mid], right, [b]])


def graded_rule(breaks, levels: int = 20, ratio: float = 0.15, order: int = 8):
    """Composite Gauss-Legendre rule over consecutive ``breaks``.

    Each interval between two breakpoints gets geometric grading toward
    both of its ends. Degenerate intervals are skipped.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    edges = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            continue
        e = graded_panels(lo, hi, levels, ratio)
        edges.append(np.column_stack([e[:-1], e[1:]]))
    if not edges:
        return np.empty(0), np.empty(0)
    panels = np.concatenate(edges)
    keep = panels[:, 1] > panels[:, 0]
    panels = panels[keep]
    nodes, weights = gauss_legendre(panels[:, 0], panels[:, 1], order)
    return nodes.ravel(), weights.ravel()


def angular_rule(special, period: float = TWO_PI, extra_breaks=None, levels: int = 20,
                 ratio: float = 0.15, order: int = 8):
    """Rule on ``[0, period)`` graded toward the ``special`` angles.

    ``extra_breaks`` are added as plain panel edges without grading (used
    for the kinks of tabulated angular weights).
    """
    special = np.mod(np.asarray(special, dtype=float).ravel(), period)
    brk = np.unique(np.concatenate([[0.0, period], special]))
    nodes, weights = graded_rule(brk, levels, ratio, order)
    if extra_breaks is not None and len(extra_breaks):
        # refine by splitting panels at the extra breaks: rebuild with them
        extra = np.mod(np.asarray(extra_breaks, dtype=float).ravel(), period)
        allb = np.unique(np.concatenate([brk, extra]))
        # grading only next to the special angles
        edges = []
        for lo, hi in zip(allb[:-1], allb[1:]):
            if hi - lo <= 1e-14:
                continue
            near_lo = np.any(np.abs(special - lo) < 1e-13) or lo == 0.0
            near_hi = np.any(np.abs(special - hi) < 1e-13) or hi == period
            if near_lo or near_hi:
                e = graded_panels(lo, hi, levels, ratio)
            else:
                e = np.array([lo, hi])
            edges.append(np.column_stack([e[:-1], e[1:]]))
        panels = np.concatenate(edges)
        panels = panels[panels[:, 1] > panels[:, 0]]
        n, w = gauss_legendre(panels[:, 0], panels[:, 1], order)
        nodes, weights = n.ravel(), w.ravel()
    return nodes, weights


def sphere_rule(n_polar: int = 48, n_azimuth: int = 64, polar_breaks=(0.0,)):
    """Product rule on the unit sphere S^2.

    Gauss-Legendre in ``z = cos(polar angle)`` graded toward ``polar_breaks``
    (values of z) and the trapezoidal rule in azimuth. Returns unit vectors
    of shape (k, 3) and weights (k,) summing to 4*pi.
    """
    brk = np.unique(np.concatenate([[-1.0, 1.0], np.asarray(polar_breaks, dtype=float)]))
    z, wz = graded_rule(brk, levels=10, ratio=0.2, order=max(2, n_polar // 8))
    phi = (np.arange(n_azimuth) + 0.5) * TWO_PI / n_azimuth
    wphi = np.full(n_azimuth, TWO_PI / n_azimuth)
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(np.clip(1.0 - zz**2, 0.0, None))
    dirs = np.stack([r * np.cos(pp), r * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    weights = (wz[:, None] * wphi[None, :]).ravel()
    return dirs, weights


def radial_power_integral(a, b, s: float):
    """``int_a^b rho**(-1-s) d rho`` elementwise; ``b`` may be ``inf``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore"):
        ta = np.where(a > 0, a ** (-s), np.inf)
        tb = np.where(np.isfinite(b), b ** (-s), 0.0)
    return (ta - tb) / s
