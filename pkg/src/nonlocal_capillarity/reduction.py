"""Planar projection of an anisotropy and the angular profile built from it."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import AccuracyError, DomainError
from .kernels import AnisotropyFn, format_table, parse_table

QUAD_TOL = 1e-10


def _lift(x: np.ndarray, n: int, ybar: np.ndarray) -> np.ndarray:
    """Points ``x1 e_1 + x2 e_n + (0, ybar, 0)`` for a batch of ``ybar``."""
    pts = np.zeros(ybar.shape[:-1] + (n,))
    pts[..., 0] = x[0]
    pts[..., -1] = x[1]
    pts[..., 1:-1] = ybar
    return pts


def projection_normalizer(n: int, s: float) -> float:
    """Integral of ``(1 + |y|^2)^(-(n+s)/2)`` over R^(n-2)."""
    d = n - 2
    return float(np.exp(0.5 * d * np.log(np.pi) + gammaln((2 + s) / 2) - gammaln((n + s) / 2)))


def project_anisotropy(a: AnisotropyFn, n: int, s: float, x, *, mc_samples: int = 10**6,
                       seed: int = 0, return_error: bool = False):
    """Projected weight of ``a`` at the planar unit vector ``x``.

    For ``n = 2`` this is ``a(x)``. For ``n = 3`` the transverse integral is
    computed by adaptive quadrature after the substitution ``t = tan(u)``.
    For ``n >= 4`` it is a Monte Carlo estimate whose proposal density is
    proportional to the weight ``(1 + |y|^2)^(-(n+s)/2)``, so only ``a`` is
    averaged.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (2,) or abs(np.hypot(x[0], x[1]) - 1.0) > 1e-12:
        raise DomainError("x must be a planar unit vector")
    if a.dim != n:
        raise DomainError(f"anisotropy has dimension {a.dim}, expected {n}")
    if not 0 < s < 1:
        raise DomainError("s must lie in (0, 1)")
    if n == 2:
        val = float(a(x))
        return (val, 0.0) if return_error else val
    if n == 3:
        val, err = _project_3d(a, s, x)
        return (val, err) if return_error else val
    val, err = _project_mc(a, n, s, x[None, :], mc_samples, seed)
    return (float(val[0]), float(err[0])) if return_error else float(val[0])


def _project_3d(a: AnisotropyFn, s: float, x: np.ndarray) -> tuple[float, float]:
    def integrand(u):
        c = np.cos(u)
        return float(a.func(np.array([x[0] * c, np.sin(u), x[1] * c]))) * c ** (1.0 + s)

    val, err = integrate.quad(integrand, -0.5 * np.pi, 0.5 * np.pi, epsabs=QUAD_TOL,
                              epsrel=1e-12, limit=400)
    if not err <= 10 * QUAD_TOL:
        raise AccuracyError(f"transverse integral error estimate {err:.3g} exceeds tolerance")
    return val, err


def _project_mc(a: AnisotropyFn, n: int, s: float, xs: np.ndarray, samples: int, seed: int):
    # ybar = z / sqrt(chi2_{2+s}) has density proportional to (1+|y|^2)^(-(n+s)/2)
    rng = np.random.default_rng(seed)
    d = n - 2
    z = rng.standard_normal((samples, d))
    w = rng.chisquare(2.0 + s, size=samples)
    ybar = z / np.sqrt(w)[:, None]
    norm = projection_normalizer(n, s)
    vals = np.empty(len(xs))
    errs = np.empty(len(xs))
    for i, x in enumerate(xs):
        pts = _lift(x, n, ybar)
        f = a(pts)
        vals[i] = norm * f.mean()
        errs[i] = norm * f.std(ddof=1) / np.sqrt(samples)
    return vals, errs


@dataclass(frozen=True, eq=False)
class PhiProfile:
    """Angular profile ``phi(alpha)`` tabulated on a uniform grid of [0, 2*pi).

    Evaluation uses ``exact`` when available (planar anisotropies given by a
    formula) and periodic linear interpolation of ``values`` otherwise.
    ``kinks`` lists the angles where the evaluated profile may have a
    derivative jump; quadratures place panel edges there.
    """

    s: float
    values: np.ndarray
    exact: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kinks: Optional[tuple] = None
    stochastic: bool = False
    allow_degenerate: bool = False
    label: str = ""
    _grid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        size = len(vals)
        if size < 16 or size % 2:
            raise DomainError("profile grid size must be even and at least 16")
        if not np.all(np.isfinite(vals)):
            raise DomainError("profile values must be finite")
        if self.allow_degenerate:
            if np.any(vals < 0):
                raise DomainError("profile values must be nonnegative")
        elif np.any(vals <= 0):
            raise DomainError("profile values must be positive")
        object.__setattr__(self, "_grid", np.arange(size) * (2 * np.pi / size))
        if self.kinks is None and self.exact is None:
            object.__setattr__(self, "kinks", tuple(self._grid))

    @property
    def grid(self) -> np.ndarray:
        return self._grid

    @property
    def size(self) -> int:
        return len(self.values)

    def interpolate(self, alpha) -> np.ndarray:
        alpha = np.mod(np.asarray(alpha, dtype=float), 2 * np.pi)
        step = 2 * np.pi / self.size
        pos = alpha / step
        k = np.floor(pos).astype(np.int64)
        frac = pos - k
        k %= self.size
        k1 = (k + 1) % self.size
        return (1.0 - frac) * self.values[k] + frac * self.values[k1]

    def __call__(self, alpha) -> np.ndarray:
        if self.exact is not None:
            return np.asarray(self.exact(np.asarray(alpha, dtype=float)), dtype=float)
        return self.interpolate(alpha)

    def symmetry_defect(self) -> float:
        half = self.size // 2
        return float(np.max(np.abs(self.values - np.roll(self.values, half))))

    def to_table(self) -> str:
        return format_table(self.grid, self.values, header=f"angle_radians value  s={self.s!r}")

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_table())

    @classmethod
    def from_values(cls, s: float, values, **kw) -> "PhiProfile":
        values = np.asarray(values, dtype=float)
        half = len(values) // 2
        sym = 0.5 * (values + np.roll(values, half))
        return cls(s, sym, **kw)

    @classmethod
    def from_table(cls, source: Union[str, Path], s: Optional[float] = None, **kw) -> "PhiProfile":
        """Read a profile written by :meth:`to_table` (or any uniform-grid table)."""
        p = Path(source)
        text = p.read_text() if ("\n" not in str(source) and p.exists()) else str(source)
        if s is None:
            for line in text.splitlines():
                if line.startswith("#") and "s=" in line:
                    s = float(line.split("s=", 1)[1].split()[0])
                    break
            else:
                raise DomainError("profile table has no 's=' header; pass s explicitly")
        angles, values = parse_table(text)
        size = len(values)
        expected = np.arange(size) * (2 * np.pi / size)
        if not np.allclose(angles, expected, atol=1e-12):
            raise DomainError("profile tables must use a uniform grid starting at 0")
        return cls.from_values(s, values, **kw)

    @classmethod
    def constant(cls, s: float, value: float = 1.0, grid_size: int = 1024) -> "PhiProfile":
        v = float(value)
        return cls(s, np.full(grid_size, v), exact=lambda t, _v=v: np.full(np.shape(t), _v),
                   label=f"const({v:g})")


def build_phi(a: AnisotropyFn, n: int, s: float, grid_size: int = 1024, *,
              mc_samples: int = 2**15, seed: int = 0) -> PhiProfile:
    """Tabulate ``phi(alpha) = a_star(cos alpha, sin alpha)`` and enforce ``phi(alpha) = phi(alpha + pi)``."""
    if grid_size < 16 or grid_size % 2:
        raise DomainError("grid_size must be even and at least 16")
    if a.dim != n:
        raise DomainError(f"anisotropy has dimension {a.dim}, expected {n}")
    grid = np.arange(grid_size) * (2 * np.pi / grid_size)
    half = grid_size // 2
    if n == 2:
        raw = a.at_angle(grid)
        vals = 0.5 * (raw + np.roll(raw, half))
        kinks = a.nodes if a.tabulated else None
        return PhiProfile(s, vals, exact=a.at_angle, kinks=kinks, label=a.label)
    if n == 3:
        vals = np.array([_project_3d(a, s, np.array([np.cos(t), np.sin(t)]))[0] for t in grid])
        vals = 0.5 * (vals + np.roll(vals, half))
        return PhiProfile(s, vals, label=a.label)
    xs = np.stack([np.cos(grid), np.sin(grid)], axis=-1)
    vals, _ = _project_mc(a, n, s, xs, mc_samples, seed)
    vals = 0.5 * (vals + np.roll(vals, half))
    return PhiProfile(s, vals, stochastic=True, label=a.label)
