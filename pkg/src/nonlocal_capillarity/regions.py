"""Subsets of R^n used as integration domains.

Every region answers three questions used by the ray integrators:

* ``contains(points)``: membership, vectorised over a trailing coordinate axis;
* ``ray_breaks(x, dirs)``: candidate distances ``rho > 0`` where the ray
  ``x + rho * dir`` may cross the boundary (extra candidates are harmless);
* ``special_directions(x)``: planar angles near which the radial integral,
  seen as a function of the direction, stops being smooth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi


def _positive(rho: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(rho) & (rho > 0), rho, np.inf)


def _planar(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and last coordinates, the plane in which wedges live."""
    return v[..., 0], v[..., -1]


class Region:
    dim: int = 2

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def ray_breaks(self, x: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def special_directions(self, x: np.ndarray) -> np.ndarray:
        return np.empty(0)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    @property
    def bounded(self) -> bool:
        lo, hi = self.bbox()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def __invert__(self) -> "Region":
        return Complement(self)

    def __and__(self, other: "Region") -> "Region":
        return Intersection((self, other))

    def __or__(self, other: "Region") -> "Region":
        return RegionUnion((self, other))


@dataclass(frozen=True, eq=False)
class HalfSpace(Region):
    """Open half-space ``{y : normal . y > offset}``."""

    normal: tuple
    offset: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.normal)

    def contains(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ np.asarray(self.normal, dtype=float) > self.offset

    def ray_breaks(self, x, dirs) -> np.ndarray:
        nrm = np.asarray(self.normal, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = (self.offset - x @ nrm) / (dirs @ nrm)
        return _positive(rho)[:, None]

    def special_directions(self, x) -> np.ndarray:
        if self.dim != 2:
            return np.empty(0)
        t = np.arctan2(self.normal[1], self.normal[0]) + 0.5 * np.pi
        return np.array([t, t + np.pi])

    def bbox(self):
        lo, hi = np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        nrm = np.asarray(self.normal, dtype=float)
        nz = np.flatnonzero(nrm)
        if len(nz) == 1:
            i = nz[0]
            if nrm[i] > 0:
                lo[i] = self.offset / nrm[i]
            else:
                hi[i] = self.offset / nrm[i]
        return lo, hi


@dataclass(frozen=True, eq=False)
class Wedge(Region):
    """Open cone of points whose ``(x_1, x_n)`` polar angle lies in ``(t1, t2)``.

    Angles are taken modulo 2*pi, so ``t2`` may exceed 2*pi as long as the
    opening ``t2 - t1`` is at most 2*pi.
    """

    t1: float
    t2: float
    dim: int = 2

    def __post_init__(self):
        width = self.t2 - self.t1
        if not (0.0 < width <= TWO_PI + 1e-15):
            raise DomainError("wedge opening must lie in (0, 2*pi]")

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        a, b = _planar(pts)
        ang = np.mod(np.arctan2(b, a) - self.t1, TWO_PI)
        inside = (ang > 0.0) & (ang < self.t2 - self.t1)
        return inside & ((a != 0.0) | (b != 0.0))

    def _line_breaks(self, x, dirs, t):
        ux, uy = np.cos(t), np.sin(t)
        xa, xb = _planar(x)
        da, db = _planar(dirs)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = -(xa * uy - xb * ux) / (da * uy - db * ux)
        return _positive(rho)

    def ray_breaks(self, x, dirs) -> np.ndarray:
        return np.stack([self._line_breaks(x, dirs, self.t1), self._line_breaks(x, dirs, self.t2)], axis=1)

    def special_directions(self, x) -> np.ndarray:
        if self.dim != 2:
            return np.empty(0)
        out = [self.t1, self.t1 + np.pi, self.t2, self.t2 + np.pi]
        if np.hypot(x[0], x[1]) > 0:
            out.append(np.arctan2(-x[1], -x[0]))
        return np.array(out)


@dataclass(frozen=True, eq=False)
class Ball(Region):
    center: tuple
    radius: float

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, pts) -> np.ndarray:
        d = np.asarray(pts, dtype=float) - np.asarray(self.center, dtype=float)
        return np.einsum("...i,...i->...", d, d) < self.radius**2

    def ray_breaks(self, x, dirs) -> np.ndarray:
        d = x - np.asarray(self.center, dtype=float)
        b = dirs @ d
        c = d @ d - self.radius**2
        disc = b * b - c
        with np.errstate(invalid="ignore"):
            sq = np.sqrt(np.where(disc > 0, disc, np.nan))
        r1, r2 = -b - sq, -b + sq
        return np.stack([_positive(r1), _positive(r2)], axis=1)

    def special_directions(self, x) -> np.ndarray:
        if self.dim != 2:
            return np.empty(0)
        d = np.asarray(self.center, dtype=float) - x
        dist = np.hypot(d[0], d[1])
        if dist < self.radius * (1 - 1e-12):
            return np.empty(0)
        base = np.arctan2(d[1], d[0])
        half = np.arcsin(min(1.0, self.radius / dist))
        return np.array([base - half, base + half, base, base + np.pi])

    def bbox(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius


@dataclass(frozen=True, eq=False)
class Box(Region):
    """Open axis-aligned box; bounds may be infinite."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise DomainError("box needs lo < hi in every coordinate")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.all((pts > np.asarray(self.lo)) & (pts < np.asarray(self.hi)), axis=-1)

    def ray_breaks(self, x, dirs) -> np.ndarray:
        cols = []
        with np.errstate(divide="ignore", invalid="ignore"):
            for i in range(self.dim):
                for bound in (self.lo[i], self.hi[i]):
                    if np.isfinite(bound):
                        cols.append(_positive((bound - x[i]) / dirs[:, i]))
        if not cols:
            return np.full((len(dirs), 1), np.inf)
        return np.stack(cols, axis=1)

    def special_directions(self, x) -> np.ndarray:
        if self.dim != 2:
            return np.empty(0)
        out = [0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi]
        for cx in (self.lo[0], self.hi[0]):
            for cy in (self.lo[1], self.hi[1]):
                if np.isfinite(cx) and np.isfinite(cy):
                    v = (cx - x[0], cy - x[1])
                    if v != (0.0, 0.0):
                        out.append(np.arctan2(v[1], v[0]))
        return np.array(out)

    def bbox(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def volume(self) -> float:
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))


@dataclass(frozen=True, eq=False)
class Cylinder(Region):
    """``{|x'| < radius, z0 < x_n < z1}`` with axis along the last coordinate.

    In two dimensions this is the rectangle ``(-radius, radius) x (z0, z1)``.
    """

    radius: float
    z0: float
    z1: float
    dim: int = 3

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        xp = pts[..., :-1]
        r2 = np.einsum("...i,...i->...", xp, xp)
        z = pts[..., -1]
        return (r2 < self.radius**2) & (z > self.z0) & (z < self.z1)

    def ray_breaks(self, x, dirs) -> np.ndarray:
        xp, dp = x[:-1], dirs[:, :-1]
        a = np.einsum("ki,ki->k", dp, dp)
        b = dp @ xp
        c = xp @ xp - self.radius**2
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = b * b - a * c
            sq = np.sqrt(np.where(disc > 0, disc, np.nan))
            r1 = (-b - sq) / a
            r2 = (-b + sq) / a
            p0 = (self.z0 - x[-1]) / dirs[:, -1]
            p1 = (self.z1 - x[-1]) / dirs[:, -1]
        return np.stack([_positive(r) for r in (r1, r2, p0, p1)], axis=1)

    def special_directions(self, x) -> np.ndarray:
        if self.dim != 2:
            return np.empty(0)
        return Box((-self.radius, self.z0), (self.radius, self.z1)).special_directions(x)

    def bbox(self):
        lo = np.full(self.dim, -self.radius)
        hi = np.full(self.dim, self.radius)
        lo[-1], hi[-1] = self.z0, self.z1
        return lo, hi


@dataclass(frozen=True, eq=False)
class Complement(Region):
    inner: Region

    @property
    def dim(self) -> int:
        return self.inner.dim

    def contains(self, pts) -> np.ndarray:
        return ~self.inner.contains(pts)

    def ray_breaks(self, x, dirs) -> np.ndarray:
        return self.inner.ray_breaks(x, dirs)

    def special_directions(self, x) -> np.ndarray:
        return self.inner.special_directions(x)


@dataclass(frozen=True, eq=False)
class Intersection(Region):
    parts: tuple

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def contains(self, pts) -> np.ndarray:
        out = self.parts[0].contains(pts)
        for p in self.parts[1:]:
            out = out & p.contains(pts)
        return out

    def ray_breaks(self, x, dirs) -> np.ndarray:
        return np.concatenate([p.ray_breaks(x, dirs) for p in self.parts], axis=1)

    def special_directions(self, x) -> np.ndarray:
        return np.concatenate([p.special_directions(x) for p in self.parts])

    def bbox(self):
        boxes = [p.bbox() for p in self.parts]
        lo = np.max([b[0] for b in boxes], axis=0)
        hi = np.min([b[1] for b in boxes], axis=0)
        return lo, hi


@dataclass(frozen=True, eq=False)
class RegionUnion(Region):
    parts: tuple

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def contains(self, pts) -> np.ndarray:
        out = self.parts[0].contains(pts)
        for p in self.parts[1:]:
            out = out | p.contains(pts)
        return out

    def ray_breaks(self, x, dirs) -> np.ndarray:
        return np.concatenate([p.ray_breaks(x, dirs) for p in self.parts], axis=1)

    def special_directions(self, x) -> np.ndarray:
        return np.concatenate([p.special_directions(x) for p in self.parts])

    def bbox(self):
        boxes = [p.bbox() for p in self.parts]
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
        return lo, hi




@dataclass(frozen=True, eq=False)
class GridMask(Region):
    """Union of the grid cells where ``mask`` is true.

    ``mask[j, i]`` is the cell ``[x0 + i h, x0 + (i+1) h] x [y0 + j h, y0 + (j+1) h]``;
    row 0 is the bottom row.
    """

    mask: np.ndarray
    h: float = 1.0
    origin: tuple = (0.0, 0.0)
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool).copy()
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    @property
    def shape(self) -> tuple:
        return self.mask.shape

    def cell_of(self, pts) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(pts, dtype=float)
        i = np.floor((pts[..., 0] - self.origin[0]) / self.h).astype(np.int64)
        j = np.floor((pts[..., 1] - self.origin[1]) / self.h).astype(np.int64)
        return i, j

    def contains(self, pts) -> np.ndarray:
        i, j = self.cell_of(pts)
        ny, nx = self.mask.shape
        ok = (i >= 0) & (i < nx) & (j >= 0) & (j < ny)
        out = np.zeros(np.shape(i), dtype=bool)
        out[ok] = self.mask[j[ok], i[ok]]
        return out

    def ray_breaks(self, x, dirs) -> np.ndarray:
        ny, nx = self.mask.shape
        xs = self.origin[0] + self.h * np.arange(nx + 1)
        ys = self.origin[1] + self.h * np.arange(ny + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            bx = (xs[None, :] - x[0]) / dirs[:, :1]
            by = (ys[None, :] - x[1]) / dirs[:, 1:2]
        return _positive(np.concatenate([bx, by], axis=1))

    def boundary_vertices(self) -> np.ndarray:
        """Grid vertices where the boundary of the mask turns a corner."""
        m = np.pad(self.mask, 1).astype(np.int8)
        # each vertex sees a 2x2 block of cells; corners have an odd count or a diagonal pair
        blk = m[:-1, :-1] + m[1:, :-1] + m[:-1, 1:] + m[1:, 1:]
        diag = (m[:-1, :-1] == m[1:, 1:]) & (m[1:, :-1] == m[:-1, 1:]) & (m[:-1, :-1] != m[1:, :-1])
        jj, ii = np.nonzero((blk % 2 == 1) | diag)
        return np.stack([self.origin[0] + self.h * ii, self.origin[1] + self.h * jj], axis=1)

    def special_directions(self, x) -> np.ndarray:
        v = self.boundary_vertices() - np.asarray(x)[None, :2]
        v = v[np.hypot(v[:, 0], v[:, 1]) > 0]
        return np.concatenate([np.arctan2(v[:, 1], v[:, 0]), [0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi]])

    def bbox(self):
        ny, nx = self.mask.shape
        lo = np.asarray(self.origin, dtype=float)
        return lo, lo + self.h * np.array([nx, ny])

    @property
    def cell_count(self) -> int:
        return int(self.mask.sum())


def read_raster(source: Union[str, Path]) -> np.ndarray:
    """Read a 0/1 raster: a ``P1`` line, ``width height``, then rows top-down.

    Returns a boolean array whose row 0 is the bottom row.
    """
    p = Path(source)
    text = p.read_text() if ("\n" not in str(source) and p.exists()) else str(source)
    tokens = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P1":
        raise DomainError("raster must start with 'P1'")
    try:
        width, height = int(tokens[1]), int(tokens[2])
    except (IndexError, ValueError):
        raise DomainError("raster header needs 'width height'") from None
    cells = tokens[3:]
    if len(cells) == 1 and len(cells[0]) == width * height:
        cells = list(cells[0])
    if len(cells) != width * height:
        # rows may also be written without spaces
        joined = "".join(cells)
        if len(joined) != width * height:
            raise DomainError(f"raster has {len(joined)} cells, expected {width * height}")
        cells = list(joined)
    if any(c not in ("0", "1") for c in cells):
        raise DomainError("raster cells must be 0 or 1")
    arr = np.array([c == "1" for c in cells], dtype=bool).reshape(height, width)
    return arr[::-1].copy()


def format_raster(mask: np.ndarray) -> str:
    mask = np.asarray(mask, dtype=bool)
    height, width = mask.shape
    rows = [" ".join("1" if v else "0" for v in row) for row in mask[::-1]]
    return "P1\n" + f"{width} {height}\n" + "\n".join(rows) + "\n"


def write_raster(path: Union[str, Path], mask: np.ndarray) -> None:
    Path(path).write_text(format_raster(mask))
