"""Anisotropy functions and interaction kernels.

A kernel is ``K(z) = a(z/|z|) * m(|z|) / |z|**(n+s)`` where ``a`` is an even
positive weight on the unit sphere and ``m`` an optional radial multiplier
(``m = 1`` for homogeneous kernels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, NoBlowupError


def _unit(omega: np.ndarray) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    return omega / np.linalg.norm(omega, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=True)
class AnisotropyFn:
    """Positive direction weight ``a(omega)`` on the unit sphere of R^dim.

    ``func`` receives an array of unit vectors with trailing axis ``dim`` and
    returns the weights. Use the constructors rather than building this
    directly.
    """

    func: Callable[[np.ndarray], np.ndarray] = field(compare=True)
    dim: int
    a_min: float
    a_max: float
    tabulated: bool = False
    is_constant: bool = False
    label: str = ""
    nodes: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError("dimension must be at least 2")
        if not (0.0 < self.a_min <= self.a_max):
            raise DomainError(f"need 0 < a_min <= a_max, got {self.a_min}, {self.a_max}")

    def __call__(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if omega.shape[-1] != self.dim:
            raise DomainError(f"expected vectors of dimension {self.dim}")
        return np.asarray(self.func(_unit(omega)), dtype=float)

    def at_angle(self, alpha) -> np.ndarray:
        """Weight at the planar direction ``(cos alpha, sin alpha)`` (dim 2 only)."""
        if self.dim != 2:
            raise DomainError("at_angle needs a planar anisotropy")
        alpha = np.asarray(alpha, dtype=float)
        return np.asarray(self.func(np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)), dtype=float)

    # constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, value: float = 1.0, dim: int = 2) -> "AnisotropyFn":
        value = float(value)

        def func(omega, _v=value):
            return np.full(np.shape(omega)[:-1], _v)

        return cls(func, dim, value, value, is_constant=True, label=f"const({value:g})")

    @classmethod
    def from_function(cls, func, dim: int, a_min: Optional[float] = None,
                      a_max: Optional[float] = None, label: str = "") -> "AnisotropyFn":
        """Wrap a vectorised callable; missing bounds are estimated on a direction grid."""
        if a_min is None or a_max is None:
            vals = func(_direction_grid(dim))
            a_min = float(np.min(vals)) if a_min is None else a_min
            a_max = float(np.max(vals)) if a_max is None else a_max
        return cls(func, dim, float(a_min), float(a_max), label=label)

    @classmethod
    def planar(cls, angle_func: Callable[[np.ndarray], np.ndarray], a_min: Optional[float] = None,
               a_max: Optional[float] = None, label: str = "") -> "AnisotropyFn":
        """Planar anisotropy given as a function of the polar angle."""

        def func(omega, _f=angle_func):
            return _f(np.arctan2(omega[..., 1], omega[..., 0]))

        return cls.from_function(func, 2, a_min, a_max, label=label)

    @classmethod
    def from_table(cls, source: Union[str, Path], symmetrize: bool = True) -> "AnisotropyFn":
        """Planar anisotropy from ``angle value`` lines (``#`` starts a comment).

        Values are linearly interpolated with period 2*pi; with ``symmetrize``
        the result is ``(a(t) + a(t + pi)) / 2`` so it is exactly even.
        """
        text = Path(source).read_text() if _looks_like_path(source) else str(source)
        angles, values = parse_table(text)
        return cls.from_samples(angles, values, symmetrize=symmetrize)

    @classmethod
    def from_samples(cls, angles, values, symmetrize: bool = True) -> "AnisotropyFn":
        angles = np.mod(np.asarray(angles, dtype=float), 2 * np.pi)
        values = np.asarray(values, dtype=float)
        order = np.argsort(angles)
        angles, values = angles[order], values[order]
        if np.any(values <= 0):
            raise DomainError("table values must be positive")
        interp = periodic_interpolator(angles, values)
        if symmetrize:
            def angle_func(t, _i=interp):
                return 0.5 * (_i(t) + _i(np.asarray(t) + np.pi))
            kinks = np.unique(np.mod(np.concatenate([angles, angles + np.pi]), 2 * np.pi))
        else:
            angle_func = interp
            kinks = angles
        vals = angle_func(kinks)

        def func(omega, _f=angle_func):
            return _f(np.arctan2(omega[..., 1], omega[..., 0]))

        return cls(func, 2, float(vals.min()), float(vals.max()), tabulated=True,
                   label="table", nodes=tuple(kinks))

    def to_table(self, size: int = 360) -> str:
        if self.dim != 2:
            raise DomainError("only planar anisotropies can be tabulated")
        t = np.arange(size) * (2 * np.pi / size)
        return format_table(t, self.at_angle(t))


def _looks_like_path(source) -> bool:
    if isinstance(source, Path):
        return True
    return "\n" not in source and Path(source).exists()


def _direction_grid(dim: int, count: int = 2048) -> np.ndarray:
    if dim == 2:
        t = np.arange(count) * (2 * np.pi / count)
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((count * 4, dim))
    return _unit(v)


def parse_table(text: str) -> tuple[np.ndarray, np.ndarray]:
    angles, values = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"line {lineno}: expected 'angle value'")
        try:
            angles.append(float(parts[0]))
            values.append(float(parts[1]))
        except ValueError as exc:
            raise DomainError(f"line {lineno}: {exc}") from None
    if len(angles) < 2:
        raise DomainError("a table needs at least two rows")
    return np.array(angles), np.array(values)


def format_table(angles, values, header: str = "angle_radians value") -> str:
    lines = [f"# {header}"]
    lines += [f"{a:.17g} {v:.17g}" for a, v in zip(angles, values)]
    return "\n".join(lines) + "\n"


def periodic_interpolator(angles: np.ndarray, values: np.ndarray):
    """Linear interpolation with period 2*pi through sorted nodes in [0, 2*pi)."""
    xp = np.concatenate([angles - 2 * np.pi, angles, angles + 2 * np.pi])
    fp = np.concatenate([values, values, values])

    def interp(t):
        t = np.mod(np.asarray(t, dtype=float), 2 * np.pi)
        return np.interp(t, xp, fp)

    return interp


@dataclass(frozen=True, eq=True)
class KernelSpec:
    """Interaction kernel ``a(z/|z|) m(|z|) |z|**(-n-s)``.

    ``radial=None`` is the homogeneous form. ``smoothness`` only records
    whether the kernel is declared to satisfy first or second order
    derivative bounds; it is never checked.
    """

    s: float
    anisotropy: AnisotropyFn
    lam: float = 1.0
    rho: float = math.inf
    radial: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smoothness: int = 0

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"exponent s must lie in (0, 1), got {self.s}")
        if not self.lam >= 1.0:
            raise DomainError(f"ellipticity must be >= 1, got {self.lam}")
        if not self.rho > 0:
            raise DomainError("locality radius must be positive")
        if self.smoothness not in (0, 1, 2):
            raise DomainError("smoothness flag must be 0, 1 or 2")

    @property
    def dim(self) -> int:
        return self.anisotropy.dim

    @property
    def homogeneous(self) -> bool:
        return self.radial is None

    @classmethod
    def isotropic(cls, s: float, dim: int = 2, scale: float = 1.0, **kw) -> "KernelSpec":
        return cls(s, AnisotropyFn.constant(scale, dim), **kw)


def eval_kernel(spec: KernelSpec, zeta) -> Union[float, np.ndarray]:
    """Kernel value at ``zeta`` (a point or an array of points, trailing axis n)."""
    z = np.asarray(zeta, dtype=float)
    if z.shape[-1] != spec.dim:
        raise DomainError(f"expected points of dimension {spec.dim}")
    r = np.linalg.norm(z, axis=-1)
    if np.any(r == 0):
        raise DomainError("kernel is singular at the origin")
    val = spec.anisotropy(z) * r ** (-(spec.dim + spec.s))
    if spec.radial is not None:
        val = val * spec.radial(r)
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class Violation:
    index: int
    kind: str  # "lower", "upper" or "evenness"
    value: float
    bound: float


@dataclass
class ValidationReport:
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def __str__(self) -> str:
        if self.passed:
            return "PASS"
        lines = [f"FAIL ({len(self.violations)} violations)"]
        lines += [f"  sample {v.index}: {v.kind} value={v.value:.6g} bound={v.bound:.6g}"
                  for v in self.violations[:20]]
        return "\n".join(lines)


def validate_kernel_class(spec: KernelSpec, samples) -> ValidationReport:
    """Check the sandwich bounds and evenness at every sample point."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.shape[0] == 0:
        raise DomainError("need at least one sample")
    r = np.linalg.norm(pts, axis=-1)
    if np.any(r == 0):
        raise DomainError("samples must be nonzero")
    tol = 1e-9 if spec.anisotropy.tabulated else 1e-12
    n, s, lam = spec.dim, spec.s, spec.lam
    k = np.asarray(eval_kernel(spec, pts), dtype=float).reshape(-1)
    kneg = np.asarray(eval_kernel(spec, -pts), dtype=float).reshape(-1)
    base = r ** (-(n + s))
    upper = lam * base
    lower = np.where(r < spec.rho, base / lam, 0.0)
    out = []
    for i in range(len(pts)):
        if k[i] > upper[i] * (1 + tol):
            out.append(Violation(i, "upper", float(k[i]), float(upper[i])))
        if k[i] < lower[i] * (1 - tol):
            out.append(Violation(i, "lower", float(k[i]), float(lower[i])))
        if abs(k[i] - kneg[i]) > tol * max(abs(k[i]), abs(kneg[i])):
            out.append(Violation(i, "evenness", float(k[i]), float(kneg[i])))
    return ValidationReport(out)


def blowup_kernel(spec: KernelSpec, probe=(1e-12, 1e-9), tol: float = 1e-6) -> KernelSpec:
    """Exactly homogeneous limit ``r**(n+s) K(r z)`` as ``r -> 0``.

    The limit of the radial multiplier is probed on a log-spaced set of
    radii in ``probe``; if it strays from 1 by more than ``tol`` there the
    blow-up is declared nonexistent.
    """
    if spec.radial is None:
        return spec
    r = np.geomspace(probe[0], probe[1], 257)
    m = np.asarray(spec.radial(r), dtype=float)
    if not np.all(np.isfinite(m)) or np.max(np.abs(m - 1.0)) > tol:
        raise NoBlowupError("radial multiplier does not tend to 1 at the origin")
    return KernelSpec(spec.s, spec.anisotropy, spec.lam, spec.rho, None, spec.smoothness)
