"""Contact-angle equation: the Young deficit, regime classification, the
interior angle solver, the cancellation function and its dual angle.

Sign conventions
----------------
The deficit is

    W(theta) = int_0^theta phi1 sin^s1 - int_theta^pi phi1 sin^s1 - sigma int_0^pi phi2 sin^s1,

strictly increasing in theta. In the reduced plane, with ``e = (cos theta, sin theta)``,

    int_{J(theta,pi)} k1 - int_{J(0,theta)} k1 = (int_theta^pi - int_0^theta) phi1 sin^s1 / (s1 sin^s1 theta)
    int_{H^c} k2 = int_0^pi phi2 sin^s1 / (s1 sin^s1 theta)

where ``k_j(y) = phi_j(dir(y - e)) |y - e|^(-2-s1)`` and the first difference
is a principal value. Hence ``W / (s1 sin^s1 theta)`` equals minus the wedge
combination ``int_{J(theta,pi)} k1 - int_{J(0,theta)} k1 + sigma int_{H^c} k2``,
and both vanish at the same angle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .errors import BracketError, DomainError, NoInteriorSolution, UnsupportedRegime
from .fields import AngularParams, FieldTerm, planar_field
from .kernels import AnisotropyFn
from .quadrature import gauss_legendre, jacobi_left, jacobi_right
from .reduction import PhiProfile
from .regions import HalfSpace, Wedge

SOLVER_TOL = 1e-10
BRACKET_TOL = 1e-12
EDGE = 1e-9


class Regime(str, enum.Enum):
    STICKING = "sticking"
    DETACHMENT = "detachment"
    INTERIOR = "interior"
    INDETERMINATE = "indeterminate"


class SineWeightedIntegral:
    """Cumulative ``F(theta) = int_0^theta phi(a) sin(a)**s da`` on [0, pi].

    Panels follow the kinks of a tabulated profile (uniform otherwise); the
    two end panels use Gauss-Jacobi rules that absorb the ``sin**s``
    endpoint behaviour.
    """

    def __init__(self, phi: PhiProfile, s: float, panels: int = 256, order: int = 10):
        self.phi = phi
        self.s = s
        self.order = order
        if phi.kinks is not None:
            k = np.mod(np.asarray(phi.kinks, dtype=float), 2 * np.pi)
            k = k[(k > 0) & (k < np.pi)]
            edges = np.unique(np.concatenate([[0.0, np.pi], k]))
            # a uniform profile grid is symmetric about pi/2: keep it exactly so
            edges[-1] = np.pi
        else:
            edges = np.linspace(0.0, np.pi, panels + 1)
        self.edges = edges
        pieces = np.array([self._piece(edges[i], edges[i + 1], i) for i in range(len(edges) - 1)])
        self.cumulative = np.concatenate([[0.0], np.cumsum(pieces)])

    def _f(self, x):
        return self.phi(x) * np.sin(x) ** self.s

    def _left(self, b):
        # int_0^b phi sin^s, written as (x)^s * phi * (sin x / x)^s
        x, w = jacobi_left(0.0, b, self.s, self.order)
        return float(np.dot(w, self.phi(x) * (np.sin(x) / x) ** self.s))

    def _right(self, a):
        # int_a^pi phi sin^s, written as (pi - x)^s * phi * (sin x / (pi - x))^s
        x, w = jacobi_right(a, np.pi, self.s, self.order)
        return float(np.dot(w, self.phi(x) * (np.sin(x) / (np.pi - x)) ** self.s))

    def _plain(self, a, b):
        x, w = gauss_legendre(a, b, self.order)
        return float(np.dot(w, self._f(x)))

    def _piece(self, a, b, i):
        last = len(self.edges) - 2
        if i == 0 and i == last:
            return self._left(0.5 * np.pi) + self._right(0.5 * np.pi)
        if i == 0:
            return self._left(b)
        if i == last:
            return self._right(a)
        return self._plain(a, b)

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    def __call__(self, theta: float) -> float:
        if theta <= 0.0:
            return 0.0
        if theta >= np.pi:
            return self.total
        i = int(np.searchsorted(self.edges, theta, side="right")) - 1
        a = self.edges[i]
        if theta == a:
            return float(self.cumulative[i])
        last = len(self.edges) - 2
        if i == 0 and i == last:
            part = self._left(theta) if theta <= 0.5 * np.pi else self.total - self._right(theta)
        elif i == 0:
            part = self._left(theta)
        elif i == last:
            part = (self.cumulative[-1] - self.cumulative[i]) - self._right(theta)
        else:
            part = self._plain(a, theta)
        return float(self.cumulative[i] + part)


@dataclass(frozen=True, eq=False)
class YoungProblem:
    s1: float
    s2: float
    sigma: float
    phi1: PhiProfile
    phi2: Optional[PhiProfile] = None

    def __post_init__(self):
        for s in (self.s1, self.s2):
            if not 0 < s < 1:
                raise DomainError("exponents must lie in (0, 1)")
        if self.sigma != 0 and self.phi2 is None:
            raise DomainError("phi2 is required when sigma is nonzero")
        if abs(self.phi1.s - self.s1) > 1e-12:
            raise DomainError("phi1 was built with a different exponent than s1")

    @property
    def equation_valid(self) -> bool:
        return self.s1 == self.s2 or self.sigma == 0

    @cached_property
    def _f1(self) -> SineWeightedIntegral:
        return SineWeightedIntegral(self.phi1, self.s1)

    @cached_property
    def _b2(self) -> float:
        if self.phi2 is None:
            return 0.0
        return SineWeightedIntegral(self.phi2, self.s1).total

    def deficit(self, theta: float, sigma: Optional[float] = None) -> float:
        sg = self.sigma if sigma is None else sigma
        f = self._f1
        return 2.0 * f(theta) - f.total - (sg * self._b2 if sg else 0.0)


@dataclass(frozen=True)
class AngleSolution:
    regime: Regime
    theta: float
    residual: Optional[float]
    unique: bool
    sigma_bound: Optional[float]
    bracket: Optional[float]
    plateau: Optional[tuple] = None

    @property
    def degrees(self) -> float:
        return math.degrees(self.theta)


@dataclass(frozen=True)
class DualAngleResult:
    theta_hat: float
    c: float
    residual: float


def young_deficit(p: YoungProblem, theta: float) -> float:
    """``W(theta)``; the sigma term uses the exponent s1."""
    if not p.equation_valid:
        raise UnsupportedRegime("the angle equation needs s1 == s2 or sigma == 0")
    if not 0.0 < theta < np.pi:
        raise DomainError("theta must lie in (0, pi)")
    return p.deficit(theta)


def sigma_bound(phi1: PhiProfile, phi2: PhiProfile, s1: float) -> float:
    """Ratio of ``int_0^pi phi1 sin^s1`` to ``int_0^pi phi2 sin^s1``."""
    return SineWeightedIntegral(phi1, s1).total / SineWeightedIntegral(phi2, s1).total


def classify_regime(s1: float, s2: float, sigma: float, bound: Optional[float] = None) -> Regime:
    if s1 < s2:
        if sigma < 0:
            return Regime.STICKING
        if sigma > 0:
            return Regime.DETACHMENT
        return Regime.INTERIOR
    if s1 > s2:
        return Regime.INTERIOR
    if sigma == 0:
        return Regime.INTERIOR
    if bound is None:
        raise DomainError("the sigma bound is required when s1 == s2 and sigma != 0")
    return Regime.INTERIOR if abs(sigma) < bound else Regime.INDETERMINATE


def _bisect(fn, lo: float, hi: float, target: float, tol: float, bracket_tol: float):
    flo = fn(lo) - target
    fhi = fn(hi) - target
    if flo > 0 or fhi < 0:
        raise BracketError("no sign change on the bracket")
    mid, fmid = lo, flo
    while hi - lo > bracket_tol:
        mid = 0.5 * (lo + hi)
        fmid = fn(mid) - target
        if abs(fmid) <= tol:
            break
        if fmid < 0:
            lo = mid
        else:
            hi = mid
    else:
        mid = 0.5 * (lo + hi)
        fmid = fn(mid) - target
    return mid, fmid, hi - lo


def solve_contact_angle(p: YoungProblem, tol: float = SOLVER_TOL,
                        bracket_tol: float = BRACKET_TOL) -> AngleSolution:
    """Contact angle of the problem, with a uniqueness certificate.

    For ``s1 > s2`` the interior equation does not involve the second
    kernel and is solved with sigma = 0.
    """
    bound = sigma_bound(p.phi1, p.phi2, p.s1) if p.phi2 is not None else None
    regime = classify_regime(p.s1, p.s2, p.sigma, bound)
    if regime is Regime.STICKING:
        return AngleSolution(regime, 0.0, None, True, bound, None)
    if regime is Regime.DETACHMENT:
        return AngleSolution(regime, np.pi, None, True, bound, None)
    sig = p.sigma if p.s1 == p.s2 else 0.0

    def w(t):
        return p.deficit(t, sig)

    lo, hi = EDGE, np.pi - EDGE
    wlo, whi = w(lo), w(hi)
    if (wlo > 0 and whi > 0) or (wlo < 0 and whi < 0):
        raise NoInteriorSolution(
            f"W has the same sign at both ends (W(eps)={wlo:.6g}, W(pi-eps)={whi:.6g})")
    theta, res, width = _bisect(w, lo, hi, 0.0, tol, bracket_tol)
    unique = bound is None or abs(sig) < bound
    plateau = None
    probe = 5e-7
    if abs(w(min(theta + probe, hi))) < tol and abs(w(max(theta - probe, lo))) < tol:
        left = _bisect(w, lo, theta, -tol, 0.0, bracket_tol)[0] if w(lo) < -tol else lo
        right = _bisect(w, theta, hi, tol, 0.0, bracket_tol)[0] if w(hi) > tol else hi
        if right - left > 1e-6:
            plateau = (left, right)
            unique = False
    return AngleSolution(Regime.INTERIOR, theta, abs(res), unique, bound, width, plateau)


# -- reduced-plane wedge integrals -------------------------------------------

WeightLike = Union[AnisotropyFn, PhiProfile]


def _weight(a: WeightLike):
    """Even direction weight on planar unit vectors plus its kink angles."""
    if isinstance(a, PhiProfile):
        return (lambda d, _p=a: _p(np.arctan2(d[:, 1], d[:, 0]))), a.kinks
    if isinstance(a, AnisotropyFn):
        if a.dim != 2:
            raise DomainError("the reduced-plane integrals need a planar weight")
        return (lambda d, _a=a: _a.func(d)), a.nodes
    raise DomainError("weight must be an AnisotropyFn or a PhiProfile")


def _ray_distance(theta: float, gamma: float) -> float:
    """Distance from e(theta) to the ray from the origin at angle gamma."""
    c = math.cos(theta - gamma)
    return abs(math.sin(theta - gamma)) if c > 0 else 1.0


def cancellation_D(a1: WeightLike, s1: float, theta: float, theta_bar: float, *,
                   delta: Optional[float] = None, params: AngularParams = AngularParams()) -> float:
    """``D_theta(theta_bar) = int_{J(theta, theta+theta_bar)} k - int_{J(0,theta)} k`` at e(theta).

    The ball of radius ``delta`` around e(theta) is handled by pairing
    opposite rays, where the two wedges cancel by evenness. The default
    ``delta`` is half the distance to the nearest other boundary ray or the
    origin.
    """
    if not 0.0 < theta < np.pi:
        raise DomainError("theta must lie in (0, pi)")
    if not 0.0 < theta_bar < 2 * np.pi:
        raise DomainError("theta_bar must lie in (0, 2*pi)")
    weight, kinks = _weight(a1)
    x = np.array([math.cos(theta), math.sin(theta)])
    if delta is None:
        delta = 0.5 * min(1.0, _ray_distance(theta, 0.0), _ray_distance(theta, theta + theta_bar))
    terms = [FieldTerm(Wedge(theta, theta + theta_bar), 1.0, weight, kinks),
             FieldTerm(Wedge(0.0, theta), -1.0, weight, kinks)]
    return planar_field(x, terms, s1, delta=delta, params=params)


def dual_angle(a1: WeightLike, s1: float, theta: float, c: float = 0.0, *, tol: float = 1e-8,
               limit: float = 1e-6, params: AngularParams = AngularParams()) -> DualAngleResult:
    """The unique ``theta_hat`` in (0, 2*pi) with ``D_theta(theta_hat) = c``."""

    def d(tb):
        return cancellation_D(a1, s1, theta, tb, params=params)

    lo, hi = 0.5 * np.pi, 1.5 * np.pi
    dlo = d(lo)
    while dlo > c:
        lo *= 0.5
        if lo < limit:
            raise BracketError("no lower bracket for the dual angle")
        dlo = d(lo)
    dhi = d(hi)
    while dhi < c:
        hi = 2 * np.pi - 0.5 * (2 * np.pi - hi)
        if 2 * np.pi - hi < limit:
            raise BracketError("no upper bracket for the dual angle")
        dhi = d(hi)
    root, res, _ = _bisect(d, lo, hi, c, tol, 1e-14)
    return DualAngleResult(root, c, abs(res))


def wedge_young_residual(p: YoungProblem, theta: float, *,
                         params: AngularParams = AngularParams()) -> tuple[float, float]:
    """The angle relation at ``theta`` computed two ways.

    ``reduced = W(theta) / (s1 sin^s1 theta)`` from the 1D integrals;
    ``direct`` is minus ``int_{J(theta,pi)} k1 - int_{J(0,theta)} k1 + sigma int_{H^c} k2``
    evaluated by planar polar quadrature around e(theta). The overall minus
    sign makes both increase with theta and vanish together.
    """
    if not p.equation_valid:
        raise UnsupportedRegime("the angle equation needs s1 == s2 or sigma == 0")
    if not 0.0 < theta < np.pi:
        raise DomainError("theta must lie in (0, pi)")
    s = p.s1
    scale = s * math.sin(theta) ** s
    reduced = p.deficit(theta) / scale
    w1, k1 = _weight(p.phi1)
    terms = [FieldTerm(Wedge(theta, np.pi), 1.0, w1, k1),
             FieldTerm(Wedge(0.0, theta), -1.0, w1, k1)]
    if p.sigma != 0:
        w2, k2 = _weight(p.phi2)
        terms.append(FieldTerm(HalfSpace((0.0, -1.0), 0.0), p.sigma, w2, k2))
    x = np.array([math.cos(theta), math.sin(theta)])
    delta = 0.5 * min(1.0, math.sin(theta))
    direct = -planar_field(x, terms, s, delta=delta, params=params)
    return reduced, direct
