"""Volume-constrained minimization of the discrete capillarity energy.

On a grid of square cells the energy of ``E`` inside the container
``Omega`` is

    C(E) = I1(E, Omega \\ E) + sigma * I2(E, Omega^c) + h^2 * sum_E g.

Writing ``u_A(c) = sum_{d in A} P(c - d)`` for the cell-pair table ``P`` and
``Per`` for the interaction of one cell with the rest of the plane, this is
``sum_{c in E} b(c) - sum_{c, d in E} P1(c - d)`` with the linear field
``b = u1_Omega + sigma * (Per2 - u2_Omega) + h^2 g``. An exchange move then
costs O(1) given ``u1_E`` and accepting it costs one O(N) update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from .errors import DomainError, IndeterminateAngle
from .geometry import CellTable, cell_pair_table
from .kernels import KernelSpec


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Container raster: ``omega_mask[j, i]`` with row 0 at the bottom."""

    omega_mask: np.ndarray
    h: float = 1.0
    g_field: Optional[np.ndarray] = None

    def __post_init__(self):
        mask = np.asarray(self.omega_mask, dtype=bool).copy()
        if mask.ndim != 2 or not mask.any():
            raise DomainError("omega_mask must be a nonempty 2D raster")
        if not self.h > 0:
            raise DomainError("spacing h must be positive")
        g = np.zeros(mask.shape) if self.g_field is None else np.asarray(self.g_field, dtype=float).copy()
        if g.shape != mask.shape:
            raise DomainError("g_field must match omega_mask")
        if not np.all(np.isfinite(g)):
            raise DomainError("g_field must be finite")
        mask.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "omega_mask", mask)
        object.__setattr__(self, "g_field", g)

    @classmethod
    def rectangle(cls, width: int, height: int, h: float = 1.0, g_field=None) -> "GridDomain":
        return cls(np.ones((height, width), dtype=bool), h, g_field)

    @property
    def width(self) -> int:
        return self.omega_mask.shape[1]

    @property
    def height(self) -> int:
        return self.omega_mask.shape[0]

    @property
    def cell_count(self) -> int:
        return int(self.omega_mask.sum())


@dataclass(frozen=True, eq=False)
class CapillaryProblem:
    domain: GridDomain
    K1: KernelSpec
    K2: KernelSpec
    sigma: float
    m: int

    def __post_init__(self):
        if self.K1.dim != 2 or self.K2.dim != 2:
            raise DomainError("grid problems are planar")
        if not math.isfinite(self.sigma):
            raise DomainError("sigma must be finite")
        if int(self.m) != self.m or not 0 < self.m < self.domain.cell_count:
            raise DomainError(f"volume m must satisfy 0 < m < {self.domain.cell_count}")
        object.__setattr__(self, "m", int(self.m))

    def tables(self) -> tuple[CellTable, CellTable]:
        d = self.domain
        t1 = cell_pair_table(self.K1, d.h, d.width, d.height)
        t2 = t1 if self.K2 == self.K1 else cell_pair_table(self.K2, d.h, d.width, d.height)
        return t1, t2

    def with_sigma(self, sigma: float) -> "CapillaryProblem":
        return CapillaryProblem(self.domain, self.K1, self.K2, sigma, self.m)


# -- exact energies -----------------------------------------------------------------

def _pairs(table: CellTable, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ja, ia = np.nonzero(a)
    jb, ib = np.nonzero(b)
    if len(ia) == 0 or len(ib) == 0:
        return np.zeros(0)
    return table.at(ia[:, None] - ib[None, :], ja[:, None] - jb[None, :]).ravel()


def _exterior(table: CellTable, a: np.ndarray, omega: np.ndarray) -> float:
    """``I(A, Omega^c) = |A| Per - sum_{c in A, d in Omega} P(c - d)``."""
    n = int(a.sum())
    return math.fsum(np.concatenate([np.full(n, table.perimeter), -_pairs(table, a, omega)]))


def _energy(p: CapillaryProblem, E: np.ndarray, sigma: float, with_g: bool = True) -> float:
    t1, t2 = p.tables()
    omega = p.domain.omega_mask
    i1 = math.fsum(_pairs(t1, E, omega & ~E))
    i2 = _exterior(t2, E, omega) if sigma != 0 else 0.0
    gsum = p.domain.h**2 * math.fsum(p.domain.g_field[E]) if with_g else 0.0
    return math.fsum([i1, sigma * i2, gsum])


def _check_mask(p: CapillaryProblem, E) -> np.ndarray:
    E = np.asarray(E, dtype=bool)
    if E.shape != p.domain.omega_mask.shape:
        raise DomainError("mask shape differs from the container raster")
    if np.any(E & ~p.domain.omega_mask):
        raise DomainError("E is not contained in Omega")
    return E


def energy_eval(p: CapillaryProblem, E) -> float:
    """``C(E)`` with exactly rounded sums; ``E`` must hold exactly ``m`` cells of Omega."""
    E = _check_mask(p, E)
    if int(E.sum()) != p.m:
        raise DomainError(f"E has {int(E.sum())} cells, expected {p.m}")
    return _energy(p, E, p.sigma)


def free_energy(p: CapillaryProblem, E, sigma: Optional[float] = None, with_g: bool = True) -> float:
    """``C(E)`` without the volume check, optionally at another ``sigma``."""
    E = _check_mask(p, E)
    return _energy(p, E, p.sigma if sigma is None else sigma, with_g)


class _State:
    """Flattened problem data shared by the incremental routines."""

    def __init__(self, p: CapillaryProblem):
        t1, t2 = p.tables()
        omega = p.domain.omega_mask
        self.cy, self.cx = (v.astype(np.int64) for v in np.nonzero(omega))
        self.N = len(self.cx)
        self.index = -np.ones(omega.shape, dtype=np.int64)
        self.index[self.cy, self.cx] = np.arange(self.N)
        self.P = np.ascontiguousarray(t1.values)
        self.nyoff, self.nxoff = t1.ny - 1, t1.nx - 1
        full = np.ones(self.N, dtype=np.bool_)
        u1 = _field(self.P, self.cx, self.cy, self.nyoff, self.nxoff, full)
        if p.sigma != 0:
            P2 = np.ascontiguousarray(t2.values)
            ext = t2.perimeter - _field(P2, self.cx, self.cy, self.nyoff, self.nxoff, full)
        else:
            ext = 0.0
        self.b = u1 + p.sigma * ext + p.domain.h**2 * p.domain.g_field[self.cy, self.cx]
        nbr = -np.ones((self.N, 4), dtype=np.int64)
        H, W = omega.shape
        for k, (di, dj) in enumerate(((1, 0), (-1, 0), (0, 1), (0, -1))):
            ii, jj = self.cx + di, self.cy + dj
            ok = (ii >= 0) & (ii < W) & (jj >= 0) & (jj < H)
            nbr[ok, k] = self.index[jj[ok], ii[ok]]
        self.nbr = nbr

    def flat(self, E: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(E[self.cy, self.cx])

    def unflat(self, inE: np.ndarray, shape) -> np.ndarray:
        out = np.zeros(shape, dtype=bool)
        out[self.cy[inE], self.cx[inE]] = True
        return out


def delta_energy(p: CapillaryProblem, E, cell_out: Sequence[int], cell_in: Sequence[int]) -> float:
    """``C(E') - C(E)`` for ``E' = E - {cell_out} + {cell_in}``; cells are ``(i, j)`` indices."""
    E = _check_mask(p, E)
    io, jo = cell_out
    ii, ji = cell_in
    if not E[jo, io]:
        raise DomainError("cell_out is not in E")
    if E[ji, ii] or not p.domain.omega_mask[ji, ii]:
        raise DomainError("cell_in must lie in Omega outside E")
    st = _State(p)
    inE = st.flat(E)
    o, i = st.index[jo, io], st.index[ji, ii]
    uE = _field(st.P, st.cx, st.cy, st.nyoff, st.nxoff, inE)
    return float(_delta(st.P, st.cx, st.cy, st.nyoff, st.nxoff, st.b, uE, o, i))


# -- numba kernels -------------------------------------------------------------------

@njit(cache=True)
def _field(P, cx, cy, nyoff, nxoff, inE):
    n = len(cx)
    u = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for l in range(n):
            if inE[l]:
                acc += P[cy[k] - cy[l] + nyoff, cx[k] - cx[l] + nxoff]
        u[k] = acc
    return u


@njit(cache=True)
def _delta(P, cx, cy, nyoff, nxoff, b, uE, o, i):
    return (b[i] - b[o]) - 2.0 * (uE[i] - uE[o]) + 2.0 * P[cy[i] - cy[o] + nyoff, cx[i] - cx[o] + nxoff]


@njit(cache=True)
def _apply(P, cx, cy, nyoff, nxoff, uE, o, i):
    for k in range(len(cx)):
        uE[k] += P[cy[k] - cy[i] + nyoff, cx[k] - cx[i] + nxoff] - P[cy[k] - cy[o] + nyoff, cx[k] - cx[o] + nxoff]


@njit(cache=True)
def _on_interface(nbr, inE, k, want):
    # True if cell k has a 4-neighbour in Omega whose membership equals `want`
    for q in range(4):
        l = nbr[k, q]
        if l >= 0 and inE[l] == want:
            return True
    return False


@njit(cache=True)
def _pick(lst, n, nbr, inE, want, local):
    k = lst[np.random.randint(0, n)]
    if local:
        for _ in range(64):
            if _on_interface(nbr, inE, k, want):
                break
            k = lst[np.random.randint(0, n)]
    return k


@njit(cache=True)
def _swap_lists(elist, olist, pos, o, i):
    po, pi = pos[o], pos[i]
    elist[po] = i
    olist[pi] = o
    pos[i] = po
    pos[o] = pi


@njit(cache=True)
def _energy_of(b, uE, inE):
    lin = 0.0
    quad = 0.0
    for k in range(len(b)):
        if inE[k]:
            lin += b[k]
            quad += uE[k]
    return lin - quad


@njit(cache=True)
def _anneal(P, cx, cy, nyoff, nxoff, b, nbr, inE, T0, cooling, sweeps, moves, mode, seed, tol):
    np.random.seed(seed)
    n = len(cx)
    uE = _field(P, cx, cy, nyoff, nxoff, inE)
    elist = np.empty(n, dtype=np.int64)
    olist = np.empty(n, dtype=np.int64)
    pos = np.empty(n, dtype=np.int64)
    ne = 0
    no = 0
    for k in range(n):
        if inE[k]:
            elist[ne] = k
            pos[k] = ne
            ne += 1
        else:
            olist[no] = k
            pos[k] = no
            no += 1
    m = ne
    energy = _energy_of(b, uE, inE)
    best = energy
    best_inE = inE.copy()
    trace_step = np.empty(sweeps + 1, dtype=np.int64)
    trace_energy = np.empty(sweeps + 1)
    trace_step[0] = 0
    trace_energy[0] = energy
    accepted = 0
    T = T0
    step = 0
    for sweep in range(sweeps):
        for _ in range(moves):
            step += 1
            local = mode == 1 or (mode == 2 and np.random.random() < 0.5)
            o = _pick(elist, ne, nbr, inE, False, local)
            i = _pick(olist, no, nbr, inE, True, local)
            d = _delta(P, cx, cy, nyoff, nxoff, b, uE, o, i)
            if d <= 0.0 or (T > 0.0 and np.random.random() < np.exp(-d / T)):
                _apply(P, cx, cy, nyoff, nxoff, uE, o, i)
                inE[o] = False
                inE[i] = True
                _swap_lists(elist, olist, pos, o, i)
                energy += d
                accepted += 1
                if energy < best - tol:
                    best = energy
                    best_inE[:] = inE
        if ne != m:
            raise RuntimeError("volume changed")
        # resynchronise the running field to keep rounding from drifting
        if (sweep + 1) % 50 == 0:
            uE = _field(P, cx, cy, nyoff, nxoff, inE)
            energy = _energy_of(b, uE, inE)
        trace_step[sweep + 1] = step
        trace_energy[sweep + 1] = energy
        T *= cooling
    return best_inE, best, trace_step, trace_energy, accepted, step


@njit(cache=True)
def _descend(P, cx, cy, nyoff, nxoff, b, inE, tol, max_passes):
    """First-improvement descent over all exchange moves until none lowers the energy."""
    n = len(cx)
    uE = _field(P, cx, cy, nyoff, nxoff, inE)
    energy = _energy_of(b, uE, inE)
    energies = np.empty(max_passes + 1)
    energies[0] = energy
    accepted = 0
    passes = 0
    for _ in range(max_passes):
        improved = False
        for o in range(n):
            if not inE[o]:
                continue
            for i in range(n):
                if inE[i]:
                    continue
                d = _delta(P, cx, cy, nyoff, nxoff, b, uE, o, i)
                if d < -tol:
                    _apply(P, cx, cy, nyoff, nxoff, uE, o, i)
                    inE[o] = False
                    inE[i] = True
                    energy += d
                    accepted += 1
                    improved = True
                    break
        passes += 1
        energies[passes] = energy
        if not improved:
            break
    return inE, energies[:passes + 1], accepted


# -- minimization --------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Annealing schedule.

    ``T0=None`` means ``initial energy / (10 m)``; one sweep is ``moves``
    attempted exchanges (default: one per container cell). ``proposal`` is
    ``uniform`` (both cells drawn uniformly), ``interface`` (both cells on
    the E / Omega-minus-E interface) or ``mixed`` (an even draw per move).
    """

    T0: Optional[float] = None
    cooling: float = 0.995
    sweeps: int = 500
    moves: Optional[int] = None
    seed: int = 0
    proposal: str = "mixed"
    init: Union[str, np.ndarray] = "random"
    descent_passes: int = 10_000

    def __post_init__(self):
        if not 0 < self.cooling <= 1:
            raise DomainError("cooling factor must lie in (0, 1]")
        if self.sweeps < 0:
            raise DomainError("sweeps must be nonnegative")
        if self.T0 is not None and self.T0 < 0:
            raise DomainError("initial temperature must be nonnegative")
        if self.proposal not in _PROPOSALS:
            raise DomainError(f"proposal must be one of {sorted(_PROPOSALS)}")


_PROPOSALS = {"uniform": 0, "interface": 1, "mixed": 2}


@dataclass
class MinimizeReport:
    final_mask: np.ndarray
    final_energy: float
    energy_trace: list
    accepted_moves: int
    measured_angle: Optional[float] = None
    wall_contact_fraction: float = 0.0
    angle: Optional["AngleMeasurement"] = None
    initial_energy: float = math.nan


def initial_mask(p: CapillaryProblem, init: Union[str, np.ndarray], seed: int) -> np.ndarray:
    omega = p.domain.omega_mask
    if isinstance(init, np.ndarray):
        E = _check_mask(p, init)
        if int(E.sum()) != p.m:
            raise DomainError("initial mask has the wrong volume")
        return E.copy()
    jj, ii = np.nonzero(omega)
    if init == "random":
        pick = np.random.default_rng(seed).permutation(len(ii))[:p.m]
    elif init == "block":
        # the m cells closest to the container's centroid
        d = (ii - ii.mean()) ** 2 + (jj - jj.mean()) ** 2
        pick = np.lexsort((ii, jj, d))[:p.m]
    else:
        raise DomainError("init must be 'random', 'block' or a mask")
    E = np.zeros_like(omega)
    E[jj[pick], ii[pick]] = True
    return E


def minimize(p: CapillaryProblem, schedule: Schedule = Schedule(), wall: Optional[str] = None,
             window: int = 8) -> MinimizeReport:
    """Simulated annealing with exchange moves followed by a zero-temperature descent.

    Deterministic for a given seed. The returned configuration is the best
    one seen, polished by first-improvement descent over all exchange moves.
    """
    st = _State(p)
    E0 = initial_mask(p, schedule.init, schedule.seed)
    e_init = energy_eval(p, E0)
    inE = st.flat(E0)
    T0 = schedule.T0 if schedule.T0 is not None else abs(e_init) / (10.0 * p.m)
    moves = schedule.moves if schedule.moves is not None else st.N
    scale = max(1.0, float(np.max(np.abs(st.b))))
    tol = 1e-12 * scale
    best, _, steps, energies, accepted, nstep = _anneal(
        st.P, st.cx, st.cy, st.nyoff, st.nxoff, st.b, st.nbr, inE, float(T0), float(schedule.cooling),
        int(schedule.sweeps), int(moves), _PROPOSALS[schedule.proposal], int(schedule.seed), tol)
    trace = [(int(a), float(e)) for a, e in zip(steps, energies)]
    final, greedy, acc2 = _descend(st.P, st.cx, st.cy, st.nyoff, st.nxoff, st.b, best.copy(), tol,
                                   int(schedule.descent_passes))
    for k, e in enumerate(greedy):
        trace.append((int(nstep) + k, float(e)))
    mask = st.unflat(final, p.domain.omega_mask.shape)
    if int(mask.sum()) != p.m:
        raise RuntimeError("volume constraint violated")
    report = MinimizeReport(mask, energy_eval(p, mask), trace, int(accepted + acc2), initial_energy=e_init)
    if wall is not None:
        report.wall_contact_fraction = wall_contact_fraction(mask, p.domain.omega_mask, wall)
        try:
            report.angle = measure_contact_angle(mask, p.domain.omega_mask, wall, window)
            report.measured_angle = report.angle.theta
        except IndeterminateAngle:
            pass
    return report


def exhaustive_minimum(p: CapillaryProblem, limit: int = 2000) -> tuple[float, np.ndarray, int]:
    """Minimum of ``energy_eval`` over every feasible mask (at most ``limit`` of them)."""
    from itertools import combinations

    jj, ii = np.nonzero(p.domain.omega_mask)
    total = math.comb(len(ii), p.m)
    if total > limit:
        raise DomainError(f"{total} feasible masks exceed the limit {limit}")
    best, arg = math.inf, None
    for combo in combinations(range(len(ii)), p.m):
        E = np.zeros_like(p.domain.omega_mask)
        idx = np.array(combo)
        E[jj[idx], ii[idx]] = True
        e = energy_eval(p, E)
        if e < best:
            best, arg = e, E
    return best, arg, total


# -- duality --------------------------------------------------------------------------

def complement_duality_check(p: CapillaryProblem, F) -> tuple[float, float, float]:
    """``(lhs, rhs, defect)`` for ``C_sigma(Omega \\ F) = C_{-sigma}(F) + sigma I2(Omega, Omega^c)``, with g = 0."""
    F = _check_mask(p, F)
    omega = p.domain.omega_mask
    lhs = free_energy(p, omega & ~F, p.sigma, with_g=False)
    _, t2 = p.tables()
    rhs = math.fsum([free_energy(p, F, -p.sigma, with_g=False), p.sigma * _exterior(t2, omega, omega)])
    return lhs, rhs, abs(lhs - rhs)


# -- contact angle measurement -------------------------------------------------------

class AngleRegime(str, Enum):
    MEASURED = "measured"
    STICKING = "sticking"
    DETACHMENT = "detachment"


@dataclass(frozen=True)
class AngleMeasurement:
    theta: float
    regime: AngleRegime
    contact_fraction: float
    ends: tuple = ()
    points: int = 0

    @property
    def degrees(self) -> float:
        return math.degrees(self.theta)


_WALLS = ("bottom", "top", "left", "right")


def _to_floor(a: np.ndarray, wall: str) -> np.ndarray:
    """Reflect or transpose a raster so the declared wall becomes the bottom side."""
    if wall == "bottom":
        return a
    if wall == "top":
        return a[::-1, :]
    if wall == "left":
        return a.T
    if wall == "right":
        return a[:, ::-1].T
    raise DomainError(f"wall must be one of {_WALLS}")


def _floor_cells(omega: np.ndarray) -> np.ndarray:
    below = np.zeros_like(omega)
    below[1:, :] = omega[:-1, :]
    return omega & ~below


def wall_contact_fraction(E, omega, wall: str) -> float:
    """Share of the container cells along ``wall`` that belong to ``E``
    (the largest share over all sides for ``wall='auto'``)."""
    if wall == "auto":
        return max(wall_contact_fraction(E, omega, w) for w in _WALLS)
    E = _to_floor(np.asarray(E, dtype=bool), wall)
    om = _to_floor(np.asarray(omega, dtype=bool), wall)
    floor = _floor_cells(om)
    return float((E & floor).sum() / floor.sum())


def _edge_track(E: np.ndarray, j0: int, start: int, side: int, window: int) -> list[tuple[float, float]]:
    """Interface abscissae row by row above the floor, following one contact end.

    ``side = +1`` follows an end with E on the left, ``-1`` with E on the right.
    Returns ``(height, x)`` pairs in cell units with the floor at height 0.
    """
    pts = []
    x_prev = start
    H, W = E.shape
    for r in range(window):
        j = j0 + r
        if j >= H:
            break
        row = E[j]
        if side > 0:
            cand = np.nonzero(row[:-1] & ~row[1:])[0] + 1  # E cell at i-1, none at i
        else:
            cand = np.nonzero(~row[:-1] & row[1:])[0] + 1  # none at i-1, E cell at i
        if len(cand) == 0:
            break
        k = cand[np.argmin(np.abs(cand - x_prev))]
        if abs(k - x_prev) > window:
            break
        pts.append((r + 0.5, float(k)))
        x_prev = k
    return pts


def measure_contact_angle(E, omega, wall: str = "bottom", window: int = 8, fit: str = "line") -> AngleMeasurement:
    """Angle inside ``E`` between the wall and the fitted E / E^c interface.

    The interface is sampled as one abscissa per cell row within ``window``
    rows of each free contact end and fitted by least squares, as a line
    (``fit='line'``) or a quadratic whose slope at the wall is used
    (``fit='quadratic'``). Several free ends are averaged. ``wall='auto'``
    averages over every side of the raster that has a free contact end.
    """
    if window < 2:
        raise DomainError("window must be at least 2 cells")
    if fit not in ("line", "quadratic"):
        raise DomainError("fit must be 'line' or 'quadratic'")
    if wall == "auto":
        return _measure_any_wall(E, omega, window, fit)
    E = _to_floor(np.asarray(E, dtype=bool), wall)
    om = _to_floor(np.asarray(omega, dtype=bool), wall)
    floor = _floor_cells(om)
    contact = E & floor
    fraction = float(contact.sum() / floor.sum())
    if not E.any():
        raise IndeterminateAngle("E is empty")
    if fraction < 1.0 / window:
        return AngleMeasurement(math.pi, AngleRegime.DETACHMENT, fraction)
    angles = []
    ends = []
    npts = 0
    W = E.shape[1]
    for j, i in zip(*np.nonzero(contact)):
        for side in (1, -1):
            nxt = i + side
            if not (0 <= nxt < W) or not om[j, nxt] or E[j, nxt]:
                continue
            start = i + 1 if side > 0 else i
            pts = _edge_track(E, j, start, side, window)
            if len(pts) < 3:
                continue
            y = np.array([q[0] for q in pts])
            x = np.array([q[1] for q in pts])
            deg = 1 if fit == "line" else 2
            coef = np.polynomial.polynomial.polyfit(y, x, deg)
            slope = coef[1]
            angles.append(math.atan2(1.0, -side * slope))
            ends.append((int(i), int(j), side))
            npts += len(pts)
    if not angles:
        if fraction > 0.9:
            return AngleMeasurement(0.0, AngleRegime.STICKING, fraction)
        raise IndeterminateAngle("no free contact end and no sticking or detachment signature")
    return AngleMeasurement(float(np.mean(angles)), AngleRegime.MEASURED, fraction, tuple(ends), npts)


def _measure_any_wall(E, omega, window: int, fit: str) -> AngleMeasurement:
    found = []
    for w in _WALLS:
        try:
            found.append(measure_contact_angle(E, omega, w, window, fit))
        except IndeterminateAngle:
            continue
    measured = [a for a in found if a.regime is AngleRegime.MEASURED]
    if measured:
        theta = float(np.mean([a.theta for a in measured]))
        return AngleMeasurement(theta, AngleRegime.MEASURED, max(a.contact_fraction for a in measured),
                                tuple(e for a in measured for e in a.ends), sum(a.points for a in measured))
    if any(a.regime is AngleRegime.STICKING for a in found):
        return next(a for a in found if a.regime is AngleRegime.STICKING)
    if found:
        return max(found, key=lambda a: a.contact_fraction)
    raise IndeterminateAngle("no wall gives a contact signature")
