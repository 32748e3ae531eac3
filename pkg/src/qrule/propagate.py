"""Decay-boundary integration of psi'' = (V - E) psi and the film recursion.

The state carried along the grid is the pair (psi, psi'), never phi = psi'/psi,
so nodes of psi are harmless.  Large magnitudes are divided out and tracked
in a running log scale.  Traces expose phi as a derived view together with
the locations of psi nodes, phi zeros and phi = +-kappa crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import (
    CoverageError,
    IntegrationOverflowError,
    InvalidParameterError,
    TruncationError,
    TurningPointError,
)
from .potential import Potential, partition, turning_points

DEFAULT_N_STEPS = 20000
MIN_N_STEPS = 2000
MIN_FILMS = 16
RENORM_LIMIT = 1e100
TAIL_DEPTH = 18.0
CONSTANT_TAIL_PAD = 1.0
EVENT_BISECTIONS = 52
EVENT_MERGE = 1e-10
CROSS_TOL = 1e-9
JOIN_FRACTION = 0.381966

LEFT_TO_RIGHT = "left-to-right"
RIGHT_TO_LEFT = "right-to-left"
STITCHED = "stitched"


# -- kernels ------------------------------------------------------------------


@njit(cache=True)
def _rk4_step(y, z, h, a0, am, a1):
    k1y = z
    k1z = a0 * y
    k2y = z + 0.5 * h * k1z
    k2z = am * (y + 0.5 * h * k1y)
    k3y = z + 0.5 * h * k2z
    k3z = am * (y + 0.5 * h * k2y)
    k4y = z + h * k3z
    k4z = a1 * (y + h * k3y)
    y_new = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    z_new = z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    return y_new, z_new


@njit(cache=True)
def _march_record(h, v0, vm, v1, energy, y0, z0, psi, dpsi, ls):
    """March over all steps, storing every node.  Returns 0 or 1 on overflow."""
    y = y0
    z = z0
    scale = 0.0
    psi[0] = y
    dpsi[0] = z
    ls[0] = 0.0
    for i in range(h.size):
        y, z = _rk4_step(y, z, h[i], v0[i] - energy, vm[i] - energy, v1[i] - energy)
        m = max(abs(y), abs(z))
        if not np.isfinite(m) or m == 0.0:
            return 1
        if m > RENORM_LIMIT:
            y /= m
            z /= m
            scale += math.log(m)
        psi[i + 1] = y
        dpsi[i + 1] = z
        ls[i + 1] = scale
    return 0


@njit(cache=True)
def _march_end(h, v0, vm, v1, energy, y0, z0):
    """March without storage.  Returns (psi, dpsi, node_count, status)."""
    y = y0
    z = z0
    nodes = 0
    neg = y < 0.0
    for i in range(h.size):
        y, z = _rk4_step(y, z, h[i], v0[i] - energy, vm[i] - energy, v1[i] - energy)
        m = max(abs(y), abs(z))
        if not np.isfinite(m) or m == 0.0:
            return y, z, nodes, 1
        if m > RENORM_LIMIT:
            y /= m
            z /= m
        now = y < 0.0
        if now != neg:
            nodes += 1
            neg = now
    return y, z, nodes, 0


# -- grid ---------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """March grid with per-step potential samples.

    ``v0``, ``vm`` and ``v1`` hold V at the start, middle and end of each step,
    evaluated with the analytic form of the segment owning that step, so a jump
    at a grid node is seen exactly.
    """

    x: np.ndarray
    seg: np.ndarray
    v0: np.ndarray
    vm: np.ndarray
    v1: np.ndarray

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def n_steps(self) -> int:
        return self.x.size - 1

    def index_of(self, x: float) -> int:
        i = int(np.argmin(np.abs(self.x - x)))
        if abs(self.x[i] - x) > 1e-12 * max(1.0, abs(x)):
            raise KeyError(x)
        return i

    def reversed_arrays(self):
        return -self.h[::-1], self.v1[::-1], self.vm[::-1], self.v0[::-1]


def make_grid(p: Potential, lo: float, hi: float, n_steps: int, anchors=()) -> Grid:
    """Piecewise-uniform grid on [lo, hi] with every joint and anchor on a node."""
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidParameterError(f"grid needs finite lo < hi, got ({lo}, {hi})")
    cuts = {lo, hi}
    cuts.update(x for x in p.joints if lo < x < hi)
    cuts.update(float(a) for a in anchors if lo < a < hi)
    cuts = sorted(cuts)
    span = hi - lo
    pieces = []
    for a, b in zip(cuts, cuts[1:]):
        n = max(8, int(round(n_steps * (b - a) / span)))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    x = np.concatenate([*pieces, [hi]])
    mid = 0.5 * (x[:-1] + x[1:])
    seg = p.segment_index(mid)
    return Grid(
        x=x,
        seg=seg,
        v0=p.eval_on(seg, x[:-1]),
        vm=p.eval_on(seg, mid),
        v1=p.eval_on(seg, x[1:]),
    )


# -- truncation ---------------------------------------------------------------


def _kappa(p: Potential, energy: float, x: float) -> float:
    return math.sqrt(max(p.eval(x) - energy, 0.0))


def _tail_end(p: Potential, energy: float, x_tp: float, direction: int, exact_constant: bool,
              depth: float) -> float:
    seg = p.segments[0] if direction < 0 else p.segments[-1]
    edge = seg.hi if direction < 0 else seg.lo
    outside = x_tp <= edge if direction < 0 else x_tp >= edge
    if seg.kind == "constant" and outside:
        kappa = math.sqrt(seg.params[0] - energy)
        pad = CONSTANT_TAIL_PAD if exact_constant else max(CONSTANT_TAIL_PAD, depth / kappa)
        return edge + direction * pad
    floor = max(1.0, energy / 10.0)
    x = x_tp
    acc = 0.0
    dx = 0.02 * max(1.0, abs(x_tp))
    for _ in range(200000):
        xn = x + direction * dx
        k0, k1 = _kappa(p, energy, x), _kappa(p, energy, xn)
        km = _kappa(p, energy, 0.5 * (x + xn))
        acc += dx * (k0 + 4.0 * km + k1) / 6.0
        x = xn
        if acc >= depth and p.eval(x) - energy >= floor:
            return x
    raise TruncationError(f"could not reach tail depth {depth} from x={x_tp}")


def tail_domain(p: Potential, energy: float, exact_constant: bool = True,
                depth: float = TAIL_DEPTH) -> tuple[float, float]:
    """Finite integration domain for the decay boundary conditions at ``energy``.

    Non-constant tails extend until the decay integral reaches ``depth`` and
    V - E >= max(1, E/10).  A constant tail admits the exact exponential, so with
    ``exact_constant`` the domain stops just inside it.
    """
    tps = turning_points(p, energy)
    if not tps:
        raise TurningPointError(f"no turning points at E={energy}")
    return (
        _tail_end(p, energy, tps[0], -1, exact_constant, depth),
        _tail_end(p, energy, tps[-1], +1, exact_constant, depth),
    )


def _check_start(p: Potential, energy: float, x_start: float, side: int) -> float:
    seg = p.segments[0] if side < 0 else p.segments[-1]
    v = p.eval(x_start)
    in_tail = seg.lo <= x_start <= seg.hi
    if v - energy <= 0:
        raise TruncationError(f"start x={x_start} is not classically forbidden at E={energy}")
    if v - energy < 1.0 and not (seg.kind == "constant" and in_tail):
        raise TruncationError(f"V - E = {v - energy:.3g} < 1 at start x={x_start}")
    return math.sqrt(v - energy)


# -- traces -------------------------------------------------------------------


@dataclass(frozen=True)
class LogDerivTrace:
    """Sampled solution (psi, psi') on a grid with derived phi and event lists.

    Stored values times ``exp(log_scale)`` give one consistent solution.  For a
    stitched trace the right part is rescaled to meet the left part at the
    matching node in least squares; psi' may jump there if E is not an
    eigenvalue.
    """

    energy: float
    grid: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    log_scale: np.ndarray
    direction: str
    psi_node_xs: np.ndarray
    phi_zero_xs: np.ndarray
    crossing_plus_xs: np.ndarray
    crossing_minus_xs: np.ndarray
    match_index: int | None
    potential: Potential = field(repr=False)
    _base: tuple = field(repr=False)

    @property
    def phi(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.dpsi / self.psi

    @property
    def crossing_xs(self) -> np.ndarray:
        return np.sort(np.concatenate([self.crossing_plus_xs, self.crossing_minus_xs]))

    @property
    def lo(self) -> float:
        return float(self.grid[0])

    @property
    def hi(self) -> float:
        return float(self.grid[-1])

    def covers(self, lo: float, hi: float) -> bool:
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        return self.lo - tol <= lo and hi <= self.hi + tol

    def state_at(self, x):
        """(psi, psi', log_scale) at arbitrary x by one RK4 sub-step from a grid node."""
        return _state_at(self, np.atleast_1d(np.asarray(x, dtype=float)))

    def phi_at(self, x):
        psi, dpsi, _ = self.state_at(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = dpsi / psi
        return float(out[0]) if np.ndim(x) == 0 else out

    def log_abs_psi_at(self, x):
        psi, _, ls = self.state_at(x)
        with np.errstate(divide="ignore"):
            out = np.log(np.abs(psi)) + ls
        return float(out[0]) if np.ndim(x) == 0 else out


def _state_at(t: LogDerivTrace, xs: np.ndarray):
    if xs.size and (xs.min() < t.lo - 1e-12 * max(1, abs(t.lo)) or
                    xs.max() > t.hi + 1e-12 * max(1, abs(t.hi))):
        raise CoverageError(f"points outside trace coverage [{t.lo}, {t.hi}]")
    n = t.grid.size - 1
    steps = np.clip(np.searchsorted(t.grid, xs, side="right") - 1, 0, n - 1)
    return _state_at_steps(t, steps, xs)


def _bisect_events(t: LogDerivTrace, steps: np.ndarray, g, neg0: np.ndarray) -> np.ndarray:
    """Locate one sign change of g(psi, dpsi, x) inside each listed step."""
    if steps.size == 0:
        return np.empty(0)
    lo = t.grid[steps].copy()
    hi = t.grid[steps + 1].copy()
    for _ in range(EVENT_BISECTIONS):
        mid = 0.5 * (lo + hi)
        psi, dpsi, _ = _state_at_steps(t, steps, mid)
        neg = g(psi, dpsi, mid) < 0
        same = neg == neg0
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _state_at_steps(t: LogDerivTrace, steps: np.ndarray, xs: np.ndarray):
    # One RK4 sub-step from the base node of each step; a step marched from the
    # right starts at its right node.
    from_right, bpsi, bdpsi, bls, seg = t._base
    right = from_right[steps]
    xb = np.where(right, t.grid[steps + 1], t.grid[steps])
    s = xs - xb
    p, e = t.potential, t.energy
    a0 = p.eval_on(seg[steps], xb) - e
    am = p.eval_on(seg[steps], xb + 0.5 * s) - e
    a1 = p.eval_on(seg[steps], xs) - e
    y, z = bpsi[steps], bdpsi[steps]
    k1y, k1z = z, a0 * y
    k2y, k2z = z + 0.5 * s * k1z, am * (y + 0.5 * s * k1y)
    k3y, k3z = z + 0.5 * s * k2z, am * (y + 0.5 * s * k2y)
    k4y, k4z = z + s * k3z, a1 * (y + s * k3y)
    psi = y + s / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
    dpsi = z + s / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
    return psi, dpsi, bls[steps]


def _build_trace(p, energy, grid: Grid, psi, dpsi, ls, from_right, s0_psi, s0_dpsi,
                 direction, match_index) -> LogDerivTrace:
    n = grid.n_steps
    base_psi = np.where(from_right, psi[1:], s0_psi)
    base_dpsi = np.where(from_right, dpsi[1:], s0_dpsi)
    base_ls = np.where(from_right, ls[1:], ls[:-1])
    t = LogDerivTrace(
        energy=float(energy), grid=grid.x, psi=psi, dpsi=dpsi, log_scale=ls,
        direction=direction, psi_node_xs=np.empty(0), phi_zero_xs=np.empty(0),
        crossing_plus_xs=np.empty(0), crossing_minus_xs=np.empty(0),
        match_index=match_index, potential=p,
        _base=(from_right, base_psi, base_dpsi, base_ls, grid.seg),
    )
    e_psi, e_dpsi = psi[1:], dpsi[1:]
    steps = np.arange(n)

    def events(g0, g1, g):
        neg0 = g0 < 0
        idx = steps[neg0 != (g1 < 0)]
        return _bisect_events(t, idx, g, neg0[idx]), idx

    nodes, _ = events(s0_psi, e_psi, lambda y, z, x: y)
    zeros, _ = events(s0_dpsi, e_dpsi, lambda y, z, x: z)

    # Crossings only where the whole step is classically forbidden.
    forb = (grid.v0 > energy) & (grid.v1 > energy)
    k0 = np.sqrt(np.maximum(grid.v0 - energy, 0.0))
    k1 = np.sqrt(np.maximum(grid.v1 - energy, 0.0))
    found = {}
    for sign in (+1, -1):
        g0 = s0_dpsi - sign * k0 * s0_psi
        g1 = e_dpsi - sign * k1 * e_psi
        # phi can ride exactly on +-kappa (constant tails); rounding there is not a crossing.
        clear = (np.abs(g0) > CROSS_TOL * (np.abs(s0_dpsi) + k0 * np.abs(s0_psi))) & (
            np.abs(g1) > CROSS_TOL * (np.abs(e_dpsi) + k1 * np.abs(e_psi)))
        neg0 = g0 < 0
        idx = steps[forb & clear & (neg0 != (g1 < 0))]

        def g(y, z, x, idx=idx, sign=sign):
            kap = np.sqrt(np.maximum(p.eval_on(grid.seg[idx], x) - energy, 0.0))
            return z - sign * kap * y

        inner = _bisect_events(t, idx, g, neg0[idx])
        # A jump in kappa at a node can carry phi across +-kappa on its own.
        jn = steps[1:]
        jump = forb[:-1] & forb[1:] & (grid.v1[:-1] != grid.v0[1:])
        ga = e_dpsi[:-1] - sign * k1[:-1] * e_psi[:-1]
        gb = s0_dpsi[1:] - sign * k0[1:] * s0_psi[1:]
        at_nodes = grid.x[jn[jump & ((ga < 0) != (gb < 0))]]
        found[sign] = _dedupe(np.concatenate([inner, at_nodes]))

    object.__setattr__(t, "psi_node_xs", _dedupe(nodes))
    object.__setattr__(t, "phi_zero_xs", _dedupe(zeros))
    object.__setattr__(t, "crossing_plus_xs", found[+1])
    object.__setattr__(t, "crossing_minus_xs", found[-1])
    return t


def _dedupe(xs: np.ndarray) -> np.ndarray:
    # The two sides of a join can report the same event once each.
    xs = np.sort(xs)
    if xs.size < 2:
        return xs
    keep = np.concatenate([[True], np.diff(xs) > EVENT_MERGE * np.maximum(1.0, np.abs(xs[1:]))])
    return xs[keep]


def _record(grid_h, v0, vm, v1, energy, y0, z0):
    n = grid_h.size
    psi = np.empty(n + 1)
    dpsi = np.empty(n + 1)
    ls = np.empty(n + 1)
    status = _march_record(grid_h, v0, vm, v1, float(energy), float(y0), float(z0), psi, dpsi, ls)
    if status:
        raise IntegrationOverflowError("renormalization could not keep (psi, psi') finite")
    return psi, dpsi, ls


def _march_left(grid: Grid, energy: float, kappa0: float):
    return _record(grid.h, grid.v0, grid.vm, grid.v1, energy, 1.0, kappa0)


def _march_right(grid: Grid, energy: float, kappa0: float):
    h, v0, vm, v1 = grid.reversed_arrays()
    psi, dpsi, ls = _record(h, v0, vm, v1, energy, 1.0, -kappa0)
    return psi[::-1].copy(), dpsi[::-1].copy(), ls[::-1].copy()


def _check_steps(n_steps: int) -> None:
    if n_steps < MIN_N_STEPS:
        raise InvalidParameterError(f"n_steps must be >= {MIN_N_STEPS}, got {n_steps}")


def integrate_left(p: Potential, energy: float, x_start: float, x_end: float,
                   n_steps: int = DEFAULT_N_STEPS) -> LogDerivTrace:
    """March from the left tail (psi = 1, psi' = kappa) to ``x_end``."""
    _check_steps(n_steps)
    kappa0 = _check_start(p, energy, x_start, -1)
    grid = make_grid(p, x_start, x_end, n_steps)
    psi, dpsi, ls = _march_left(grid, energy, kappa0)
    n = grid.n_steps
    return _build_trace(p, energy, grid, psi, dpsi, ls, np.zeros(n, bool), psi[:-1], dpsi[:-1],
                        LEFT_TO_RIGHT, None)


def integrate_right(p: Potential, energy: float, x_start: float, x_end: float,
                    n_steps: int = DEFAULT_N_STEPS) -> LogDerivTrace:
    """March from the right tail (psi = 1, psi' = -kappa) leftward to ``x_end``."""
    _check_steps(n_steps)
    kappa0 = _check_start(p, energy, x_start, +1)
    grid = make_grid(p, x_end, x_start, n_steps)
    psi, dpsi, ls = _march_right(grid, energy, kappa0)
    n = grid.n_steps
    return _build_trace(p, energy, grid, psi, dpsi, ls, np.ones(n, bool), psi[:-1], dpsi[:-1],
                        RIGHT_TO_LEFT, None)


def _match_candidates(p: Potential, energy: float, lo: float, hi: float) -> list[float]:
    # Off-centre so the join does not sit on the symmetry point of a symmetric well,
    # where psi or psi' vanishes exactly.
    part = partition(p, energy)
    pts = [r.lo + JOIN_FRACTION * (r.hi - r.lo) for r in part.allowed()]
    return [x for x in pts if lo < x < hi]


def full_trace(p: Potential, energy: float, n_steps: int = DEFAULT_N_STEPS,
               x_match: float | None = None, domain: tuple[float, float] | None = None
               ) -> LogDerivTrace:
    """Whole-line trace joined from a left march and a right march.

    Without ``x_match`` the join is placed at the allowed-region midpoint where
    the phase mismatch is least sensitive to the energy error, judged by the
    weight of psi^2 on either side relative to the amplitude at the join.
    """
    _check_steps(n_steps)
    lo, hi = domain if domain is not None else tail_domain(p, energy)
    kl = _check_start(p, energy, lo, -1)
    kr = _check_start(p, energy, hi, +1)
    cands = [x_match] if x_match is not None else _match_candidates(p, energy, lo, hi)
    if not cands:
        cands = [0.5 * (lo + hi)]
    grid = make_grid(p, lo, hi, n_steps, anchors=cands)
    lpsi, ldpsi, lls = _march_left(grid, energy, kl)
    rpsi, rdpsi, rls = _march_right(grid, energy, kr)

    h = np.concatenate([[0.0], grid.h])
    best, best_m = math.inf, None
    for xm in cands:
        m = grid.index_of(xm)
        wl = np.sum(lpsi[: m + 1] ** 2 * h[: m + 1] * np.exp(2 * (lls[: m + 1] - lls[m])))
        wl /= lpsi[m] ** 2 + ldpsi[m] ** 2
        hr = np.concatenate([grid.h, [0.0]])
        wr = np.sum(rpsi[m:] ** 2 * hr[m:] * np.exp(2 * (rls[m:] - rls[m])))
        wr /= rpsi[m] ** 2 + rdpsi[m] ** 2
        if wl + wr < best:
            best, best_m = wl + wr, m
    m = best_m

    c = (lpsi[m] * rpsi[m] + ldpsi[m] * rdpsi[m]) / (rpsi[m] ** 2 + rdpsi[m] ** 2)
    if c == 0.0:
        c = 1.0
    psi = np.concatenate([lpsi[: m + 1], c * rpsi[m + 1:]])
    dpsi = np.concatenate([ldpsi[: m + 1], c * rdpsi[m + 1:]])
    # Re-anchor right scales so stored * exp(ls) is one solution across the join.
    ls = np.concatenate([lls[: m + 1], rls[m + 1:] - rls[m] + lls[m]])
    n = grid.n_steps
    from_right = np.arange(n) >= m
    s0_psi = psi[:-1].copy()
    s0_dpsi = dpsi[:-1].copy()
    s0_psi[m] = c * rpsi[m]
    s0_dpsi[m] = c * rdpsi[m]
    # Steps from the right use the right-march state at the join as their start.
    t = _build_trace(p, energy, grid, psi, dpsi, ls, from_right, s0_psi, s0_dpsi, STITCHED, m)
    return t


# -- shooting -----------------------------------------------------------------


class Shooter:
    """Fixed grid and join point for repeated left/right marches at many energies."""

    def __init__(self, p: Potential, domain: tuple[float, float], x_match: float,
                 n_steps: int = DEFAULT_N_STEPS):
        _check_steps(n_steps)
        lo, hi = domain
        if not lo < x_match < hi:
            raise InvalidParameterError(f"x_match={x_match} outside domain ({lo}, {hi})")
        self.p = p
        self.domain = (float(lo), float(hi))
        self.x_match = float(x_match)
        self.grid = make_grid(p, lo, hi, n_steps, anchors=[x_match])
        m = self.grid.index_of(x_match)
        g = self.grid
        self._left = (g.h[:m].copy(), g.v0[:m].copy(), g.vm[:m].copy(), g.v1[:m].copy())
        hr, v0r, vmr, v1r = g.reversed_arrays()
        k = g.n_steps - m
        self._right = (hr[:k].copy(), v0r[:k].copy(), vmr[:k].copy(), v1r[:k].copy())
        self._vl = p.eval(lo)
        self._vr = p.eval(hi)

    def ends(self, energy: float):
        """(psi_L, dpsi_L, nodes_L, psi_R, dpsi_R, nodes_R) at the join."""
        if not (self._vl > energy and self._vr > energy):
            raise TruncationError(f"E={energy} is not below V at both domain ends")
        kl = math.sqrt(self._vl - energy)
        kr = math.sqrt(self._vr - energy)
        yl, zl, nl, sl = _march_end(*self._left, float(energy), 1.0, kl)
        yr, zr, nr, sr = _march_end(*self._right, float(energy), 1.0, -kr)
        if sl or sr:
            raise IntegrationOverflowError(f"march overflow at E={energy}")
        return yl, zl, nl, yr, zr, nr

    def phase(self, energy: float) -> float:
        """Unwrapped phase mismatch in units of pi.

        Continuous and increasing in E; equals k exactly at the eigenvalue with
        k nodes.  Tends to a value in (-1, 0) below the spectrum.
        """
        yl, zl, nl, yr, zr, nr = self.ends(energy)
        tl = nl * math.pi + math.atan2(yl, zl) % math.pi
        tr = math.atan2(yr, zr) % math.pi - nr * math.pi
        return (tl - tr) / math.pi

    def mismatch(self, energy: float) -> float:
        """atan(phi_L) - atan(phi_R), wrapped into (-pi/2, pi/2]."""
        yl, zl, _, yr, zr, _ = self.ends(energy)
        d = math.atan2(zl, yl) - math.atan2(zr, yr)
        d = (d + 0.5 * math.pi) % math.pi - 0.5 * math.pi
        return 0.5 * math.pi if d == -0.5 * math.pi else d


def matching_mismatch(p: Potential, energy: float, x_match: float,
                      n_steps: int = DEFAULT_N_STEPS,
                      domain: tuple[float, float] | None = None) -> float:
    """atan(phi_L) - atan(phi_R) at ``x_match``, wrapped into (-pi/2, pi/2]."""
    dom = domain if domain is not None else tail_domain(p, energy)
    return Shooter(p, dom, x_match, n_steps).mismatch(energy)


# -- counting -----------------------------------------------------------------


def _in(xs: np.ndarray, interval) -> int:
    lo, hi = interval
    return int(np.count_nonzero((xs >= lo) & (xs < hi)))


def count_phi_zeros(t: LogDerivTrace, interval) -> int:
    """Zeros of phi (extrema of psi) in [lo, hi)."""
    lo, hi = interval
    if not t.covers(max(lo, t.lo), min(hi, t.hi)):
        raise CoverageError(f"interval {interval} outside trace")
    return _in(t.phi_zero_xs, interval)


def count_crossings(t: LogDerivTrace, p: Potential, energy: float, interval,
                    branch: str = "+") -> int:
    """Solutions of phi = +kappa (``branch="+"``), -kappa (``"-"``) or both in [lo, hi)."""
    if branch == "+":
        return _in(t.crossing_plus_xs, interval)
    if branch == "-":
        return _in(t.crossing_minus_xs, interval)
    if branch == "both":
        return _in(t.crossing_xs, interval)
    raise InvalidParameterError(f"branch must be '+', '-' or 'both', got {branch!r}")


# -- films --------------------------------------------------------------------


@dataclass(frozen=True)
class FilmResult:
    """Outcome of the film recursion across one forbidden interval.

    Attributes:
        phi_out: phi at the far edge (the right edge, or the left one when reversed).
        m_total: Films in which phi passes through zero.
        m_plus: Film interfaces at which phi - kappa changes sign.
        m_minus: Film interfaces at which phi + kappa changes sign.
        value: Ledger, the sum of kappa_j d and the interface arctanh jumps.
        kappa_sum: Sum of kappa_j d alone.
        per_film_terms: Rows of (arctanh in, arctanh out, m) per film.
    """

    phi_out: float
    m_total: int
    m_plus: int
    m_minus: int
    value: float
    kappa_sum: float
    per_film_terms: np.ndarray
    reverse: bool


def _re_arctanh(kappa: float, psi: float, dpsi: float) -> float:
    # Real part of arctanh(kappa / phi); |z| > 1 takes the arctanh(1/z) branch.
    a, b = kappa * psi, dpsi
    if abs(a) < abs(b):
        return math.atanh(a / b)
    if a == 0.0:
        return 0.0
    r = b / a
    r = max(min(r, 1.0 - 2.0**-52), -1.0 + 2.0**-52)
    return math.atanh(r)


def film_propagate(p: Potential, energy: float, interval, n_films: int, phi_in: float,
                   reverse: bool = False) -> FilmResult:
    """Carry phi across a forbidden interval through ``n_films`` constant slabs.

    Each slab holds V at its midpoint.  The update is done on (psi, psi') scaled
    by 1/cosh, which reproduces
    ``phi_j = k (k tanh(k d) + phi_{j-1}) / (k + phi_{j-1} tanh(k d))``
    without a division, so no swap to the coth form is needed.  With
    ``reverse`` the march starts at the right edge and phi_in is phi there.
    """
    lo, hi = (float(v) for v in interval)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidParameterError(f"film interval must be finite with lo < hi, got {interval}")
    if n_films < MIN_FILMS:
        raise InvalidParameterError(f"n_films must be >= {MIN_FILMS}, got {n_films}")
    if not math.isfinite(phi_in):
        raise InvalidParameterError("phi_in must be finite")
    d = (hi - lo) / n_films
    mids = lo + (np.arange(n_films) + 0.5) * d
    v = p.eval(mids) - energy
    if np.any(v <= 0):
        raise InvalidParameterError(f"interval {interval} is not classically forbidden at E={energy}")
    kap = np.sqrt(v)
    if reverse:
        kap = kap[::-1]
    tanh = np.tanh(kap * d)
    # Reverse marching is the forward recursion for chi = -psi'.
    y, z = 1.0, (-phi_in if reverse else phi_in)
    terms = np.empty((n_films, 3))
    m_total = cross_a = cross_b = 0
    for j in range(n_films):
        k, t = kap[j], tanh[j]
        if j and kap[j - 1] != k:
            kp = kap[j - 1]
            if (z - kp * y < 0) != (z - k * y < 0):
                cross_a += 1
            if (z + kp * y < 0) != (z + k * y < 0):
                cross_b += 1
        z_before = z
        a_in = _re_arctanh(k, y, z)
        y, z = y + z * t / k, y * k * t + z
        s = max(abs(y), abs(z))
        y, z = y / s, z / s
        # psi' changes sign at most once per slab, and never together with psi.
        m = int((z_before < 0) != (z < 0))
        m_total += m
        terms[j] = (a_in, _re_arctanh(k, y, z), m)
    with np.errstate(divide="ignore"):
        phi_out = z / y if y != 0.0 else math.copysign(math.inf, z)
    if reverse:
        phi_out = -phi_out
        cross_a, cross_b = cross_b, cross_a
    # Inside a slab the arctanh term advances by exactly k d, so the ledger is
    # summed as k d plus interface jumps; telescoping the end terms would lose
    # everything when phi sits on +-kappa at an edge.
    kappa_sum = float(np.sum(kap) * d)
    return FilmResult(
        phi_out=float(phi_out),
        m_total=m_total,
        m_plus=cross_a,
        m_minus=cross_b,
        value=kappa_sum + float(np.sum(terms[1:, 0] - terms[:-1, 1])),
        kappa_sum=kappa_sum,
        per_film_terms=terms,
        reverse=reverse,
    )
