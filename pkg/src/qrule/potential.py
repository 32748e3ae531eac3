"""Piecewise-analytic confining potentials and their turning-point geometry.

A :class:`Potential` is an ordered list of :class:`Segment` objects that tile
the real line.  Each segment carries one analytic form (constant, shifted
quadratic or polynomial), so values and slopes are exact and turning points
can be found in closed form or by a guarded sign scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidParameterError,
    JointDiscontinuityError,
    NonConfiningError,
    TangencyError,
    TurningPointError,
)

MAX_POLY_DEGREE = 8
SCAN_POINTS = 1024
MERGE_TOL = 1e-12
TURNING_POINT_TOL = 1e-10
JUMP_TOL = 1e-12

ALLOWED = "allowed"
FORBIDDEN = "forbidden"


@dataclass(frozen=True)
class Segment:
    """One analytic piece of a potential on ``[lo, hi)``.

    ``kind`` is ``"constant"`` (params ``(c,)``), ``"quadratic"`` (params
    ``(a, s, c)`` for ``a*(x - s)**2 + c``) or ``"polynomial"`` (params are
    coefficients from the constant term upward).
    """

    lo: float
    hi: float
    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidParameterError(f"segment needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind == "constant":
            if len(self.params) != 1:
                raise InvalidParameterError("constant segment takes one parameter")
        elif self.kind == "quadratic":
            if len(self.params) != 3:
                raise InvalidParameterError("quadratic segment takes (a, s, c)")
        elif self.kind == "polynomial":
            coeffs = np.trim_zeros(np.asarray(self.params, dtype=float), "b")
            if coeffs.size == 0:
                coeffs = np.zeros(1)
            if coeffs.size - 1 > MAX_POLY_DEGREE:
                raise InvalidParameterError(
                    f"polynomial degree {coeffs.size - 1} exceeds {MAX_POLY_DEGREE}"
                )
            object.__setattr__(self, "params", tuple(float(c) for c in coeffs))
        else:
            raise InvalidParameterError(f"unknown segment kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(c) for c in self.params))

    @classmethod
    def constant(cls, lo: float, hi: float, c: float) -> "Segment":
        return cls(lo, hi, "constant", (c,))

    @classmethod
    def quadratic(cls, lo: float, hi: float, a: float, s: float, c: float) -> "Segment":
        return cls(lo, hi, "quadratic", (a, s, c))

    @classmethod
    def polynomial(cls, lo: float, hi: float, coeffs: Sequence[float]) -> "Segment":
        return cls(lo, hi, "polynomial", tuple(coeffs))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.params[0])
        if self.kind == "quadratic":
            a, s, c = self.params
            return a * (x - s) ** 2 + c
        return np.polynomial.polynomial.polyval(x, self.params)

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(x)
        if self.kind == "quadratic":
            a, s, _ = self.params
            return 2.0 * a * (x - s)
        der = np.polynomial.polynomial.polyder(self.params)
        return np.polynomial.polynomial.polyval(x, der)

    def limit(self, direction: int) -> float:
        """Value of the analytic form as x -> direction * infinity."""
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "quadratic":
            a = self.params[0]
            return math.copysign(math.inf, a) if a != 0 else self.params[2]
        coeffs = self.params
        deg = len(coeffs) - 1
        if deg == 0:
            return coeffs[0]
        lead = coeffs[-1] * (direction**deg)
        return math.copysign(math.inf, lead)

    def critical_points(self) -> list[float]:
        """Stationary points of the analytic form inside the open segment."""
        if self.kind == "constant":
            return []
        if self.kind == "quadratic":
            pts = [self.params[1]] if self.params[0] != 0 else []
        else:
            der = np.polynomial.polynomial.polyder(self.params)
            if len(der) < 2 and (len(der) == 0 or der[0] != 0):
                pts = []
            else:
                roots = np.polynomial.polynomial.polyroots(der)
                pts = [r.real for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real))]
        return sorted(x for x in pts if self.lo < x < self.hi)


@dataclass(frozen=True)
class Region:
    lo: float
    hi: float
    kind: str

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def midpoint(self) -> float:
        if math.isinf(self.lo) and math.isinf(self.hi):
            return 0.0
        if math.isinf(self.lo):
            return self.hi - 1.0
        if math.isinf(self.hi):
            return self.lo + 1.0
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class RegionPartition:
    """Turning points and alternating regions of a potential at one energy."""

    energy: float
    turning_points: tuple[float, ...]
    regions: tuple[Region, ...]
    continuity: tuple[bool, ...]

    @property
    def inner_regions(self) -> tuple[Region, ...]:
        """Regions between the outermost turning points."""
        return self.regions[1:-1]

    def allowed(self) -> list[Region]:
        return [r for r in self.regions if r.kind == ALLOWED]

    def forbidden(self) -> list[Region]:
        return [r for r in self.regions if r.kind == FORBIDDEN]

    def is_continuous_at(self, x: float) -> bool:
        for tp, flag in zip(self.turning_points, self.continuity):
            if abs(tp - x) <= MERGE_TOL * max(1.0, abs(x)):
                return flag
        raise KeyError(x)


@dataclass(frozen=True)
class Potential:
    segments: tuple[Segment, ...]
    name: str = "custom"
    joints: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise InvalidParameterError("a potential needs at least one segment")
        if segs[0].lo != -math.inf or segs[-1].hi != math.inf:
            raise InvalidParameterError("segments must cover the whole real line")
        for left, right in zip(segs, segs[1:]):
            if left.hi != right.lo:
                raise InvalidParameterError(
                    f"segments leave a gap or overlap at {left.hi} / {right.lo}"
                )
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "joints", np.array([s.lo for s in segs[1:]], dtype=float))

    # -- evaluation -------------------------------------------------------

    def segment_index(self, x):
        """Index of the segment owning x; a joint belongs to its right segment."""
        return np.searchsorted(self.joints, x, side="right")

    def eval_on(self, idx, x):
        """Evaluate each x with the analytic form of segment ``idx`` (vectorized)."""
        idx = np.asarray(idx)
        x = np.asarray(x, dtype=float)
        out = np.empty(np.broadcast(idx, x).shape)
        idx, x = np.broadcast_arrays(idx, x)
        for j in np.unique(idx):
            mask = idx == j
            out[mask] = self.segments[j].value(x[mask])
        return out

    def slope_on(self, idx, x):
        idx = np.asarray(idx)
        x = np.asarray(x, dtype=float)
        out = np.empty(np.broadcast(idx, x).shape)
        idx, x = np.broadcast_arrays(idx, x)
        for j in np.unique(idx):
            mask = idx == j
            out[mask] = self.segments[j].slope(x[mask])
        return out

    def eval(self, x):
        """V(x); at a joint the right segment's value is returned."""
        scalar = np.ndim(x) == 0
        out = self.eval_on(self.segment_index(x), x)
        return float(out) if scalar else out

    __call__ = eval

    def eval_derivative(self, x):
        """V'(x) from the analytic form of the containing segment."""
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        for xj in xs[np.isin(xs, self.joints)]:
            if not self.is_continuous_at(xj):
                raise JointDiscontinuityError(f"V jumps at x={xj}; slope undefined")
        out = self.slope_on(self.segment_index(xs), xs)
        return float(out[0]) if scalar else out

    def one_sided(self, x: float, side: int) -> float:
        """Limit of V at x from the right (side=+1) or left (side=-1)."""
        idx = int(self.segment_index(x))
        if side < 0 and idx > 0 and x == self.segments[idx].lo:
            idx -= 1
        return float(self.segments[idx].value(x))

    def is_continuous_at(self, x: float) -> bool:
        left, right = self.one_sided(x, -1), self.one_sided(x, +1)
        return abs(left - right) <= JUMP_TOL * max(1.0, abs(left), abs(right))

    def tail_limits(self) -> tuple[float, float]:
        return self.segments[0].limit(-1), self.segments[-1].limit(+1)

    def minimum(self) -> float:
        """Global minimum of V, exact for the supported analytic forms."""
        lo_tail, hi_tail = self.tail_limits()
        if lo_tail == -math.inf or hi_tail == -math.inf:
            raise NonConfiningError("potential is unbounded below")
        cands = []
        for seg in self.segments:
            cands.extend(float(seg.value(x)) for x in seg.critical_points())
            for edge in (seg.lo, seg.hi):
                if math.isfinite(edge):
                    cands.append(float(seg.value(edge)))
            if seg.kind == "constant":
                cands.append(seg.params[0])
        return min(cands)

    def breakpoints(self, lo: float, hi: float) -> list[float]:
        """Joints strictly inside (lo, hi)."""
        return [float(j) for j in self.joints if lo < j < hi]


# -- turning points -----------------------------------------------------------


def _bisect(f, a: float, b: float, fa: float) -> float:
    """Bisection on a bracketed sign change down to float resolution."""
    for _ in range(200):
        m = 0.5 * (a + b)
        if m <= a or m >= b or b - a <= 1e-15 * max(1.0, abs(m)):
            break
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _finite_span(seg: Segment, energy: float) -> tuple[float, float]:
    lo, hi = seg.lo, seg.hi
    if math.isfinite(lo) and math.isfinite(hi):
        return lo, hi
    # Cauchy bound on the roots of p(x) - E keeps the scan finite.
    coeffs = np.array(seg.params, dtype=float)
    coeffs[0] -= energy
    bound = 1.0 + float(np.max(np.abs(coeffs[:-1] / coeffs[-1]))) if coeffs.size > 1 else 1.0
    return max(lo, -bound - 1.0), min(hi, bound + 1.0)


def _segment_roots(seg: Segment, energy: float) -> list[float]:
    scale = max(1.0, abs(energy))
    if seg.kind == "constant":
        if abs(seg.params[0] - energy) <= 1e-12 * scale:
            raise TangencyError(f"energy {energy} coincides with a flat segment")
        return []
    if seg.kind == "quadratic":
        a, s, c = seg.params
        if a == 0:
            return _segment_roots(Segment.constant(seg.lo, seg.hi, c), energy)
        d = (energy - c) / a
        if abs(energy - c) <= 1e-12 * scale and seg.lo < s < seg.hi:
            raise TangencyError(f"energy {energy} touches the quadratic extremum at x={s}")
        if d < 0:
            return []
        r = math.sqrt(d)
        return [x for x in (s - r, s + r) if seg.lo <= x <= seg.hi]

    f = lambda x: float(seg.value(x)) - energy  # noqa: E731
    for xc in seg.critical_points():
        if abs(f(xc)) <= 1e-10 * scale:
            raise TangencyError(f"energy {energy} touches a polynomial extremum at x={xc}")
    lo, hi = _finite_span(seg, energy)
    grid = np.linspace(lo, hi, SCAN_POINTS + 1)
    # Critical points split the segment into monotone pieces, so no sign change is skipped.
    grid = np.unique(np.concatenate([grid, seg.critical_points()]))
    vals = seg.value(grid) - energy
    roots = []
    for i in range(grid.size - 1):
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(float(grid[i]))
        elif fa * fb < 0:
            roots.append(_bisect(f, float(grid[i]), float(grid[i + 1]), float(fa)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def _turning_points_with_flags(p: Potential, energy: float) -> list[tuple[float, bool]]:
    lo_tail, hi_tail = p.tail_limits()
    if not (energy < lo_tail and energy < hi_tail):
        raise NonConfiningError(
            f"energy {energy} is not below both tail limits ({lo_tail}, {hi_tail})"
        )
    found: list[tuple[float, bool]] = []
    for seg in p.segments:
        for x in _segment_roots(seg, energy):
            found.append((x, True))
    for xj in p.joints:
        left, right = p.one_sided(xj, -1), p.one_sided(xj, +1)
        if abs(left - right) <= JUMP_TOL * max(1.0, abs(left), abs(right)):
            continue
        # A root of a continuous piece that lands on a jump is replaced by the joint.
        found = [(x, c) for x, c in found if abs(x - xj) > MERGE_TOL * max(1.0, abs(xj))]
        if (left - energy) * (right - energy) < 0:
            found.append((float(xj), False))
        elif left == energy or right == energy:
            raise TangencyError(f"energy {energy} equals a one-sided limit at joint {xj}")
    found.sort()
    merged: list[tuple[float, bool]] = []
    for x, c in found:
        if merged and abs(x - merged[-1][0]) <= MERGE_TOL * max(1.0, abs(x)):
            continue
        merged.append((x, c))
    return merged


def turning_points(p: Potential, energy: float) -> list[float]:
    """Sorted real solutions of V(x) = E, jumps across E included."""
    return [x for x, _ in _turning_points_with_flags(p, energy)]


def partition(p: Potential, energy: float, expect: int | None = None) -> RegionPartition:
    """Split the line into alternating forbidden/allowed regions at ``energy``.

    ``expect`` optionally pins the number of turning points; a mismatch is a
    :class:`TurningPointError`.
    """
    tps = _turning_points_with_flags(p, energy)
    if not tps:
        raise TurningPointError(f"no turning points at E={energy}: energy is below V everywhere")
    if len(tps) % 2:
        raise TurningPointError(f"odd number of turning points ({len(tps)}) at E={energy}")
    if expect is not None and len(tps) != expect:
        raise TurningPointError(
            f"expected {expect} turning points at E={energy}, found {len(tps)}"
        )
    xs = [x for x, _ in tps]
    edges = [-math.inf, *xs, math.inf]
    regions = []
    for lo, hi in zip(edges, edges[1:]):
        probe = Region(lo, hi, FORBIDDEN).midpoint()
        kind = FORBIDDEN if p.eval(probe) > energy else ALLOWED
        regions.append(Region(lo, hi, kind))
    for i, r in enumerate(regions):
        want = FORBIDDEN if i % 2 == 0 else ALLOWED
        if r.kind != want:
            raise TurningPointError(
                f"region ({r.lo}, {r.hi}) at E={energy} is {r.kind}, expected {want}"
            )
    return RegionPartition(energy, tuple(xs), tuple(regions), tuple(c for _, c in tps))


# -- builders -----------------------------------------------------------------


def double_square_well(x_a, x_b, x_c, x_d, V_I, V_0, V_F) -> Potential:
    """Two flat wells at V=0 on (x_a, x_b) and (x_c, x_d) between steps V_I, V_0, V_F."""
    if not (x_a < x_b < x_c < x_d):
        raise InvalidParameterError("double_square_well needs x_a < x_b < x_c < x_d")
    for label, v in (("V_I", V_I), ("V_0", V_0), ("V_F", V_F)):
        if not v > 0:
            raise InvalidParameterError(f"{label} must be positive, got {v}")
    inf = math.inf
    segs = (
        Segment.constant(-inf, x_a, V_I),
        Segment.constant(x_a, x_b, 0.0),
        Segment.constant(x_b, x_c, V_0),
        Segment.constant(x_c, x_d, 0.0),
        Segment.constant(x_d, inf, V_F),
    )
    return Potential(segs, name="double_square_well")


def biharmonic(alpha: float, beta: float, gamma: float, regime: bool = True) -> Potential:
    """(x + alpha)^2 for x <= 0 joined to (x - beta)^2 - gamma for x > 0.

    With ``regime`` set, alpha > 0 and alpha^2 = beta^2 - gamma are enforced,
    which makes V continuous at the joint.
    """
    if regime:
        if not alpha > 0:
            raise InvalidParameterError(f"alpha must be positive, got {alpha}")
        if abs(alpha**2 - (beta**2 - gamma)) > 1e-12 * max(1.0, alpha**2):
            raise InvalidParameterError(
                f"alpha^2 = beta^2 - gamma violated: {alpha**2} vs {beta**2 - gamma}"
            )
    segs = (
        Segment.quadratic(-math.inf, 0.0, 1.0, -alpha, 0.0),
        Segment.quadratic(0.0, math.inf, 1.0, beta, -gamma),
    )
    return Potential(segs, name="biharmonic")


def harmonic() -> Potential:
    """V(x) = x^2, eigenvalues 2n + 1."""
    return Potential((Segment.quadratic(-math.inf, math.inf, 1.0, 0.0, 0.0),), name="harmonic")


def polynomial(coeffs: Sequence[float]) -> Potential:
    """Single polynomial segment, coefficients from the constant term upward."""
    return Potential((Segment.polynomial(-math.inf, math.inf, coeffs),), name="polynomial")


def from_segments(segments: Iterable[Segment | tuple]) -> Potential:
    """Build from Segment objects or ``(lo, hi, kind, params)`` tuples."""
    segs = []
    for s in segments:
        if isinstance(s, Segment):
            segs.append(s)
        else:
            lo, hi, kind, params = s
            segs.append(Segment(float(lo), float(hi), kind, tuple(params)))
    return Potential(tuple(segs))


BUILDERS = {
    "double_square_well": double_square_well,
    "biharmonic": biharmonic,
    "harmonic": harmonic,
    "polynomial": polynomial,
    "segments": from_segments,
}


def build(name: str, **params) -> Potential:
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown potential builder {name!r}") from None
    return builder(**params)
