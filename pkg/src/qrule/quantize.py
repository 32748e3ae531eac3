"""Region-by-region evaluation of the exact quantization rule.

For an allowed region (a, b) the identity

    int [k + k' phi / (k^2 + phi^2)] dx = N_ab pi + arctan(k_b/phi_b) - arctan(k_a/phi_a)

holds for any solution, with N_ab the number of phi zeros and principal
arctan.  The arctan terms vanish at continuous turning points (k = 0) and are
collected as the discontinuity correction otherwise.  Forbidden regions enter
as -m pi, where m counts phi zeros found by the film recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CoverageError,
    DegenerateStateError,
    InvalidParameterError,
    QuadratureError,
    TurningPointError,
)
from .potential import ALLOWED, FORBIDDEN, Potential, Region, RegionPartition, partition
from .propagate import (
    DEFAULT_N_STEPS,
    LogDerivTrace,
    count_crossings,
    count_phi_zeros,
    film_propagate,
    full_trace,
)

GL_NODES = 256
DEFAULT_FILMS = 4096
MIN_RULE_FILMS = 1024
REPORT_TOL = 1e-3 * math.pi

# Turning-point layers: fraction of the piece, innermost distance relative to
# |x|, panel width in tau = -log(distance / width), and the k^2 threshold that
# marks an endpoint as a turning point.
LAYER_FRACTION = 0.25
LAYER_FLOOR = 1e-10
LAYER_PANEL = 0.5
TURNING_K2 = 1e-12

_GL_U, _GL_W = np.polynomial.legendre.leggauss(GL_NODES)
_LAYER_U, _LAYER_W = np.polynomial.legendre.leggauss(12)
_THETA = 0.5 * math.pi * _GL_U
_SIN = np.sin(_THETA)
_COS_W = np.cos(_THETA) * _GL_W * 0.5 * math.pi


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class RegionContribution:
    """One region's share of the rule.

    ``value`` is the assembled contribution: momentum minus correction for an
    allowed region, -m pi from the film ledger for a forbidden one.
    ``nearest_multiple`` and ``residual`` refer to ``value`` with the region's
    own boundary terms removed.
    """

    interval: tuple[float, float]
    kind: str
    momentum_integral: float
    correction_integral: float
    boundary_term_left: float
    boundary_term_right: float
    value: float
    nearest_multiple: int
    residual: float
    phi_zeros: int
    crossings_plus: int
    crossings_minus: int

    @property
    def value_over_pi(self) -> float:
        return (self.value - self.boundary_term_left - self.boundary_term_right) / math.pi


@dataclass(frozen=True)
class QuantizationReport:
    """Rule check at one energy.

    ``total_value`` is the sum of region values plus ``discontinuity_correction``.
    ``total_N`` is None when the total is farther than the report tolerance
    from a multiple of pi.
    """

    energy: float
    regions: tuple[RegionContribution, ...]
    discontinuity_correction: float
    total_value: float
    total_N: int | None
    total_residual: float
    psi_nodes: int

    @property
    def is_eigenstate(self) -> bool:
        return self.total_N is not None and self.total_N == self.psi_nodes + 1


# -- quadrature ---------------------------------------------------------------


def _interval(region) -> tuple[float, float]:
    if isinstance(region, Region):
        return region.lo, region.hi
    lo, hi = region
    return float(lo), float(hi)


def _pieces(p: Potential, lo: float, hi: float, extra=()) -> list[tuple[float, float]]:
    cuts = sorted({lo, hi, *p.breakpoints(lo, hi), *(x for x in extra if lo < x < hi)})
    return list(zip(cuts, cuts[1:]))


def _nodes(a: float, b: float):
    """Quadrature nodes and weights on [a, b] after x = m + h sin(theta)."""
    m, h = 0.5 * (a + b), 0.5 * (b - a)
    return m + h * _SIN, h * _COS_W


def _radicand(p: Potential, energy: float, a: float, b: float, sign: int):
    x, w = _nodes(a, b)
    seg = np.full(x.shape, int(p.segment_index(0.5 * (a + b))))
    r = sign * (energy - p.eval_on(seg, x))
    return x, w, seg, r


def _root_integral(p: Potential, energy: float, region, sign: int) -> float:
    lo, hi = _interval(region)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidParameterError(f"region {region} must be finite; truncate tails first")
    if hi <= lo:
        return 0.0
    total = 0.0
    for a, b in _pieces(p, lo, hi):
        _, w, _, r = _radicand(p, energy, a, b, sign)
        if np.any(r < -1e-12 * max(1.0, abs(energy))):
            what = "V > E" if sign > 0 else "V < E"
            raise QuadratureError(f"{what} inside region ({lo}, {hi}) at E={energy}")
        total += float(np.sum(w * np.sqrt(np.maximum(r, 0.0))))
    return total


def momentum_integral(p: Potential, energy: float, region) -> float:
    """Integral of k = sqrt(E - V) over an allowed interval."""
    return _root_integral(p, energy, region, +1)


def forbidden_integral(p: Potential, energy: float, region) -> float:
    """Integral of kappa = sqrt(V - E) over a finite forbidden interval."""
    return _root_integral(p, energy, region, -1)


def _correction_integrand(t: LogDerivTrace, p: Potential, energy: float, x, seg):
    """-k' phi/(k^2+phi^2) with k' = -V'/(2k), written with psi to stay finite at nodes."""
    k2 = np.maximum(energy - p.eval_on(seg, x), 0.0)
    k = np.sqrt(k2)
    vp = p.slope_on(seg, x)
    psi, dpsi, _ = t.state_at(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = vp * psi * dpsi / (2.0 * k * (k2 * psi**2 + dpsi**2))
    return np.where(vp == 0.0, 0.0, f), k, vp, psi, dpsi


def _turning_layer(t: LogDerivTrace, p: Potential, energy: float, xt: float, inward: int,
                   width: float, seg: int) -> float:
    """Correction integral over the layer of ``width`` next to a turning point xt.

    With phi(xt) small the integrand is a Lorentzian in k of width |phi|, i.e. a
    spike of width phi^2/|V'| in x.  Writing the distance as width * exp(-tau)
    turns it into an O(1) bump in tau.  Below the innermost distance d0 the
    potential is linear and phi constant, which integrates to
    sign(V') arctan(k0/phi0).
    """
    d0 = LAYER_FLOOR * max(1.0, abs(xt))
    top = math.log(width / d0)
    panels = max(1, math.ceil(top / LAYER_PANEL))
    edges = np.linspace(0.0, top, panels + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
    tau = (mid[:, None] + half[:, None] * _LAYER_U[None, :]).ravel()
    w = (half[:, None] * _LAYER_W[None, :]).ravel()
    d = width * np.exp(-tau)
    x = xt + inward * d
    f, _, _, _, _ = _correction_integrand(t, p, energy, x, np.full(x.shape, seg))
    if not np.all(np.isfinite(f)):
        raise QuadratureError(f"correction integrand not finite near turning point {xt}")
    x0 = np.array([xt + inward * d0])
    _, k0, vp0, psi0, dpsi0 = _correction_integrand(t, p, energy, x0, np.array([seg]))
    tail = math.copysign(1.0, vp0[0]) * math.atan2(k0[0] * psi0[0], dpsi0[0])
    # atan2 returns the angle of (psi', k psi); fold it to the principal arctan(k/phi).
    if tail > 0.5 * math.pi:
        tail -= math.pi
    elif tail < -0.5 * math.pi:
        tail += math.pi
    return float(np.sum(w * f * d)) + (tail if vp0[0] != 0.0 else 0.0)


def correction_allowed(t: LogDerivTrace, p: Potential, energy: float, region) -> float:
    """Integral of k' phi / phi' = -k' phi / (k^2 + phi^2) over an allowed interval.

    phi comes from the trace.  Pieces ending at a continuous turning point get
    a logarithmic layer there (see ``_turning_layer``); the rest uses the
    sine-mapped Gauss rule.
    """
    lo, hi = _interval(region)
    if not t.covers(lo, hi):
        raise CoverageError(f"trace [{t.lo}, {t.hi}] does not cover ({lo}, {hi})")
    split = [t.grid[t.match_index]] if t.match_index is not None else []
    total = 0.0
    for a, b in _pieces(p, lo, hi, split):
        seg = int(p.segment_index(0.5 * (a + b)))
        scale = TURNING_K2 * max(1.0, abs(energy))
        ends = [energy - p.eval_on(np.array([seg]), np.array([e]))[0] <= scale for e in (a, b)]
        width = LAYER_FRACTION * (b - a)
        ia, ib = a + width * ends[0], b - width * ends[1]
        if ends[0]:
            total += _turning_layer(t, p, energy, a, +1, width, seg)
        if ends[1]:
            total += _turning_layer(t, p, energy, b, -1, width, seg)
        x, w = _nodes(ia, ib)
        f, _, _, _, _ = _correction_integrand(t, p, energy, x, np.full(x.shape, seg))
        if not np.all(np.isfinite(f)):
            raise QuadratureError(f"correction integrand not finite on ({a}, {b})")
        total += float(np.sum(w * f))
    return total


def correction_forbidden(p: Potential, energy: float, region, phi_in: float,
                         n_films: int = DEFAULT_FILMS, reverse: bool = False
                         ) -> tuple[float, int]:
    """Forbidden-region contribution -m pi from the film ledger, and m."""
    if n_films < MIN_RULE_FILMS:
        raise InvalidParameterError(f"n_films must be >= {MIN_RULE_FILMS}, got {n_films}")
    res = film_propagate(p, energy, _interval(region), n_films, phi_in, reverse=reverse)
    return -res.m_total * math.pi, res.m_total


def _one_sided_k(p: Potential, energy: float, x: float, side: int) -> float:
    return math.sqrt(max(energy - p.one_sided(x, side), 0.0))


def _allowed_edges(p: Potential, energy: float, region: Region, part: RegionPartition,
                   t: LogDerivTrace) -> tuple[float, float]:
    """(-arctan(k_a/phi_a), arctan(k_b/phi_b)), zero at continuous turning points."""
    out = []
    for x, side, sgn in ((region.lo, +1, -1.0), (region.hi, -1, +1.0)):
        if part.is_continuous_at(x):
            out.append(0.0)
            continue
        k = _one_sided_k(p, energy, x, side)
        phi = t.phi_at(x)
        if phi == 0.0:
            raise DegenerateStateError(f"phi vanishes at turning point x={x}")
        out.append(sgn * math.atan(k / phi))
    return out[0], out[1]


def boundary_terms(p: Potential, energy: float, part: RegionPartition, t: LogDerivTrace) -> float:
    """Discontinuity correction: sum of arctan(k_a/phi_a) - arctan(k_b/phi_b) over allowed regions.

    k is taken on the allowed side of each joint.  The forbidden-side arctanh
    pieces contribute only through their branch jumps, which the film ledger
    already counts as phi zeros.
    """
    total = 0.0
    for r in part.allowed():
        bl, br = _allowed_edges(p, energy, r, part, t)
        total -= bl + br
    return total


def forbidden_pv_diagnostic(t: LogDerivTrace, p: Potential, energy: float, region
                            ) -> tuple[float, float, int]:
    """Principal-value quadrature of kappa + kappa' phi / (phi^2 - kappa^2).

    Each phi = +-kappa crossing is a simple pole with residue -+1/2; the poles
    are subtracted and their principal values added back in closed form.

    Returns:
        (pv, reference, crossings) where reference is the real arctanh(kappa/phi)
        difference across the region that the principal value should match.
    """
    lo, hi = _interval(region)
    if not t.covers(lo, hi):
        raise CoverageError(f"trace does not cover ({lo}, {hi})")
    poles = [(x, -0.5) for x in t.crossing_plus_xs if lo < x < hi]
    poles += [(x, 0.5) for x in t.crossing_minus_xs if lo < x < hi]
    split = [t.grid[t.match_index]] if t.match_index is not None else []
    total = 0.0
    for a, b in _pieces(p, lo, hi, split):
        x, w, seg, r = _radicand(p, energy, a, b, -1)
        kap2 = np.maximum(r, 0.0)
        kap = np.sqrt(kap2)
        vp = p.slope_on(seg, x)
        psi, dpsi, _ = t.state_at(x)
        # kappa' = V'/(2 kappa), phi written through psi as above.
        with np.errstate(divide="ignore", invalid="ignore"):
            f = kap + vp * psi * dpsi / (2.0 * kap * (dpsi**2 - kap2 * psi**2))
        f = np.where(vp == 0.0, kap, f)
        for xc, res in poles:
            f = f - res / (x - xc)
        total += float(np.sum(w * f))
    for xc, res in poles:
        total += res * math.log((hi - xc) / (xc - lo))

    def re_atanh_at(x: float, side: int) -> float:
        kappa = math.sqrt(max(p.one_sided(x, side) - energy, 0.0))
        psi, dpsi, _ = t.state_at(x)
        a, b = kappa * float(psi[0]), float(dpsi[0])
        if a == 0.0:
            return 0.0
        z = a / b if b != 0.0 else math.inf
        return math.atanh(z) if abs(z) < 1 else math.atanh(1.0 / z)

    ref = re_atanh_at(hi, -1) - re_atanh_at(lo, +1)
    return total, ref, len(poles)


# -- rule ---------------------------------------------------------------------


def _grows_rightward(t: LogDerivTrace, lo: float, hi: float) -> bool:
    return t.log_abs_psi_at(hi) >= t.log_abs_psi_at(lo)


def verify_rule(p: Potential, energy: float, n_steps: int = DEFAULT_N_STEPS,
                n_films: int = DEFAULT_FILMS, tol: float = REPORT_TOL,
                trace: LogDerivTrace | None = None) -> QuantizationReport:
    """Evaluate every region of the rule at ``energy`` on a whole-line trace.

    The outer tails are truncated to the trace domain.  Forbidden regions are
    filmed in the direction in which |psi| grows, which is the stable one.
    """
    part = partition(p, energy)
    t = trace if trace is not None else full_trace(p, energy, n_steps)
    contributions = []
    for r in part.regions:
        lo, hi = max(r.lo, t.lo), min(r.hi, t.hi)
        if r.kind == ALLOWED:
            mom = momentum_integral(p, energy, (lo, hi))
            corr = correction_allowed(t, p, energy, (lo, hi))
            bl, br = _allowed_edges(p, energy, r, part, t)
            value = mom - corr
        else:
            mom = forbidden_integral(p, energy, (lo, hi))
            forward = _grows_rightward(t, lo, hi)
            phi_in = t.phi_at(lo) if forward else t.phi_at(hi)
            film = film_propagate(p, energy, (lo, hi), n_films, phi_in, reverse=not forward)
            bl = br = 0.0
            value = -film.m_total * math.pi
            corr = mom - film.value
        reduced = value - bl - br
        nearest = round_half_away(reduced / math.pi)
        contributions.append(RegionContribution(
            interval=(r.lo, r.hi),
            kind=r.kind,
            momentum_integral=mom,
            correction_integral=corr,
            boundary_term_left=bl,
            boundary_term_right=br,
            value=value,
            nearest_multiple=nearest,
            residual=reduced - nearest * math.pi,
            phi_zeros=count_phi_zeros(t, (lo, hi)),
            crossings_plus=count_crossings(t, p, energy, (lo, hi), "+"),
            crossings_minus=count_crossings(t, p, energy, (lo, hi), "-"),
        ))
    disc = boundary_terms(p, energy, part, t)
    total = sum(c.value for c in contributions) + disc
    n_total = round_half_away(total / math.pi)
    residual = total - n_total * math.pi
    return QuantizationReport(
        energy=float(energy),
        regions=tuple(contributions),
        discontinuity_correction=disc,
        total_value=total,
        total_N=n_total if abs(residual) <= tol else None,
        total_residual=residual,
        psi_nodes=int(t.psi_node_xs.size),
    )


def proper_rule_reference(p: Potential, n: int, energies=None,
                          n_steps: int = DEFAULT_N_STEPS) -> tuple[float, float]:
    """Both sides of the single-well rule: (int k at E_n, n pi + int k at E_0).

    ``energies`` may supply the ascending eigenvalues; otherwise they come from
    the shooting solver.
    """
    if n < 0:
        raise InvalidParameterError(f"n must be non-negative, got {n}")
    if energies is None:
        from .solve import lowest_levels

        energies = [s.energy for s in lowest_levels(p, n + 1, n_steps=n_steps)]
    values = []
    for e in (energies[n], energies[0]):
        part = partition(p, e)
        if len(part.turning_points) != 2:
            raise TurningPointError(
                f"single-well rule needs 2 turning points, found {len(part.turning_points)} at E={e}"
            )
        values.append(momentum_integral(p, e, part.allowed()[0]))
    return values[0], n * math.pi + values[1]
