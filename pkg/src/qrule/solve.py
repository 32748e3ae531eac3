"""Eigenvalues by three independent routes.

* shooting: left/right marches matched through an unwrapped phase,
* analytic: closed-form matching for the double square well and the
  biharmonic potential,
* fd-oracle: finite differences with Sturm-sequence bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .errors import (
    ConvergenceError,
    DomainTooSmallError,
    InvalidParameterError,
    QRuleError,
    TurningPointError,
)
from .potential import Potential, biharmonic, double_square_well, partition
from .propagate import DEFAULT_N_STEPS, Shooter, full_trace, tail_domain
from .quantize import momentum_integral
from .specfun import hermite_nu

SHOOTING = "shooting"
ANALYTIC = "analytic"
FD_ORACLE = "fd-oracle"

ENERGY_TOL = 1e-12
CLAMP = 1e-6
MIN_GRID_N = 2000
EDGE_POINTS = 5
EDGE_MASS = 1e-8


@dataclass(frozen=True)
class EigenSolution:
    """One eigenvalue.

    Attributes:
        index: Number of psi nodes.
        energy: Eigenvalue.
        route: ``"shooting"``, ``"analytic"`` or ``"fd-oracle"``.
        residual: Route-specific: phase error, matching function value, or
            the change under grid doubling for the oracle.
    """

    index: int
    energy: float
    route: str
    residual: float


@dataclass(frozen=True)
class EnergyWindow:
    lo: float
    hi: float
    grid_points: int = 512

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidParameterError(f"window needs lo < hi, got ({self.lo}, {self.hi})")
        if self.grid_points < 64:
            raise InvalidParameterError(f"grid_points must be >= 64, got {self.grid_points}")

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.grid_points)


def _bisect(f: Callable[[float], float], a: float, b: float, fa: float,
            tol: float = ENERGY_TOL) -> float:
    """Bisection on a bracketed sign change of f."""
    for _ in range(200):
        m = 0.5 * (a + b)
        if b - a <= tol * max(1.0, abs(m)) or m in (a, b):
            return m
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    raise ConvergenceError(f"bisection did not converge on [{a}, {b}]")


def _clamp_below(value: float, ceiling: float) -> float:
    return min(value, ceiling - CLAMP * max(1.0, abs(ceiling)))


def _nudge(value: float, specials, inward: int) -> float:
    for s in specials:
        if abs(value - s) < CLAMP:
            return s + inward * CLAMP
    return value


def node_count(p: Potential, energy: float, n_steps: int = DEFAULT_N_STEPS) -> int:
    """psi nodes of the whole-line trace at ``energy``."""
    return int(full_trace(p, energy, n_steps).psi_node_xs.size)


# -- shooting -----------------------------------------------------------------


def _safe_domain(p: Potential, energy: float, exact_constant: bool = True):
    for shift in (0.0, 1e-6, 1e-4):
        try:
            return tail_domain(p, energy - shift * max(1.0, abs(energy)), exact_constant)
        except TurningPointError:
            continue
    raise TurningPointError(f"no usable turning-point structure near E={energy}")


def match_point(p: Potential, window: EnergyWindow, domain) -> float:
    """Midpoint of the allowed region with the largest int k dx near mid-window."""
    mid = 0.5 * (window.lo + window.hi)
    for e in (mid, mid + 1e-6 * max(1.0, abs(mid)), window.hi):
        try:
            part = partition(p, e)
        except TurningPointError:
            continue
        best = max(part.allowed(), key=lambda r: momentum_integral(p, e, r))
        x = best.midpoint()
        if domain[0] < x < domain[1]:
            return x
    xs = np.linspace(domain[0], domain[1], 4097)[1:-1]
    return float(xs[np.argmin(p.eval(xs))])


def solve_shooting(p: Potential, window: EnergyWindow, n_steps: int = DEFAULT_N_STEPS,
                   x_match: float | None = None) -> list[EigenSolution]:
    """All eigenvalues in ``window`` by left/right shooting.

    The scan uses the unwrapped phase F(E), which is continuous and increasing
    and takes the integer value k at the eigenvalue with k nodes, so every
    integer crossed inside a scan cell is one root and close pairs cannot be
    lost.
    """
    lo_tail, hi_tail = p.tail_limits()
    hi = _clamp_below(window.hi, min(lo_tail, hi_tail))
    lo = window.lo
    if hi <= lo:
        return []
    try:
        domain = _safe_domain(p, hi)
    except TurningPointError:
        return []
    xm = x_match if x_match is not None else match_point(p, EnergyWindow(lo, hi), domain)
    shooter = Shooter(p, domain, xm, n_steps)
    energies = np.linspace(lo, hi, window.grid_points)
    phases = np.array([shooter.phase(e) for e in energies])
    out = []
    for i in range(energies.size - 1):
        f0, f1 = phases[i], phases[i + 1]
        for k in range(math.floor(f0) + 1, math.floor(f1) + 1):
            g = lambda e, k=k: shooter.phase(e) - k  # noqa: E731
            e = _bisect(g, energies[i], energies[i + 1], f0 - k)
            n = node_count(p, e, n_steps)
            if n != k:
                raise ConvergenceError(
                    f"root at E={e} has phase index {k} but the trace shows {n} nodes"
                )
            out.append(EigenSolution(n, e, SHOOTING, g(e)))
    return out


def lowest_levels(p: Potential, count: int, n_steps: int = DEFAULT_N_STEPS
                  ) -> list[EigenSolution]:
    """The ``count`` lowest eigenvalues by shooting on a growing window."""
    vmin = p.minimum()
    ceiling = min(p.tail_limits())
    width = 4.0
    while True:
        hi = vmin + width
        sols = solve_shooting(p, EnergyWindow(vmin, min(hi, ceiling)), n_steps)
        if len(sols) >= count:
            return sols[:count]
        if hi >= ceiling:
            raise ConvergenceError(f"only {len(sols)} bound states below {ceiling}")
        width *= 2.0


# -- finite-difference oracle -------------------------------------------------


@njit(cache=True)
def _sturm_count(diag, off2, lam):
    """Number of eigenvalues below lam of the tridiagonal matrix."""
    count = 0
    q = diag[0] - lam
    if q < 0:
        count += 1
    for i in range(1, diag.size):
        if q == 0.0:
            q = 1e-300
        q = diag[i] - lam - off2 / q
        if q < 0:
            count += 1
    return count


@njit(cache=True)
def _kth_eigenvalue(diag, off2, k, lo, hi):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-14 * max(1.0, abs(mid)):
            break
        if _sturm_count(diag, off2, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def _thomas(diag, off, rhs):
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    c[0] = off / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - off * c[i - 1]
        c[i] = off / m
        d[i] = (rhs[i] - off * d[i - 1]) / m
    x = np.empty(n)
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _fd_diag(p: Potential, lo: float, hi: float, n: int):
    h = (hi - lo) / n
    x = lo + h * np.arange(1, n)
    v = p.eval(x)
    # A node exactly on a jump sees the mean of the one-sided values.
    for j in np.flatnonzero(np.isin(x, p.joints)):
        v[j] = 0.5 * (p.one_sided(x[j], -1) + p.one_sided(x[j], +1))
    return 2.0 / h**2 + v, 1.0 / h**4, -1.0 / h**2


def _aligned_domain(p: Potential, lo: float, hi: float, n: int) -> tuple[float, float]:
    """Widen [lo, hi] slightly so every interior joint is a node of the n and 2n grids.

    A jump between nodes costs the scheme its second order, which Richardson
    extrapolation relies on.
    """
    joints = [float(j) for j in p.joints if lo < j < hi]
    if not joints:
        return lo, hi
    span = hi - lo
    step = None
    diffs = np.diff(joints)
    if diffs.size:
        base = float(diffs.min())
        for div in range(1, 65):
            delta = base / div
            ratio = diffs / delta
            if np.all(np.abs(ratio - np.round(ratio)) < 1e-9):
                step = delta / max(1, math.floor(n * delta / span))
                break
    if step is None:
        step = span / n
    j0 = joints[0]
    new_lo = j0 - math.ceil((j0 - lo) / step - 1e-9) * step
    return new_lo, new_lo + n * step


def _fd_levels(p: Potential, lo: float, hi: float, n: int, count: int):
    diag, off2, off = _fd_diag(p, lo, hi, n)
    a = float(diag.min() - 4.0 / ((hi - lo) / n) ** 2)
    b = float(diag.max())
    vals = np.array([_kth_eigenvalue(diag, off2, k, a, b) for k in range(count)])
    return vals, diag, off


def _edge_mass(diag, off, lam) -> float:
    shift = 1e-10 * max(1.0, abs(lam))
    rhs = np.ones(diag.size)
    for _ in range(3):
        rhs = _thomas(diag - lam - shift, off, rhs)
        rhs /= np.linalg.norm(rhs)
    return float(np.sum(rhs[:EDGE_POINTS] ** 2) + np.sum(rhs[-EDGE_POINTS:] ** 2))


def _fd_domain(p: Potential, grid_n: int, count: int) -> tuple[float, float]:
    """Box reaching the tail depth of the highest requested level.

    A box that is too small pushes the levels up, possibly to the tail ceiling
    where the tail-depth rule would ask for an unbounded box, so the box is
    widened geometrically until the top level sits clearly below the ceiling
    and then sized from that level.
    """
    ceiling = min(p.tail_limits())
    dom = _safe_domain(p, _clamp_below(p.minimum() + 1.0, ceiling), False)
    for _ in range(12):
        coarse, _, _ = _fd_levels(p, dom[0], dom[1], grid_n, count)
        e_top = float(coarse[-1])
        if e_top >= _clamp_below(ceiling, ceiling) or not math.isfinite(e_top):
            mid, half = 0.5 * (dom[0] + dom[1]), 0.75 * (dom[1] - dom[0])
            dom = (mid - half, mid + half)
            continue
        new = _safe_domain(p, e_top, False)
        grown = (min(dom[0], new[0]), max(dom[1], new[1]))
        if grown == dom:
            return dom
        dom = grown
    return dom


def solve_fd_oracle(p: Potential, domain: tuple[float, float] | None = None,
                    grid_n: int = 4000, count: int = 4) -> list[EigenSolution]:
    """Lowest ``count`` eigenvalues of the 3-point discretization with Dirichlet ends.

    Levels from ``grid_n`` and ``2 grid_n`` intervals are Richardson combined.
    Without ``domain`` the box is widened until it reaches the tail depth for
    the highest level found.

    Raises:
        DomainTooSmallError: an eigenvector keeps weight at the walls.
    """
    if grid_n < MIN_GRID_N:
        raise InvalidParameterError(f"grid_n must be >= {MIN_GRID_N}, got {grid_n}")
    if count < 1:
        raise InvalidParameterError("count must be positive")
    if domain is None:
        domain = _fd_domain(p, grid_n, count)
    lo, hi = _aligned_domain(p, domain[0], domain[1], grid_n)
    e1, _, _ = _fd_levels(p, lo, hi, grid_n, count)
    e2, diag, off = _fd_levels(p, lo, hi, 2 * grid_n, count)
    out = []
    for k in range(count):
        if _edge_mass(diag, off, e2[k]) > EDGE_MASS:
            raise DomainTooSmallError(f"level {k} at E={e2[k]} leaks onto the walls of {domain}")
        out.append(EigenSolution(k, float((4.0 * e2[k] - e1[k]) / 3.0), FD_ORACLE,
                                 float(abs(e2[k] - e1[k]))))
    return out


# -- double square well -------------------------------------------------------


def _dsw_phase(energy, x_a, x_b, x_c, x_d, V_I, V_0, V_F) -> float:
    """Unwrapped phase mismatch at x_d in units of pi; integer k at the k-node level.

    In a flat well the angle atan2(k psi, psi') turns at the uniform rate k, so
    the left solution's phase is known in closed form; the barrier is crossed
    with the exponential solution and can add at most one node.
    """
    k = math.sqrt(energy)
    kap_i = math.sqrt(V_I - energy)
    kap_0 = math.sqrt(V_0 - energy)
    kap_f = math.sqrt(V_F - energy)
    chi_b = math.atan2(k, kap_i) + k * (x_b - x_a)
    nodes = math.floor(chi_b / math.pi)
    psi, dpsi = math.sin(chi_b) / k, math.cos(chi_b)
    t = math.tanh(kap_0 * (x_c - x_b))
    psi_c = psi + dpsi * t / kap_0
    dpsi_c = psi * kap_0 * t + dpsi
    if (psi_c < 0) != (psi < 0):
        nodes += 1
    theta_d = nodes * math.pi + math.atan2(k * psi_c, dpsi_c) % math.pi + k * (x_d - x_c)
    return (theta_d - math.atan2(k, -kap_f)) / math.pi


def solve_double_square_well(x_a, x_b, x_c, x_d, V_I, V_0, V_F, window: EnergyWindow
                             ) -> list[EigenSolution]:
    """Levels of the double square well from the exact piecewise solution."""
    double_square_well(x_a, x_b, x_c, x_d, V_I, V_0, V_F)
    top = min(V_I, V_0, V_F)
    lo = max(window.lo, CLAMP)
    hi = min(window.hi, top - CLAMP)
    if hi <= lo:
        return []
    args = (x_a, x_b, x_c, x_d, V_I, V_0, V_F)
    energies = np.linspace(lo, hi, window.grid_points)
    phases = np.array([_dsw_phase(e, *args) for e in energies])
    out = []
    for i in range(energies.size - 1):
        for k in range(math.floor(phases[i]) + 1, math.floor(phases[i + 1]) + 1):
            g = lambda e, k=k: _dsw_phase(e, *args) - k  # noqa: E731
            e = _bisect(g, energies[i], energies[i + 1], phases[i] - k)
            out.append(EigenSolution(k, e, ANALYTIC, g(e)))
    return out


# -- biharmonic ---------------------------------------------------------------


def biharmonic_matching(energy: float, alpha: float, beta: float, gamma: float,
                        left_branch: str = "decaying") -> float:
    """Matching function at x = 0 for the biharmonic potential, normalized.

    The log-derivative mismatch is multiplied by both Hermite denominators so
    poles disappear, then divided by the norms of the Hermite pairs.  With
    ``left_branch="decaying"`` the left solution decays as x -> -inf; with
    ``"growing"`` it is the parabolic cylinder function of argument
    sqrt(2)(x + alpha), which grows there.
    """
    nu = 0.5 * (energy - 1.0)
    mu = 0.5 * (energy + gamma - 1.0)
    h0r, h1r = hermite_nu(mu, -beta), hermite_nu(mu + 1.0, -beta)
    # Right side: phi_R(0) = -(beta + H_{mu+1}(-beta)/H_mu(-beta)).
    right_num, right_den = -(beta * h0r + h1r), h0r
    if left_branch == "decaying":
        h0, h1 = hermite_nu(nu, -alpha), hermite_nu(nu + 1.0, -alpha)
        left_num, left_den = alpha * h0 + h1, h0
    elif left_branch == "growing":
        h0, h1 = hermite_nu(nu, alpha), hermite_nu(nu + 1.0, alpha)
        left_num, left_den = alpha * h0 - h1, h0
    else:
        raise InvalidParameterError(f"left_branch must be 'decaying' or 'growing', got {left_branch!r}")
    w = left_num * right_den - right_num * left_den
    return w / (math.hypot(h0, h1) * math.hypot(h0r, h1r))


def solve_biharmonic(alpha: float, beta: float, gamma: float, window: EnergyWindow,
                     left_branch: str = "decaying", n_steps: int = DEFAULT_N_STEPS
                     ) -> list[EigenSolution]:
    """Roots of the biharmonic matching function in ``window``.

    Each root is indexed by the node count of an independent whole-line trace.
    """
    p = biharmonic(alpha, beta, gamma, regime=False)
    specials = (0.0, alpha**2)
    lo = _nudge(window.lo, specials, +1)
    hi = _nudge(window.hi, specials, -1)
    f = lambda e: biharmonic_matching(e, alpha, beta, gamma, left_branch)  # noqa: E731
    energies = np.linspace(lo, hi, window.grid_points)
    vals = np.array([f(e) for e in energies])
    out = []
    for i in range(energies.size - 1):
        if vals[i] == 0.0:
            e = float(energies[i])
        elif (vals[i] < 0) != (vals[i + 1] < 0):
            e = _bisect(f, energies[i], energies[i + 1], vals[i])
        else:
            continue
        try:
            n = node_count(p, e, n_steps)
        except QRuleError:
            n = -1
        out.append(EigenSolution(n, e, ANALYTIC, f(e)))
    return out
