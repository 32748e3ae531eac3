"""Log-gamma, Kummer's M, real-order Hermite functions and parabolic cylinder D.

Everything is real-valued double precision.  Hermite functions are assembled
from two Kummer series weighted by reciprocal gammas, which vanish at the
gamma poles and give the classical polynomials at non-negative integer order.
Where those two series cancel (x > 1 unless the order is a non-negative
integer) H_nu comes from its integral form at negative order and upward
recurrence in nu; for x < -1 at negative order the integral form is used too,
being more accurate and free of overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidParameterError, PoleError

X_GUARD = 400.0
NU_GUARD = 60.0
KUMMER_SWITCH = -30.0
# Above this x the two Kummer terms of H_nu cancel; the integral form is used instead.
INTEGRAL_SWITCH = 1.0
INTEGRAL_CUTOFF = 60.0

@dataclass(frozen=True)
class SeriesControl:
    """Stopping rules for the hypergeometric series.

    Attributes:
        max_terms: Hard cap on summed terms (at least 64).
        rel_tol: Stop once a term is below rel_tol times the partial sum.
        overflow_guard: Magnitude beyond which the sum is declared unusable.
    """

    max_terms: int = 4000
    rel_tol: float = 1e-16
    overflow_guard: float = 1e300

    def __post_init__(self):
        if self.max_terms < 64:
            raise InvalidParameterError(f"max_terms must be >= 64, got {self.max_terms}")
        if not 0.0 < self.rel_tol <= 1e-6:
            raise InvalidParameterError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol}")
        if not self.overflow_guard > 0:
            raise InvalidParameterError("overflow_guard must be positive")


DEFAULT_CONTROL = SeriesControl()


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def log_gamma(x: float) -> tuple[float, int]:
    """Return ``(log|Gamma(x)|, sign(Gamma(x)))``.

    Raises:
        PoleError: x is zero or a negative integer.
    """
    x = float(x)
    if _is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at x={x}")
    sign = 1 if x > 0 or math.floor(x) % 2 == 0 else -1
    return math.lgamma(x), sign


def rgamma(x: float) -> float:
    """1 / Gamma(x), zero at the poles."""
    x = float(x)
    if _is_nonpositive_integer(x):
        return 0.0
    if abs(x) < 1e-300:
        return x
    if abs(x) < 170.0:
        return 1.0 / math.gamma(x)
    lg, sg = log_gamma(x)
    return sg * math.exp(-lg)


def _kummer_series(a: float, b: float, x: float, ctl: SeriesControl) -> float:
    total = 1.0
    term = 1.0
    for n in range(ctl.max_terms):
        if a + n == 0.0:
            return total
        term *= (a + n) * x / ((b + n) * (n + 1))
        total += term
        if abs(total) > ctl.overflow_guard:
            raise ConvergenceError(f"M({a}, {b}, {x}) exceeds the overflow guard")
        # Only trust the stopping test once terms are shrinking.
        if n + 1 > abs(a) and abs(term) <= ctl.rel_tol * abs(total):
            return total
    raise ConvergenceError(f"M({a}, {b}, {x}) did not converge in {ctl.max_terms} terms")


def kummer_m(a: float, b: float, x: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Confluent hypergeometric function M(a, b, x) by direct series.

    For x < -30 the Kummer transformation M(a,b,x) = e^x M(b-a,b,-x) is
    applied first, so the summed series has no cancellation.
    """
    a, b, x = float(a), float(b), float(x)
    if _is_nonpositive_integer(b):
        raise PoleError(f"M is undefined for b={b}")
    if abs(x) > X_GUARD:
        raise InvalidParameterError(f"|x|={abs(x)} exceeds the series guard {X_GUARD}")
    if x == 0.0:
        return 1.0
    if x < KUMMER_SWITCH and not (_is_nonpositive_integer(a)):
        return math.exp(x) * _kummer_series(b - a, b, -x, ctl)
    return _kummer_series(a, b, x, ctl)


def _check_order(nu: float) -> None:
    if abs(nu) > NU_GUARD:
        raise InvalidParameterError(f"|nu|={abs(nu)} exceeds the order guard {NU_GUARD}")


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_MAX_PANEL = 2.0


def _laplace_scaled(s: float, x: float, ctl: SeriesControl) -> tuple[float, float]:
    """``(m, L)`` with m e^L the integral over t > 0 of exp(-t^2 - 2 x t) t^(s-1), s > 0.

    The piece on [0, a] uses the Hermite generating function termwise; the
    rest is Gauss-Legendre on doubling panels, capped in width, until the
    exponent has dropped by the cutoff.  For x < 0 the peak value exp(x^2)
    is factored out as L.
    """
    shift = x * x if x < 0.0 else 0.0
    a = min(0.25, 1.0 / (2.0 * abs(x) + 1.0))
    g_prev, g = 0.0, 1.0
    head = g / s
    for n in range(ctl.max_terms):
        g_prev, g = g, (2.0 * x * a * g - 2.0 * a * a * g_prev) / (n + 1)
        term = (-1.0) ** (n + 1) * g / (s + n + 1)
        head += term
        if abs(term) <= ctl.rel_tol * abs(head) and n > 4:
            break
    else:
        raise ConvergenceError(f"head series for s={s}, x={x} did not converge")
    total = math.exp(s * math.log(a) - shift) * head
    # Past the peak of the integrand far enough for the exponent to drop by the cutoff.
    top = -x + math.sqrt(x * x + INTEGRAL_CUTOFF + 4.0 * max(s - 1.0, 0.0))
    if s > 1.0:
        top = max(top, 2.0 * s + 6.0)
    lo = a
    while lo < top:
        hi = min(2.0 * lo, lo + _MAX_PANEL, top)
        t = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
        f = np.exp(-t * t - 2.0 * x * t + (s - 1.0) * np.log(t) - shift)
        total += 0.5 * (hi - lo) * float(np.dot(_GL_W, f))
        lo = hi
    return total, shift


def _hermite_integral(nu: float, x: float, ctl: SeriesControl) -> float:
    """H_nu(x) for x > 1 from the integral form at negative order plus upward recurrence."""
    if nu < 0.0:
        return _laplace_scaled(-nu, x, ctl)[0] * rgamma(-nu)
    base = nu - math.floor(nu) - 1.0
    h_prev = _laplace_scaled(1.0 - base, x, ctl)[0] * rgamma(1.0 - base)
    h = _laplace_scaled(-base, x, ctl)[0] * rgamma(-base)
    mu = base
    while mu < nu - 0.5:
        h_prev, h = h, 2.0 * x * h - 2.0 * mu * h_prev
        mu += 1.0
    return h


def _hermite_poly(n: int, x: float) -> float:
    h_prev, h = 0.0, 1.0
    for k in range(n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h


def _hermite_scaled(nu: float, x: float, ctl: SeriesControl) -> tuple[float, float]:
    """``(m, L)`` with H_nu(x) = m e^L; L is nonzero only where e^(x^2) is factored out."""
    _check_order(nu)
    if abs(x) > X_GUARD:
        raise InvalidParameterError(f"|x|={abs(x)} exceeds the guard {X_GUARD}")
    if nu >= 0.0 and nu == math.floor(nu):
        return _hermite_poly(int(nu), x), 0.0
    if nu < 0.0 and x < -INTEGRAL_SWITCH:
        m, shift = _laplace_scaled(-nu, x, ctl)
        return m * rgamma(-nu), shift
    if x > INTEGRAL_SWITCH:
        return _hermite_integral(nu, x, ctl), 0.0
    x2 = x * x
    if x2 > X_GUARD:
        raise InvalidParameterError(f"order {nu} at x={x} needs x^2 <= {X_GUARD} for the series")
    even = kummer_m(-0.5 * nu, 0.5, x2, ctl) * rgamma(0.5 * (1.0 - nu))
    odd = 2.0 * x * kummer_m(0.5 * (1.0 - nu), 1.5, x2, ctl) * rgamma(-0.5 * nu)
    return 2.0**nu * math.sqrt(math.pi) * (even - odd), 0.0


def hermite_nu_log(nu: float, x: float, ctl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, int]:
    """``(log|H_nu(x)|, sign)``; sign 0 means an exact zero (log is -inf)."""
    m, shift = _hermite_scaled(float(nu), float(x), ctl)
    if m == 0.0:
        return -math.inf, 0
    return math.log(abs(m)) + shift, (1 if m > 0 else -1)


def hermite_nu(nu: float, x: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Hermite function of real order, equal to the classical H_n at integer n >= 0.

    Raises:
        InvalidParameterError: the value overflows; use :func:`hermite_nu_log`.
    """
    m, shift = _hermite_scaled(float(nu), float(x), ctl)
    if shift == 0.0:
        return m
    try:
        return m * math.exp(shift)
    except OverflowError:
        raise InvalidParameterError(f"H_{nu}({x}) overflows; use hermite_nu_log") from None


def hermite_ratio(nu_num: float, nu_den: float, x: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """H_{nu_num}(x) / H_{nu_den}(x) from log magnitudes.

    Raises:
        PoleError: the denominator vanishes.
    """
    ln, sn = hermite_nu_log(nu_num, x, ctl)
    ld, sd = hermite_nu_log(nu_den, x, ctl)
    if sd == 0:
        raise PoleError(f"H_{nu_den}({x}) is zero")
    if sn == 0:
        return 0.0
    return sn * sd * math.exp(ln - ld)


def pcf_d(nu: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Parabolic cylinder function D_nu(z) = 2^(-nu/2) e^(-z^2/4) H_nu(z/sqrt 2)."""
    lg, sg = hermite_nu_log(nu, z / math.sqrt(2.0), ctl)
    if sg == 0:
        return 0.0
    return sg * math.exp(lg - 0.5 * nu * math.log(2.0) - 0.25 * z * z)
