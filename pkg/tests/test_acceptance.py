"""Acceptance criteria 1-8, one test each.

Every test records a one-line PASS/FAIL verdict with the measured numbers; the
lines are printed together at the end of the pytest run (see conftest.py) or
by running this file directly.  A criterion that the implementation cannot
meet fails here with the measured evidence in its line.
"""

import math

import numpy as np

from checks import (
    PROPERTY_KEYS,
    hermite_poly,
    property_suite,
    recurrence_residual,
    suite_cases,
    weber_residual,
)
from conftest import BIH_ARGS, DSW_ARGS
from qrule import potential as P
from qrule import propagate as G
from qrule import quantize as Q
from qrule import solve as S
from qrule import specfun as F

LISTED_DSW = [6.83296, 26.9768, 58.974, 96.5517]
LISTED_BIH = [-3.99311, -1.93114, 0.286635, 2.73417, 5.44053, 8.50148]
FILM_COUNTS = [64, 128, 256, 512, 1024, 2048, 4096]
NU_GRID = np.arange(-1.5, 5.51, 0.5)
X_GRID = np.linspace(-4.0, 4.0, 17)
Z_GRID = np.linspace(-5.0, 5.0, 21)

RESULTS: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    RESULTS[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[number])
    assert ok, RESULTS[number]


def _max_dev(got, want) -> float:
    if len(got) != len(want):
        return math.inf
    return max(abs(a - b) for a, b in zip(got, want))


def _allowed_multiples(report) -> list[int]:
    return [c.nearest_multiple for c in report.regions if c.kind == "allowed"]


def _region_magnitudes(report) -> list[int]:
    inner = report.regions[1:-1]
    return [abs(c.nearest_multiple) for c in inner]


def test_criterion_1_double_square_well():
    window = S.EnergyWindow(0.0, 100.0)
    analytic = [s.energy for s in S.solve_double_square_well(*DSW_ARGS, window)]
    shooting = [s.energy for s in S.solve_shooting(P.double_square_well(*DSW_ARGS), window)]
    agree = _max_dev(analytic, shooting)
    dev = max(_max_dev(analytic, LISTED_DSW), _max_dev(shooting, LISTED_DSW))
    odd = _max_dev(shooting[1::2], LISTED_DSW)
    ok = dev <= 1e-3 and agree <= 1e-6
    record(1, ok, f"{len(shooting)} levels found (listed 4); routes agree to {agree:.1e}; "
                  f"listed values equal levels n=1,3,5,7 to {odd:.1e}")


def test_criterion_2_biharmonic():
    p = P.biharmonic(*BIH_ARGS)
    window = S.EnergyWindow(-5.0, 9.0)
    analytic = [s.energy for s in S.solve_biharmonic(*BIH_ARGS, window)][:6]
    found = [s.energy for s in S.solve_shooting(p, window)]
    shooting = found[:6]
    oracle = [s.energy for s in S.solve_fd_oracle(p, count=6)]
    growing = [s.energy for s in S.solve_biharmonic(*BIH_ARGS, window, left_branch="growing")]
    dev = max(_max_dev(analytic, LISTED_BIH), _max_dev(shooting, LISTED_BIH))
    fd_dev = _max_dev(oracle, LISTED_BIH)
    ok = dev <= 1e-4 and fd_dev <= 5e-4
    record(2, ok, f"{len(found)} levels found (listed 6); lowest six differ from the list by "
                  f"up to {dev:.3g} (routes), {fd_dev:.3g} (oracle); routes and "
                  f"oracle agree to {_max_dev(analytic, oracle):.1e}; growing-left matching "
                  f"reproduces the list to {_max_dev(growing, LISTED_BIH):.1e}")


def test_criterion_3_rule_identity():
    bih = P.biharmonic(*BIH_ARGS)
    dsw = P.double_square_well(*DSW_ARGS)
    r2, r3 = (Q.verify_rule(bih, e) for e in LISTED_BIH[2:4])
    dsw_listed = [Q.verify_rule(dsw, e).total_N for e in LISTED_DSW]
    ok = (r2.total_N == 3 and r3.total_N == 4
          and max(abs(r2.total_residual), abs(r3.total_residual)) <= Q.REPORT_TOL
          and dsw_listed == [1, 2, 3, 4])
    levels = S.solve_shooting(bih, S.EnergyWindow(-5.0, 9.0))
    solver = [Q.verify_rule(bih, s.energy).total_N for s in levels[2:4]]
    dsw_levels = S.solve_shooting(dsw, S.EnergyWindow(0.0, 100.0))[:4]
    dsw_solver = [Q.verify_rule(dsw, s.energy).total_N for s in dsw_levels]
    record(3, ok, f"listed E_2, E_3 give total_N {r2.total_N}, {r3.total_N} with residual/pi "
                  f"{r2.total_residual / math.pi:.3g}, {r3.total_residual / math.pi:.3g}; "
                  f"listed double-well energies give N={dsw_listed}; solver levels n=2,3 give "
                  f"{solver}, lowest four double-well levels give {dsw_solver}")


def test_criterion_4_region_integers():
    bih = P.biharmonic(*BIH_ARGS)
    dsw = P.double_square_well(*DSW_ARGS)
    dsw_reports = [Q.verify_rule(dsw, e) for e in LISTED_DSW[:2]]
    bih_reports = [Q.verify_rule(bih, e) for e in LISTED_BIH[2:4]]
    worst = max(abs(c.residual) for r in dsw_reports + bih_reports for c in r.regions
                if c.kind == "allowed")
    dsw_mag = [_region_magnitudes(r) for r in dsw_reports]
    bih_mult = [_allowed_multiples(r) for r in bih_reports]
    ok = (worst <= Q.REPORT_TOL and dsw_mag == [[1, 1, 1], [2, 2, 2]]
          and bih_mult == [[1, 3], [2, 4]])
    levels = S.solve_shooting(bih, S.EnergyWindow(0.0, 4.0))
    true_mult = {s.index: _allowed_multiples(Q.verify_rule(bih, s.energy)) for s in levels}
    low = S.solve_shooting(dsw, S.EnergyWindow(0.0, 30.0))
    low_mag = {s.index: _region_magnitudes(Q.verify_rule(dsw, s.energy)) for s in low}
    record(4, ok, f"worst allowed residual/pi {worst / math.pi:.3g} at the listed energies; "
                  f"double well |multiples| {dsw_mag} (solver levels {low_mag}); "
                  f"biharmonic E_2, E_3 allowed multiples {bih_mult} "
                  f"(solver levels {true_mult})")


def test_criterion_5_harmonic():
    harm = P.harmonic()
    levels = S.solve_shooting(harm, S.EnergyWindow(0.0, 12.0))
    energies = [s.energy for s in levels]
    e_dev = _max_dev(energies, [2 * n + 1 for n in range(6)])
    n_ok = all(Q.verify_rule(harm, e).total_N == n + 1 for n, e in enumerate(energies))
    proper = max(abs(lhs - rhs) for lhs, rhs in
                 (Q.proper_rule_reference(harm, n, energies) for n in range(6)))
    ok = e_dev <= 1e-6 and n_ok and proper <= 1e-6
    record(5, ok, f"E_n - (2n+1) max {e_dev:.1e}; total_N = n+1 for n<=5: {n_ok}; "
                  f"proper rule max deviation {proper:.1e}")


def test_criterion_6_film_convergence():
    dsw = P.double_square_well(*DSW_ARGS)
    e0 = S.solve_shooting(dsw, S.EnergyWindow(0.0, 10.0))[0].energy
    t = G.full_trace(dsw, e0)
    phi_in = t.phi_at(-1.0)
    ref = G.film_propagate(dsw, e0, (-1.0, 1.0), 2 * FILM_COUNTS[-1], phi_in).value
    errs = [abs(G.film_propagate(dsw, e0, (-1.0, 1.0), n, phi_in).value - ref)
            for n in FILM_COUNTS]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:]) if a > 0 and b > 0]
    order_ok = bool(orders) and min(orders) >= 1.0
    kappa = math.sqrt(100.0 - e0)
    closed = []
    for n in FILM_COUNTS:
        for phi in (-1.0, 0.0, 2.5, 40.0):
            a, b = kappa + phi, (kappa - phi) * math.exp(-4.0 * kappa)
            want = kappa * (a - b) / (a + b)
            got = G.film_propagate(dsw, e0, (-1.0, 1.0), n, phi).phi_out
            closed.append(abs(got - want))
    closed_ok = max(closed) <= 1e-10
    bih = P.biharmonic(*BIH_ARGS)
    tp_e = S.solve_shooting(bih, S.EnergyWindow(0.5, 1.5))[0].energy
    tp = P.turning_points(bih, tp_e)
    iv = (tp[1] + 0.05, tp[2] - 0.05)
    tb = G.full_trace(bih, tp_e)
    smooth = [abs(G.film_propagate(bih, tp_e, iv, n, tb.phi_at(iv[0])).phi_out
                  - tb.phi_at(iv[1])) for n in (256, 512, 1024)]
    ok = decreasing and order_ok and closed_ok
    record(6, ok, f"flat barrier ledger errors {max(errs):.1e} at every n_films (exact for a "
                  f"constant barrier, so no decrease or order to observe); closed form max "
                  f"error {max(closed):.1e}; smooth biharmonic barrier order "
                  f"{math.log2(smooth[0] / smooth[1]):.2f}, {math.log2(smooth[1] / smooth[2]):.2f}")


def test_criterion_7_property_suites():
    totals = dict.fromkeys(PROPERTY_KEYS, 0)
    cases = suite_cases()
    for label, p, count, tol in cases:
        for key, value in property_suite(label, p, count, tol).items():
            totals[key] += value
    ok = all(v == 0 for v in totals.values())
    counts = ", ".join(f"{k}={v}" for k, v in totals.items())
    record(7, ok, f"violations over {len(cases)} potentials: {counts} (literal forms: "
                  f"monotonic_literal, interleave_global)")


def test_criterion_8_special_functions():
    poly = max(abs(F.hermite_nu(n, x) - hermite_poly(n, x)) / max(1.0, abs(hermite_poly(n, x)))
               for n in range(11) for x in X_GRID)
    weber = 0.0
    for nu in NU_GRID:
        scale = max(abs(F.pcf_d(nu, z)) for z in Z_GRID)
        weber = max(weber, max(weber_residual(F.pcf_d, nu, z, scale) for z in Z_GRID))
    rec = max(recurrence_residual(F.hermite_nu, nu, x) for nu in NU_GRID for x in X_GRID)
    ok = poly <= 1e-10 and weber <= 1e-6 and rec <= 1e-8
    record(8, ok, f"integer order {poly:.1e}, Weber residual {weber:.1e}, "
                  f"recurrence residual {rec:.1e}")


if __name__ == "__main__":
    import sys

    for name, fn in sorted((k, v) for k, v in dict(globals()).items()
                           if k.startswith("test_criterion_")):
        try:
            fn()
        except AssertionError:
            pass
    sys.exit(0 if all("PASS" in line for line in RESULTS.values()) else 1)
