import math

import numpy as np
import pytest

from checks import fd_scipy
from conftest import BIH_ARGS, DSW_ARGS
from qrule import potential as P
from qrule import propagate as G
from qrule import solve as S
from qrule.errors import DomainTooSmallError, InvalidParameterError

LISTED_DSW = [6.83296, 26.9768, 58.974, 96.5517]
LISTED_BIH = [-3.99311, -1.93114, 0.286635, 2.73417, 5.44053, 8.50148]


def test_window_validation():
    with pytest.raises(InvalidParameterError):
        S.EnergyWindow(1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        S.EnergyWindow(0.0, 1.0, grid_points=10)


def test_harmonic_shooting(harm):
    sols = S.solve_shooting(harm, S.EnergyWindow(0.0, 8.0))
    assert [s.index for s in sols] == [0, 1, 2, 3]
    assert [s.energy for s in sols] == pytest.approx([1, 3, 5, 7], abs=1e-6)


def test_harmonic_fd_oracle(harm):
    sols = S.solve_fd_oracle(harm, (-8.0, 8.0), 4000, 4)
    assert [s.energy for s in sols] == pytest.approx([1, 3, 5, 7], abs=1e-6)


def test_fd_oracle_matches_lapack(bih):
    # [DERIVED] same matrix, eigenvalues from LAPACK instead of Sturm bisection.
    mine = S.solve_fd_oracle(bih, (-9.5, 9.5), 4000, 6)
    e1 = fd_scipy(bih, -9.5, 9.5, 4000, 6)
    e2 = fd_scipy(bih, -9.5, 9.5, 8000, 6)
    assert [s.energy for s in mine] == pytest.approx((4 * e2 - e1) / 3, abs=1e-8)


def test_fd_oracle_domain_too_small(harm):
    with pytest.raises(DomainTooSmallError):
        S.solve_fd_oracle(harm, (-2.0, 2.0), 4000, 2)


def test_fd_oracle_validation(harm):
    with pytest.raises(InvalidParameterError):
        S.solve_fd_oracle(harm, (-8.0, 8.0), 100, 2)
    with pytest.raises(InvalidParameterError):
        S.solve_fd_oracle(harm, (-8.0, 8.0), 4000, 0)


def test_empty_window(harm):
    assert S.solve_shooting(harm, S.EnergyWindow(1.5, 2.5)) == []


def test_lowest_levels(harm):
    assert [s.energy for s in S.lowest_levels(harm, 5)] == pytest.approx(
        [1, 3, 5, 7, 9], abs=1e-6)


def test_dsw_routes_agree(dsw_levels):
    analytic = S.solve_double_square_well(*DSW_ARGS, S.EnergyWindow(0.0, 100.0))
    assert [s.index for s in analytic] == [s.index for s in dsw_levels]
    for a, b in zip(analytic, dsw_levels):
        assert a.energy == pytest.approx(b.energy, abs=1e-6)


def test_dsw_fd_oracle_agrees(dsw, dsw_levels):
    fd = S.solve_fd_oracle(dsw, count=len(dsw_levels))
    for a, b in zip(fd, dsw_levels):
        assert a.energy == pytest.approx(b.energy, abs=5e-3)


def test_dsw_has_eight_levels(dsw_levels):
    # Each well level splits into a tunneling pair, so there are twice as many as listed.
    assert [s.index for s in dsw_levels] == list(range(8))


def test_dsw_listed_values_are_odd_levels(dsw_levels):
    odd = [s.energy for s in dsw_levels[1::2]]
    assert odd == pytest.approx(LISTED_DSW, abs=1e-3)


@pytest.mark.xfail(strict=True, reason="the window holds 8 levels; the listed 4 are the odd ones")
def test_dsw_listed_spectrum(dsw_levels):
    assert [s.energy for s in dsw_levels] == pytest.approx(LISTED_DSW, abs=1e-3)


def test_dsw_symmetric_pairs():
    args = (-2.0, -1.0, 1.0, 2.0, 100.0, 100.0, 100.0)
    sols = S.solve_double_square_well(*args, S.EnergyWindow(0.0, 100.0))
    fd = S.solve_fd_oracle(P.double_square_well(*args), count=len(sols))
    assert len(sols) % 2 == 0
    for k in range(0, len(sols), 2):
        split = sols[k + 1].energy - sols[k].energy
        assert split > 0
        assert fd[k + 1].energy - fd[k].energy > 0
        if k + 2 < len(sols):
            assert split < 0.1 * (sols[k + 2].energy - sols[k + 1].energy)


def test_dsw_thin_barrier_limit():
    # [DERIVED] single well of width x_d - x_a: shooting on the merged well and the oracle.
    merged = P.from_segments([P.Segment.constant(-math.inf, -2.0, 100.0),
                              P.Segment.constant(-2.0, 2.0, 0.0),
                              P.Segment.constant(2.0, math.inf, 101.0)])
    thin = S.solve_double_square_well(-2.0, -5e-6, 5e-6, 2.0, 100.0, 100.0, 101.0,
                                      S.EnergyWindow(0.0, 100.0))
    shoot = S.solve_shooting(merged, S.EnergyWindow(0.0, 100.0))
    fd = S.solve_fd_oracle(merged, count=len(shoot))
    assert len(thin) == len(shoot) == len(fd)
    for a, b, c in zip(thin, shoot, fd):
        assert a.energy == pytest.approx(c.energy, abs=1e-3)
        assert a.energy == pytest.approx(b.energy, abs=1e-3)


@pytest.mark.parametrize("state", range(4))
def test_dsw_barrier_monotonicity(state):
    base = S.solve_double_square_well(*DSW_ARGS, S.EnergyWindow(0.0, 99.0))
    lo_args = (*DSW_ARGS[:5], 99.0, DSW_ARGS[6])
    hi_args = (*DSW_ARGS[:5], 101.0, DSW_ARGS[6])
    lower = S.solve_double_square_well(*lo_args, S.EnergyWindow(0.0, 99.0))
    higher = S.solve_double_square_well(*hi_args, S.EnergyWindow(0.0, 99.0))
    assert lower[state].energy <= base[state].energy <= higher[state].energy
    fd_lo = S.solve_fd_oracle(P.double_square_well(*lo_args), count=state + 1)
    fd_hi = S.solve_fd_oracle(P.double_square_well(*hi_args), count=state + 1)
    assert fd_lo[state].energy <= fd_hi[state].energy


def test_biharmonic_routes_agree(bih, bih_levels):
    analytic = S.solve_biharmonic(*BIH_ARGS, S.EnergyWindow(-5.0, 9.0))
    assert [s.index for s in analytic] == [s.index for s in bih_levels]
    for a, b in zip(analytic, bih_levels):
        assert a.energy == pytest.approx(b.energy, abs=1e-6)
    fd = S.solve_fd_oracle(bih, count=len(bih_levels))
    for a, b in zip(fd, bih_levels):
        assert a.energy == pytest.approx(b.energy, abs=5e-4)


def test_biharmonic_lowest_levels_pinned(bih_levels):
    # Regression values for the decaying solution, confirmed by the FD oracle above.
    want = [-4.000022, -2.000538, -0.007412, 0.99103, 1.950645, 2.967727]
    assert [s.energy for s in bih_levels[:6]] == pytest.approx(want, abs=2e-6)


@pytest.mark.xfail(strict=True, reason="the listed values are roots of the matching with the "
                                       "left solution that grows as x -> -inf")
def test_biharmonic_listed_spectrum():
    sols = S.solve_biharmonic(*BIH_ARGS, S.EnergyWindow(-5.0, 9.0))
    assert [s.energy for s in sols[:6]] == pytest.approx(LISTED_BIH, abs=1e-4)


def test_biharmonic_growing_branch_reproduces_list():
    sols = S.solve_biharmonic(*BIH_ARGS, S.EnergyWindow(-5.0, 9.0), left_branch="growing")
    assert [s.energy for s in sols] == pytest.approx(LISTED_BIH, abs=1e-4)


def test_biharmonic_matching_branch_validation():
    with pytest.raises(InvalidParameterError):
        S.biharmonic_matching(1.0, *BIH_ARGS, left_branch="x")


def test_biharmonic_double_oscillator_against_oracle():
    sols = S.solve_biharmonic(2.0, 2.0, 0.0, S.EnergyWindow(0.5, 8.0))
    fd = S.solve_fd_oracle(P.biharmonic(2.0, 2.0, 0.0, regime=False), count=len(sols))
    assert len(sols) >= 4
    for a, b in zip(sols, fd):
        assert a.index == b.index
        assert a.energy == pytest.approx(b.energy, abs=1e-5)


def test_biharmonic_degenerates_to_harmonic():
    sols = S.solve_biharmonic(0.0, 0.0, 0.0, S.EnergyWindow(0.5, 8.0))
    assert [s.energy for s in sols] == pytest.approx([1, 3, 5, 7], abs=1e-8)
    assert [s.index for s in sols] == [0, 1, 2, 3]


def test_index_law(dsw, dsw_levels, bih, bih_levels):
    for p, levels in ((dsw, dsw_levels), (bih, bih_levels)):
        energies = [s.energy for s in levels]
        assert all(np.diff(energies) > 0)
        for s in levels:
            assert G.full_trace(p, s.energy).psi_node_xs.size == s.index
