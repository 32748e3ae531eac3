"""Bound states of one-dimensional multi-well potentials and exact quantization rule checks."""

from .errors import QRuleError
from .potential import (
    Potential,
    Region,
    RegionPartition,
    Segment,
    biharmonic,
    build,
    double_square_well,
    from_segments,
    harmonic,
    partition,
    turning_points,
)
from .propagate import (
    FilmResult,
    LogDerivTrace,
    count_crossings,
    count_phi_zeros,
    film_propagate,
    full_trace,
    integrate_left,
    integrate_right,
    matching_mismatch,
)
from .quantize import QuantizationReport, RegionContribution, verify_rule
from .solve import (
    EigenSolution,
    EnergyWindow,
    solve_biharmonic,
    solve_double_square_well,
    solve_fd_oracle,
    solve_shooting,
)

__version__ = "0.1.0"
