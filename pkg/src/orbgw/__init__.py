"""Exact genus-zero orbifold Gromov-Witten invariants from WDVV recursion."""

from .arith import format_rational, make_rational, parse_rational
from .chowring import ChowClass, TargetGeometry, build_target, load_geometry, verify_presentation
from .correlators import CorrelatorKey, InvariantTable, lookup_or_solve, normalize
from .targets import p2, p112
from .wdvv import (
    generate_wdvv, hodge_integral, kontsevich_numbers, solve_correlator, wdvv_residual_audit,
)

__version__ = "0.1.0"
