"""Adaptive flux reconstruction for the compressible Euler equations.

A nodal split-form discretization on Cartesian tensor-product elements whose
per-element correction parameter ``c`` is driven by a modal shock sensor,
blending DG (c = 0) and energy-stable FR (c = c_+) inside one scheme.
"""
from .cases import CASES, exact_solution, get_case, initial_condition
from .euler import FluxConfig, PositivityError
from .harness import CaseConfig, build_simulation, converge, error_norms, max_cfl_bisect, run_case, sweep
from .limiter import LimiterConfig, limit_element, limit_field
from .mesh import CartesianMesh, build_mesh
from .reference_ops import build_basis, build_fr_filter, build_hybridized_skew, build_reference_operators, c_plus
from .residual import Discretization
from .sensor import SensorConfig, modal_sensor, smooth_scale, update_c_field
from .time_march import Solver, TimeConfig, compute_dt, ssprk3_step

__version__ = "0.1.0"
