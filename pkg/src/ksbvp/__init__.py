"""Numerical solver for a dispersive Kuramoto-Sivashinsky equation posed on
the quarter plane x > 0, t > 0 with inhomogeneous boundary data.

The construction mirrors the analytical solution method: a whole-line
Fourier multiplier flow, a boundary-contour kernel for the data at x = 0,
Duhamel integration for forcing, and a contraction iteration for the
nonlinearity, with Sobolev-norm instrumentation to check the estimates
that drive the iteration.
"""

__version__ = "0.1.0"

from .boundary import BoundaryData, BoundaryPropagator, QuadratureConfig, wbdr_eval, wbdr_field
from .compat import check_compat, phi_k_sequence
from .errors import (
    AccuracyWarning,
    ConfigurationError,
    DivergenceError,
    IncompleteRecordError,
    RefinementNeededError,
    RootSelectionError,
)
from .fd_oracle import FDConfig, fd_compare, fd_solve
from .grids import FieldSeries, Grid1D, ModelParams, SpectralField, TimeGrid
from .harness import ExperimentConfig, run_experiment, verify_estimates
from .nonlinear import (
    ConstantsCalibration,
    bootstrap_time_derivative,
    calibrate_constants,
    energy_monitor,
    pick_local_step,
    solve_global,
    solve_local,
    solve_weighted,
)
from .roots import char_roots, root_curve
from .sobolev import (
    NormReport,
    data_norm,
    hs_norm_halfline,
    hs_norm_line,
    pair_norm_time,
    x_eps_norm,
    x_norm,
)
from .spectral import duhamel_half_line, propagate_half_line_series, symbol
