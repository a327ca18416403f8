"""Special quadrature for non-local slender-body theory in Stokes flow."""

from .finitepart import (
    LineDensity,
    ModifiedWeightTable,
    SlenderParams,
    build_weight_table,
    centerline_velocity,
    eval_K,
    eval_K_all,
    eval_L,
    eval_Lambda,
    g0_scalar,
    g_pair,
    g_vector,
    qk_signkernel,
)
from .geometry import (
    FiberCurve,
    PanelizedCurve,
    discretize,
    make_custom,
    make_helix,
    make_straight,
)
from .nearsing import (
    NearEvalConfig,
    RootNotFoundError,
    RootPair,
    eval_S,
    eval_S_regular,
    eval_S_special,
    find_root,
    qkp_moments,
)
from .oracle import (
    AccuracyError,
    ErrorGrid,
    adaptive_integrate,
    convergence_study,
    diagonal_eigenvalues,
    reference_K,
    reference_L,
    reference_S,
    scaled_legendre,
)
from .quadcore import (
    LegendreCoeffs,
    PanelGrid,
    QuadratureRule,
    SingularSystemError,
    gauss_legendre,
    integrate,
    interpolate_to_uniform,
    legendre_deriv_coeffs,
    legendre_eval,
    panelize,
    solve_vandermonde_transpose,
    to_legendre,
)

__version__ = "0.1.0"
