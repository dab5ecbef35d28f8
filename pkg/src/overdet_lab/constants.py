"""
Constants and default configuration values for the clamped-plate laboratory.
"""

import math
import sys

# Dimension of every general (non-radial) computation
PLANE_DIMENSION = 2

# Default resolution
DEFAULT_N_R = 32
DEFAULT_N_THETA = 64

# Geometry extremization
COARSE_SCAN_POINTS = 512
MAX_NEWTON_STEPS = 20
NEWTON_TOLERANCE = 1e-12
STATIONARITY_TOLERANCE = 1e-10
DENSE_SAMPLE_POINTS = 4096
DENSE_TRACE_POINTS = 1 << 16
FOLD_SCAN_RADII = 64

# Closeness caps (epsilon * max|rho| and epsilon * max k^4 |coef|)
DEFAULT_AMPLITUDE_CAP = 0.05
DEFAULT_C4_CAP = 0.8
CLOSENESS_DERIVATIVE_ORDER = 4

# Collocation: reciprocal condition below machine epsilon is singular to working precision
SINGULAR_RCOND = sys.float_info.epsilon

# Analysis
Z_NEWTON_STEPS = 10
Z_GRADIENT_TOLERANCE = 1e-13
MEAN_VALUE_DISKS = 20
MEAN_VALUE_RADIAL_NODES = 12
MEAN_VALUE_ANGULAR_NODES = 32
# Checks of four or more derivatives of u skip the rings clustered around the pole
POLE_EXCLUSION_RADIUS = 0.25

# Stability
DEFAULT_TWO_STAR = 10.0
DEFAULT_SIGMA_MARGIN = 0.02
DEFAULT_BETA_MARGIN = 0.02
DEGENERATE_INTEGRAL = 1e-14
NOISE_FLOOR_FACTOR = 1e3
MIN_FIT_POINTS = 3
CERTIFICATE_MIN_DISTANCE = 0.01
ETA_FLOOR = 0.005
ARGMAX_OFFSET_LIMIT = 0.5
CHAIN_SPREAD_LIMIT = 10.0
RADIAL_EXACTNESS = 1e-10
RADIAL_TRACE_EXACTNESS = 1e-10

# Reporting
FLOAT_FORMAT = ".17g"
SCALE_FLOOR_FACTOR = 1e-12

# Environment
THREADS_ENV_VAR = "OVERDET_LAB_THREADS"

TWO_PI = 2.0 * math.pi

# Shape presets: name -> list of (k, a_k, b_k)
SHAPE_PRESETS = {
    "disk": [],
    "cos1": [(1, 1.0, 0.0)],
    "cos2": [(2, 1.0, 0.0)],
    "cos3": [(3, 1.0, 0.0)],
    "mixed": [(2, 0.6, 0.0), (3, 0.0, 0.4)],
}
DEFAULT_SWEEP_EPSILONS = (0.04, 0.02, 0.01, 0.005)
DEFAULT_SWEEP_PS = (1.0, 2.0, 3.0, 10.0, math.inf)


# Supported bounds
class Limits:
    MIN_N_R = 8
    MAX_N_R = 128
    MIN_N_THETA = 16
    MAX_N_THETA = 256
    MIN_DIMENSION = 2
    MAX_DERIVATIVE_ORDER = 4
    MIN_P = 1.0


# Residual tolerances (see Tolerances in config.py for the overridable copy)
class DefaultTolerances:
    BIHARMONIC_INTERIOR = 1e-3
    TORSION_INTERIOR = 1e-8
    BOUNDARY_VALUE = 1e-12
    BOUNDARY_FLUX = 1e-9
    PUCCI_SERRIN = 1e-7
    MAIN_IDENTITY = 1e-6
    HARMONIC_FORM = 1e-6
    ENERGY_BALANCE = 1e-8
    TORSION_IDENTITY = 1e-6
    ZERO_FLUX = 1e-9
    LHS_AGREEMENT = 1e-10
    DEFICIT_IDENTITY = 1e-9
    LAPLACE_Q = 1e-8
    # Delta^2 q carries six derivatives of u; round-off floor at the default grid
    BILAPLACE_Q = 1e-5
    # Delta h is the collocation residual; rounding grows like (k / s)^4 off the pole
    HARMONICITY = 1e-7
    GRADIENT_AT_Z = 1e-8
    MEAN_VALUE = 1e-7
    GAP_RECONSTRUCTION = 1e-9
    INEQUALITY = 1e-9
    CERTIFICATE = 1e-9
    POSITIVITY = 1e-10
    IDENTITY_ABSOLUTE = 1e-12
    INVARIANCE = 1e-9
    CORE_DISTANCE = 0.1


# Error messages
class ErrorMessages:
    NON_STAR_SHAPED = "r(theta) must stay positive; minimum sampled radius is {r_min:.6g}"
    FOLDED_MAP = "interior map folds: minimum dR/ds is {r_s_min:.6g} at s = {s:.4g}, theta = {theta:.4g}"
    EMPTY_SHAPE = "epsilon = {epsilon} > 0 requires at least one mode"
    BAD_MODE = "mode index k must be an integer >= 1, got {k}"
    NOT_INTERIOR = "point ({x:.6g}, {y:.6g}) is not strictly inside the domain"
    NEWTON_STALL = "Newton refinement stalled at residual {residual:.3g}; using dense-scan minimum"
    ORDER_TOO_HIGH = "derivative order {order} exceeds the supported maximum of 4"
    GRID_MISMATCH = "field belongs to a different grid"
    INVALID_P = "p must satisfy p >= 1, got {p}"
    NON_FINITE_FIELD = "field values must be finite ({count} non-finite entries)"
    SINGULAR_SYSTEM = "collocation system is singular (rcond = {rcond:.3g})"
    UNCONVERGED = "{problem} residuals exceed tolerance: {details}"
    MAX_ON_BOUNDARY = "maximum of v lies on the boundary node ({x:.6g}, {y:.6g})"
    INEQUALITY_VIOLATED = "{name} violated: lhs = {lhs:.17g} > rhs = {rhs:.17g}"
    DEGENERATE_DENOMINATOR = "weighted integral {value:.3g} is below the degeneracy threshold"
    CERTIFICATE_VIOLATED = "min(u - c_Omega psi^2) = {value:.3g} below -{tolerance:.1g}"
    NOISE_FLOOR = "only {count} sweep points above the noise floor {floor:.3g} (need {required})"
    INADMISSIBLE_SHAPE = "epsilon * max|rho| = {amplitude:.6g} exceeds the amplitude cap {cap:.6g}"
    BAD_DIMENSION = "dimension must be an integer >= 2, got {n}"
    RESOLUTION_OUT_OF_RANGE = "{name} must be between {min_val} and {max_val}, got {value}"
    ODD_N_THETA = "n_theta must be even, got {value}"
    UNDER_RESOLVED = "n_theta = {n_theta} must be at least 4 * highest mode = {required}"
    UNKNOWN_PRESET = "unknown shape preset '{name}'; choose one of {choices}"
    CHECK_FAILED = "{count} check(s) failed: {names}"
    DECREASING_EPSILONS = "epsilon list must be strictly decreasing"
