"""Model-based seasonal adjustment with constrained and regularized AR components."""

from .arparam import (
    RootBounds,
    RootSet,
    ar_parcor,
    coeffs_to_parcor,
    coeffs_to_roots,
    default_root_bounds,
    is_stationary,
    parcor_to_coeffs,
    roots_to_coeffs,
    roots_to_rootset,
    transform_ar,
)
from .estimate import (
    FitOptions,
    FitResult,
    LambdaPath,
    ParamVector,
    ScanTable,
    aic,
    default_lambda_grid,
    fit,
    lambda_sweep,
    objective,
    order_scan,
    param_count,
)
from .exceptions import (
    ConstraintViolationError,
    DegenerateFitError,
    EstimationError,
    NumericalDegeneracyError,
    SeasAdjError,
    SpecificationError,
    UsageError,
)
from .model import (
    ComponentSeries,
    DecompSpec,
    build_state_space,
    extract_components,
    state_dimension,
)
from .simulate import simulate, synthetic_fixture
from .statespace import (
    FilterInit,
    FilterOutput,
    SmoothedStates,
    StateSpaceModel,
    concentrated_scale,
    fixed_interval_smooth,
    forecast,
    kalman_filter,
    log_likelihood,
)

__version__ = "0.1.0"
