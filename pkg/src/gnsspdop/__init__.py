"""Weighted least-squares GNSS positioning and dilution-of-precision analysis."""

__version__ = "0.1.0"

from .constellation import (
    CovarianceSpec,
    McSettings,
    Scenario,
    WalkerSpec,
    apply_overrides,
    from_azel,
    load_scenario,
    parse_scenario,
    walker_constellation,
)
from .covmodel import (
    CovarianceModel,
    composite,
    full_matrix,
    precision_via_lemma,
    scaled_identity,
    scintillation_diagonal,
)
from .dop import (
    DopReport,
    MismatchReport,
    expected_sq_error,
    mismatch_covariance,
    pdop,
    pdop_error_proportionality,
)
from .errors import (
    ConfigError,
    DegenerateGeometry,
    DimensionMismatch,
    GeometryError,
    InsufficientSamples,
    InsufficientSatellites,
    NotPsd,
    ParseError,
    PdopError,
    SingularMatrix,
    ValidationError,
)
from .estimator import SolveResult, estimate_position, posterior_covariance, wls_solve
from .geometry import (
    DesignMatrix,
    EcefPosition,
    GeodeticPosition,
    LosVector,
    build_design_matrix,
    ecef_to_enu,
    ecef_to_geodetic,
    geodetic_to_ecef,
    line_of_sight,
)
from .montecarlo import (
    McReport,
    NoiseSampler,
    mc_convergence_sweep,
    monte_carlo,
    run_mc,
    sample_noise,
)
