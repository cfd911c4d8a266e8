"""Ship wake detection via Cauchy-regularised Radon inversion."""

__version__ = "0.1.0"

from .cauchy import (  # noqa: E402
    CauchyParams, ProxParams, cauchy_neg_log_prior, cauchy_prox_field, cauchy_prox_scalar,
)
from .detection import (  # noqa: E402
    DetectorConfig, ShipMaskSpec, WakeCandidate, WakeReport, compute_FI,
    confirm_candidates, detect_arms, detect_turbulent, detect_wakes, mask_ship,
    search_region,
)
from .errors import (  # noqa: E402
    ConfigurationError, DetectionError, DimensionError, DivergenceError,
    GeometryError, ImageIOError, NormalizationError, SpecificationError, WakeRadonError,
)
from .geometry import (  # noqa: E402
    RadonGrid, RadonImage, estimate_lipschitz, radon_forward, radon_inverse,
    radon_inverse_adjoint,
)
from .myula import (  # noqa: E402
    SolverConfig, SolverDiagnostics, grad_data_fidelity, myula_step, run_myula,
)
from .simulate import GroundTruth, SceneSpec, render_scene, table1_suite  # noqa: E402

__all__ = [
    "CauchyParams", "ProxParams", "cauchy_neg_log_prior", "cauchy_prox_field",
    "cauchy_prox_scalar", "DetectorConfig", "ShipMaskSpec", "WakeCandidate",
    "WakeReport", "compute_FI", "confirm_candidates", "detect_arms",
    "detect_turbulent", "detect_wakes", "mask_ship", "search_region",
    "ConfigurationError", "DetectionError", "DimensionError", "DivergenceError",
    "GeometryError", "ImageIOError", "NormalizationError", "SpecificationError",
    "WakeRadonError", "RadonGrid", "RadonImage", "estimate_lipschitz",
    "radon_forward", "radon_inverse", "radon_inverse_adjoint", "SolverConfig",
    "SolverDiagnostics", "grad_data_fidelity", "myula_step", "run_myula",
    "GroundTruth", "SceneSpec", "render_scene", "table1_suite",
]
