"""Constrained minimizers and standing waves of radial nonlinear Klein-Gordon systems."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DegenerateComponentError,
    DomainError,
    ModelEvaluationError,
    ParameterError,
    ShapeError,
    SolwaveError,
    StabilityError,
)
from .model import (  # noqa: E402
    AssumptionReport,
    NonlinearityModel,
    builtin_model,
    check_assumptions,
    estimate_alpha,
    estimate_alpha_j,
    evaluate,
    free_model,
)
from .grid import FieldState, RadialGrid, integrate, laplacian_radial, make_grid, norms  # noqa: E402
from .functionals import charges, energy, lambda_ratio, reduced_energy_and_gradient, xi  # noqa: E402
from .verify import (  # noqa: E402
    coercivity_audit,
    default_eta,
    hylomorphy_table,
    minimizer_diagnostics,
    pohozaev_defect,
    trial_field,
    trial_sigma,
)
from .solver import InitialGuess, SolverConfig, SolverResult, minimize, residual_elliptic, sweep  # noqa: E402
from .evolve import ComplexFieldState, evolve_nlkg, to_standing_wave  # noqa: E402

__all__ = [
    "ConfigurationError",
    "DegenerateComponentError",
    "DomainError",
    "ModelEvaluationError",
    "ParameterError",
    "ShapeError",
    "SolwaveError",
    "StabilityError",
    "AssumptionReport",
    "NonlinearityModel",
    "builtin_model",
    "check_assumptions",
    "estimate_alpha",
    "estimate_alpha_j",
    "evaluate",
    "free_model",
    "coercivity_audit",
    "default_eta",
    "hylomorphy_table",
    "minimizer_diagnostics",
    "pohozaev_defect",
    "trial_field",
    "trial_sigma",
    "FieldState",
    "RadialGrid",
    "integrate",
    "laplacian_radial",
    "make_grid",
    "norms",
    "charges",
    "energy",
    "lambda_ratio",
    "reduced_energy_and_gradient",
    "xi",
    "InitialGuess",
    "SolverConfig",
    "SolverResult",
    "minimize",
    "residual_elliptic",
    "sweep",
    "ComplexFieldState",
    "evolve_nlkg",
    "to_standing_wave",
]
