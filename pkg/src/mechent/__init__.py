"""Steady-state entanglement of two mechanical resonators.

Two optomechanical cavities share a non-degenerate parametric amplifier
and a broadband two-mode squeezed input. After eliminating the cavities the
mirrors obey a 4x4 linear Gaussian model. This package solves that model
for its steady covariance and reports the logarithmic negativity of the
two mirrors. Grid sweeps and a bounded optimizer sit on top.
"""

from ._version import __version__
from .covariance import (
    CovarianceMatrix,
    solve_covariance_cramer,
    solve_lyapunov_generic,
    symmetric_closed_form,
)
from .effective import EffectiveModel, build_diffusion, build_drift, build_effective_model
from .entanglement import EntanglementResult, log_negativity, symplectic_invariants
from .exceptions import (
    ConfigError,
    MechentError,
    NearMarginalError,
    NoFeasibleRegionError,
    NumericalDegeneracyError,
    ParameterError,
    PhysicalityError,
    SingularEliminationError,
    SingularOperatingPointError,
    UnstableSystemError,
)
from .full_model import build_full_model, validate_elimination
from .optimize import OptimizeSpec, maximize_negativity
from .params import (
    OperatingPoint,
    PhysicalParams,
    ReducedParams,
    derive_operating_point,
    reduce,
    thermal_occupancy,
)
from .pipeline import evaluate, evaluate_batch
from .stability import routh_hurwitz
from .sweep import Axis, SweepSpec, reproduce_figure, run_sweep

__all__ = [
    "__version__",
    "Axis", "CovarianceMatrix", "EffectiveModel", "EntanglementResult", "OperatingPoint",
    "OptimizeSpec", "PhysicalParams", "ReducedParams", "SweepSpec",
    "build_diffusion", "build_drift", "build_effective_model", "build_full_model",
    "derive_operating_point", "evaluate", "evaluate_batch", "log_negativity",
    "maximize_negativity", "reduce", "reproduce_figure", "routh_hurwitz", "run_sweep",
    "solve_covariance_cramer", "solve_lyapunov_generic", "symmetric_closed_form",
    "symplectic_invariants", "thermal_occupancy", "validate_elimination",
    "ConfigError", "MechentError", "NearMarginalError", "NoFeasibleRegionError",
    "NumericalDegeneracyError", "ParameterError", "PhysicalityError",
    "SingularEliminationError", "SingularOperatingPointError", "UnstableSystemError",
]
