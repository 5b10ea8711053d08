"""Third-order semi-implicit projection solver for the Landau-Lifshitz-Gilbert equation."""

from .errors import (ConfigError, DegenerateMagnitude, DimensionTooLarge, LLGError,
                     NonPositiveError, ParseError, SolverDiverged, ValidationError)
from .grid import Grid, extend_neumann, grad_norm_sq, gradient4, laplacian4, norms
from .mms import MMS_1D, MMS_3D, ManufacturedSolution, forcing
from .scheme import SchemeParams, SchemeState, run, step
from .study import StudyConfig, convergence_study, estimate_order, run_case

__version__ = "0.1.0"
