"""Numerical laboratory for a nonequilibrium two-phase free-interface problem.

The interface velocity is marched through its memory integral equation; an
independent front-fixed finite-difference solver cross-validates it; weighted
norm audits, tangent dynamics and an attractor-dimension bound close the loop.
"""

from .bounds import (BoundsReport, ConstantsTable, RunArtifacts,
                     compute_constants, confirm_violations, verify_apriori)
from .errors import StefanFrontError
from .heat_kernel import (HistoryQuadrature, erf_tail_bound, kernel,
                          singular_step_weights)
from .interface_solver import (FrontHistory, TravelingWave, VelocityMarch,
                               run, step, traveling_wave)
from .kinetics import (Family, KineticsModel, arrhenius, custom, from_table,
                       g_eval, g_inv, g_prime, nu_eval)
from .params import ProblemParams, SolverConfig
from .reconstruction import reconstruct, t1_apply, t2_apply
from .reference_pde import FDMarch, FDState, fd_run, fd_step
from .spaces import (EmbeddingReport, FieldDerivative, GridField, SpatialGrid,
                     WeightSpec, c_alpha_norm, derivative_field,
                     embedding_check, h_beta_norm)
from .tangent import (TangentSet, kaplan_yorke_dimension, linearized_step,
                      orthonormalize, trace_entries, volume_growth)

__version__ = "0.1.0"

__all__ = [
    "arrhenius", "BoundsReport", "c_alpha_norm", "compute_constants",
    "confirm_violations", "ConstantsTable", "custom", "derivative_field",
    "embedding_check", "EmbeddingReport", "erf_tail_bound", "Family",
    "FDMarch", "fd_run", "fd_step", "FDState", "FieldDerivative",
    "from_table", "FrontHistory", "g_eval", "g_inv", "g_prime", "GridField",
    "h_beta_norm", "HistoryQuadrature", "kaplan_yorke_dimension", "kernel",
    "KineticsModel", "linearized_step", "nu_eval", "orthonormalize",
    "ProblemParams", "reconstruct", "run", "RunArtifacts",
    "singular_step_weights", "SolverConfig", "SpatialGrid", "step",
    "StefanFrontError", "t1_apply", "t2_apply", "TangentSet", "trace_entries",
    "traveling_wave", "TravelingWave", "VelocityMarch", "verify_apriori",
    "volume_growth", "WeightSpec",
]
