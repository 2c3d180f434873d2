"""Sparse precision estimation for the stochastic coefficients of spatial
basis-expansion models: an l1-penalized likelihood minimized by a
difference-of-convex scheme with a graphical-lasso inner solver, plus
kriging prediction, model scoring, and graph inspection on top of the fit.
"""

from .basis import (
    BasisMatrix,
    NodeGrid,
    append_global_column,
    build_basis_matrix,
    build_harmonic_basis,
    build_multires_grid,
    build_single_grid,
    equispaced_sphere_nodes,
    great_circle_distance,
    sinusoidal_project,
    wendland_eval,
)
from .dcfit import FitReport, PenaltySpec, build_penalty, dc_fit, dc_gradient
from .glasso import GlassoProblem, GlassoSolution, duality_gap, glasso_solve, soft_threshold
from .graphs import (
    TruePrecision,
    gen_band,
    gen_cluster,
    gen_random,
    gen_scale_free,
    latticekrig_precision,
    spd_correct,
)
from .likelihood import (
    LikelihoodKernel,
    NuggetEstimate,
    empirical_cov_projections,
    estimate_nugget,
    full_nll,
    nll_with_constants,
    penalized_objective,
    reduced_nll,
    replicate_nll,
)
from .linalg import NotSPDError, NumericError
from .predict import (
    KrigingResult,
    aic,
    crps_gaussian,
    effective_df,
    implied_moments,
    krige,
    neighborhood,
    recovery_metrics,
)
from .select import CvPlan, cv_likelihood, cv_predictive, make_likelihood_plan, make_spatial_plan
from .simulate import SimDataset, simulate_replicates, true_nugget

__version__ = "0.1.0"
