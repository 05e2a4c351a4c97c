from .norms import NormTerms, WeightedNormSpec, discrete_weighted_norm, neighbour_pairs, weighted_norm_terms
from .barriers import (
    BarrierSpec,
    BarrierVerdict,
    barrier_check,
    barrier_values,
    corner_barrier_spec,
    corner_sector,
    default_tau,
    laplacian_problem,
)
from .residuals import ResidualNorms, VorticityResult, corner_mask, euler_residuals, observed_order, stencil_mask, vorticity_check
from .streamlines import StreamlineTrace, default_seeds, max_variation, streamline_conservation
from .decay import DecayFit, decay_fit
from .truncation import TruncationStudy, columns_for, truncation_study
from .report import CheckResult, DiagnosticsReport
