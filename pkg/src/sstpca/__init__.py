"""Tensor PCA for collections of undirected networks on a shared node set.

Core objects: SemiSymTensor (a stack of symmetric matrices), Factor (one
fitted component), and Decomposition (greedily deflated multi-factor fit).
Also provided: CUSUM changepoint detection, matrix-PCA/HOSVD baselines,
and a seeded simulation harness.
"""

__version__ = "0.1.0"

from .baselines import hosvd, matricized_pca, truncated_matricized_pca
from .changepoint import ChangepointResult, cusum_tensor, detect_changepoint
from .decompose import (
    Factor,
    FitDiagnostics,
    FitOptions,
    fit_single_factor,
    init_u,
    u_update,
    u_update_smoothed,
    v_update,
)
from .deflate import (
    Decomposition,
    OrthogonalityReport,
    deflate,
    fit_multi,
    orthogonality_report,
)
from .linalg import (
    normalize,
    principal_angles,
    procrustes_aligned_rmse,
    random_stiefel,
    random_unit,
    sign_aligned_error,
    sin_theta_frob,
    subspace_angle,
    sym_eigen_top_r,
)
from .ranksel import rank_select_bic
from .simulate import (
    SpikeTruth,
    SweepCell,
    fit_adversarial,
    rate_sweep,
    rdpg_dirichlet_series,
    sbm_series,
    spike_model,
)
from .tensor import (
    SemiSymTensor,
    UpperTriMatrix,
    frob_inner,
    frob_norm,
    matricize_upper,
    new_from_slices,
    rank1_outer,
    ropnorm_sampled_lower,
    ropnorm_upper_bound,
    trace_product,
    ttm,
    ttv3,
    unuvec,
    uvec,
)

__all__ = [
    "__version__",
    "SemiSymTensor",
    "UpperTriMatrix",
    "Factor",
    "FitOptions",
    "FitDiagnostics",
    "Decomposition",
    "OrthogonalityReport",
    "ChangepointResult",
    "SpikeTruth",
    "SweepCell",
    "new_from_slices",
    "ttv3",
    "trace_product",
    "rank1_outer",
    "matricize_upper",
    "uvec",
    "unuvec",
    "frob_inner",
    "frob_norm",
    "ttm",
    "ropnorm_upper_bound",
    "ropnorm_sampled_lower",
    "sym_eigen_top_r",
    "normalize",
    "principal_angles",
    "sin_theta_frob",
    "subspace_angle",
    "procrustes_aligned_rmse",
    "sign_aligned_error",
    "random_stiefel",
    "random_unit",
    "fit_single_factor",
    "v_update",
    "u_update",
    "u_update_smoothed",
    "init_u",
    "deflate",
    "fit_multi",
    "orthogonality_report",
    "cusum_tensor",
    "detect_changepoint",
    "spike_model",
    "sbm_series",
    "rdpg_dirichlet_series",
    "fit_adversarial",
    "rate_sweep",
    "matricized_pca",
    "truncated_matricized_pca",
    "hosvd",
    "rank_select_bic",
]
