"""Positive-definite kernels on finite metric spaces built from distance
embeddings into weighted sequence space."""

from .analysis import (
    EmpiricalMeasure,
    KRRFit,
    SweepReport,
    functional_F,
    krr_fit,
    mean_inner,
    mmd,
    universality_sweep,
)
from .covering import Covering, cover_with_budget, greedy_cover, make_covering
from .embedding import (
    BoundedValue,
    EmbeddingConfig,
    EmbeddingContext,
    SplitAssignment,
    adapted_basis,
    adapted_beta,
    b_apply_prefix,
    default_prefix,
    default_q,
    distance_bounded,
    inner_product_bounded,
    phi_hat,
    phi_prefix,
    phi_t,
    split_series,
    sq_distance_bounded,
)
from .errors import InputFormatError, MetricKernelError, ValidationError
from .kernel import (
    GramMatrix,
    KernelModel,
    certify,
    embedding_gaps,
    feature_distance_sq,
    gram,
    k_bounded,
    k_hat,
    k_t_eval,
    psd_check,
    rho_bound,
)
from .metric import (
    FiniteMetricSpace,
    from_distance_matrix,
    from_graph,
    from_point_cloud,
    load_space,
)
from .scalar import RadialSpec, TaylorSpec, load_kernel_spec, scalar_eval

__all__ = [name for name in dir() if not name.startswith("_")]
