"""Entanglement measures and secant varieties of the Segre variety."""

from .errors import (
    DegenerateFactorError,
    DomainError,
    FormatError,
    IsometryError,
    NormalizationError,
    NotFilledError,
    RankError,
    ResourceError,
    SegrescopeError,
    ShapeError,
)
from .states import (
    DensityMatrix,
    Ensemble,
    PureState,
    SystemShape,
    density_from_pure,
    load_state,
    multi_index_to_offset,
    offset_to_multi_index,
    reduced_density,
    save_state,
)
from .segre import (
    Kind,
    Quadric,
    QuadricSet,
    generate_quadrics,
    is_separable,
    partition_reshape,
    segre_embed,
    separability_residual,
)
from .measures import CONCURRENCE, FMEASURE, MeasureKind, MeasureSpec, pure_measure, wootters_pure
from .secant import (
    RankEstimate,
    SecantReport,
    best_rank_r,
    expected_secant_dim,
    least_filling_k,
    secant_dimension,
    secant_membership,
    tangent_basis_at,
)
from .roof import (
    RoofResult,
    convex_roof_upper_bound,
    decomposition_from_isometry,
    ensemble_average,
    wootters_mixed,
)
from .codes import CodeParams, Family, perfect_code_params, verify_fill

__version__ = "0.1.0"
