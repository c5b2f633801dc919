"""Binary matrix factorization under a mean-parametrized Bernoulli model.

A data matrix over {0,1} is factored as Y ~ Bernoulli(W @ H) with W rows on
the probability simplex and H entries in [0, 1], optionally regularized by a
Beta(alpha, beta) prior on H.  Training uses closed-form
majorization-minimization updates with a guaranteed non-increasing
objective; masked training supports matrix completion, and the tune module
reproduces the grid-search / multi-restart evaluation protocol.
"""

from .binmat import (
    BinaryMatrix,
    ObservationMask,
    SplitSpec,
    density,
    load_coordinate_file,
    load_mask,
    save_coordinate_file,
    save_mask,
    split_observations,
)
from .errors import (
    BoundsError,
    ConfigError,
    DimensionError,
    DuplicateError,
    EmptyMaskError,
    NbmfError,
    NumericalError,
    ParseError,
    SearchError,
)
from .evaluate import (
    CompletionReport,
    MaskReport,
    PerplexityScore,
    completion_report,
    perplexity,
    predict_from_factors,
)
from .io import read_factors, read_report, write_factors, write_report
from .solver import (
    BetaPrior,
    FactorPair,
    FitConfig,
    FitReport,
    fit,
    fit_em,
    init_factors,
    objective,
    reconstruct,
    update_h,
    update_w,
)
from .synthetic import planted_dataset, random_binary_matrix
from .tune import (
    BoxStats,
    GridResult,
    GridRow,
    GridSpec,
    TestEvaluation,
    best_row,
    export_heatmap,
    grid_search,
    test_evaluation,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMatrix",
    "ObservationMask",
    "SplitSpec",
    "density",
    "load_coordinate_file",
    "load_mask",
    "save_coordinate_file",
    "save_mask",
    "split_observations",
    "BetaPrior",
    "FactorPair",
    "FitConfig",
    "FitReport",
    "fit",
    "fit_em",
    "init_factors",
    "objective",
    "reconstruct",
    "update_h",
    "update_w",
    "read_factors",
    "read_report",
    "write_factors",
    "write_report",
    "CompletionReport",
    "MaskReport",
    "PerplexityScore",
    "completion_report",
    "perplexity",
    "predict_from_factors",
    "BoxStats",
    "GridResult",
    "GridRow",
    "GridSpec",
    "TestEvaluation",
    "best_row",
    "export_heatmap",
    "grid_search",
    "test_evaluation",
    "planted_dataset",
    "random_binary_matrix",
    "NbmfError",
    "ConfigError",
    "ParseError",
    "BoundsError",
    "DuplicateError",
    "DimensionError",
    "EmptyMaskError",
    "NumericalError",
    "SearchError",
    "__version__",
]
