"""Biclustering via sparse clustering.

Mean biclusters come from sparse 2-means (or single linkage) weights tested
against their no-bicluster null with a Kolmogorov-Smirnov test; variance
biclusters use a log variance-gap criterion.  Layers are found one at a
time and residualized away.
"""
__version__ = "0.1.0"

from .core import (  # noqa: E402
    Bicluster,
    BiclustError,
    ConstantFeature,
    DataMatrix,
    InputError,
    NonNumeric,
    NumericError,
    Partition,
    RaggedRows,
    bcss,
    read_csv,
    rng_stream,
    standardize,
    write_csv,
)
from .hierarchy import cut_two, single_linkage  # noqa: E402
from .mean_biclust import BiclustConfig, LayerSequence, fit_primary, fit_sequence  # noqa: E402
from .nulls import (  # noqa: E402
    beta_cdf,
    beta_null_order_stats,
    chisq_variance_null_order_stats,
    ks_test_beta,
    permutation_null_order_stats,
)
from .sparse_kmeans import SparseKmeansConfig, sparse_two_means, update_weights  # noqa: E402
from .var_biclust import fit_variance_primary, fit_variance_sequence  # noqa: E402

__all__ = [
    "Bicluster",
    "BiclustConfig",
    "BiclustError",
    "ConstantFeature",
    "DataMatrix",
    "InputError",
    "LayerSequence",
    "NonNumeric",
    "NumericError",
    "Partition",
    "RaggedRows",
    "SparseKmeansConfig",
    "bcss",
    "beta_cdf",
    "beta_null_order_stats",
    "chisq_variance_null_order_stats",
    "cut_two",
    "fit_primary",
    "fit_sequence",
    "fit_variance_primary",
    "fit_variance_sequence",
    "ks_test_beta",
    "permutation_null_order_stats",
    "read_csv",
    "rng_stream",
    "single_linkage",
    "sparse_two_means",
    "standardize",
    "update_weights",
    "write_csv",
]
