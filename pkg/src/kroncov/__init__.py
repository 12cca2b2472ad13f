"""Separable covariance estimation for matrix-valued samples.

Estimates cov(vec(X)) of n i.i.d. p x q matrix samples as a Kronecker
product sigma2 (x) sigma1 of two small factors, regularized by banding or
tapering in each direction, with a truncation-based robust variant for
heavy-tailed data, resampling-based tuning of all regularization parameters,
classical full-vector baselines, and a Monte Carlo benchmark harness.
"""

__version__ = "0.1.0"

from .backend import backend_name
from .core import (
    DataFormatError,
    DenseSymMatrix,
    DimensionError,
    KroncovError,
    MatrixDataset,
    NumericalError,
    ParameterError,
    Rng,
    SeparableCovariance,
    norm_diff_separable,
    norm_diff_separable_vs_dense,
    norm_frobenius,
    norm_l1,
    norm_linf,
    norm_max,
    norm_operator,
    unvec,
    vec,
)
from .covariance import (
    CovEstimate,
    center_transform,
    robust_cov,
    sample_cov,
    sample_mean,
    tau_candidates,
    theoretical_tau,
    truncate_dataset,
)
from .dataio import read_dataset, read_dataset_csv, write_dataset, write_dataset_csv
from .nkp import (
    Rank1Factor,
    RearrangedView,
    band_equivalence_check,
    kron_factorize,
    kron_factorize_detailed,
    leading_singular_triple,
    rearrange,
    xi,
)
from .regularize import (
    BAND,
    TAPER,
    MaskedCovariance,
    band_weight,
    baseline_regularize,
    mask_separable,
    taper_weight,
    weight_matrix,
    weight_vector,
)
from .simulate import (
    CovModel,
    SimConfig,
    build_cov,
    sample_matrix_normal,
    sample_matrix_t,
    simulate,
    truth_covariance,
)
from .tuning import TuningConfig, TuningResult, score, select, split
from .bench import ExperimentSpec, ResultTable, run_experiment, run_replication

__all__ = [name for name in dir() if not name.startswith("_")]
