"""Sample and robust (truncated) covariance of vectorized matrix samples.

All covariances here divide by n, not n - 1; most libraries default to the
unbiased n - 1 divisor, so don't mix estimates across the boundary without
rescaling.  The robust path truncates entries at a threshold tau and takes
the plain uncentered Gram matrix of the truncated data; it expects mean-zero
data, with ``center_transform`` available when that does not hold.
"""

from dataclasses import dataclass

import numpy as np

from .core import DenseSymMatrix, MatrixDataset, ParameterError

SAMPLE = "sample"
UNCENTERED = "uncentered"
ROBUST_TRUNCATED = "robust_truncated"


@dataclass(frozen=True)
class CovEstimate:
    matrix: DenseSymMatrix
    centered: bool
    kind: str
    tau: float | None = None

    @property
    def dim(self):
        return self.matrix.dim


def sample_mean(ds):
    """Entrywise mean sample, a p x q matrix."""
    return ds.data.mean(axis=0)


def sample_cov(ds, centered=True):
    """Sample covariance of vec(X) with divisor n.

    centered=True subtracts the sample mean (requires n >= 2); False gives
    the uncentered Gram matrix (1/n) sum vec(X_i) vec(X_i)'.
    """
    v = ds.vecs()
    if centered:
        if ds.n < 2:
            raise ParameterError("centered covariance requires n >= 2")
        v = v - v.mean(axis=0)
        kind = SAMPLE
    else:
        kind = UNCENTERED
    m = (v.T @ v) / ds.n
    return CovEstimate(DenseSymMatrix(m), centered, kind)


def truncate_dataset(ds, tau):
    """Clip every entry e to sgn(e) * min(|e|, tau)."""
    if not tau > 0:
        raise ParameterError(f"tau must be > 0, got {tau}")
    return MatrixDataset(np.clip(ds.data, -tau, tau))


def robust_cov(ds, tau):
    """Uncentered Gram covariance of the entrywise-truncated dataset.

    Callers are responsible for mean-zero data; see center_transform.
    """
    return CovEstimate(
        sample_cov(truncate_dataset(ds, tau), centered=False).matrix,
        centered=False,
        kind=ROBUST_TRUNCATED,
        tau=float(tau),
    )


def center_transform(ds):
    """Replace each sample by n/(n-1) * (X_i - mean); output has zero mean."""
    if ds.n < 2:
        raise ParameterError("center_transform requires n >= 2")
    factor = ds.n / (ds.n - 1)
    return MatrixDataset(factor * (ds.data - sample_mean(ds)))


def tau_candidates(ds, percentiles):
    """Nearest-rank percentiles of the pooled |entries|.

    Returns the deduplicated values in descending order; percentiles must lie
    in (0, 100].
    """
    pcts = [float(x) for x in percentiles]
    if not pcts:
        raise ParameterError("percentile list is empty")
    for x in pcts:
        if not 0 < x <= 100:
            raise ParameterError(f"percentiles must lie in (0, 100], got {x}")
    pooled = np.sort(np.abs(ds.data), axis=None)
    m = pooled.shape[0]
    out = []
    for x in pcts:
        rank = int(np.ceil(x / 100.0 * m))  # nearest-rank, 1-based
        out.append(float(pooled[max(rank, 1) - 1]))
    uniq = sorted(set(out), reverse=True)
    return uniq


def theoretical_tau(p, q, n):
    """Rate-scaled threshold (log max(p,q) / n)^(-1/4) with constant 1.

    Theoretical reference value only; practical runs select tau by resampling
    over a percentile pool.
    """
    if n < 1 or p < 1 or q < 1:
        raise ParameterError("p, q, n must be >= 1")
    val = np.log(max(p, q)) / n
    if val <= 0:
        raise ParameterError("log(max(p, q)) must be positive (need max(p,q) >= 2)")
    return float(val ** -0.25)
