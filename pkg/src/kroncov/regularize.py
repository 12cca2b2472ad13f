"""Banding and tapering masks, doubly banded/tapered covariances, baselines.

A pq x pq covariance is "doubly masked" by the Hadamard product with
W2 (x) W1, where W1 is the p x p single-index weight pattern at bandwidth k1
and W2 the q x q pattern at k2.  ``MaskedCovariance`` stores only the
surviving entries, laid out as the rearranged (q^2 x p^2) matrix restricted
to in-band row pairs (l2, m2) and column pairs (l1, m1): that block-banded
form is what the factorization consumes, and at the bandwidths that matter
it is two orders of magnitude smaller than the dense matrix.

``baseline_regularize`` applies the same single-index weight scheme to the
full pq x pq covariance (one bandwidth over the vectorized data), which is
the classical full-vector banded / tapered estimator used for comparison.
"""

import numpy as np

from .core import DenseSymMatrix, DimensionError, ParameterError

BAND = "band"
TAPER = "taper"


def band_weight(k, l, m):
    """1 if |l - m| <= k else 0."""
    return 1.0 if abs(l - m) <= k else 0.0


def taper_weight(k, l, m):
    """Trapezoidal taper: 1 up to floor(k/2), linear decay toward 0 at k.

    For k in {0, 1} the half-width floor(k/2) is 0 and the weight degenerates
    to the diagonal indicator (avoids the 0/0 in the middle branch).  For odd
    k >= 3 the raw linear decay dips below zero at distance k, so the weight
    is clamped to keep the advertised [0, 1] range; even k (the only values
    the tuning grids use) are unaffected.
    """
    d = abs(l - m)
    h = k // 2
    if h == 0:
        return 1.0 if d == 0 else 0.0
    if d <= h:
        return 1.0
    if d <= k:
        return max(2.0 - d / h, 0.0)
    return 0.0


def _check_k(d, k, mode):
    k = int(k)
    if mode == BAND:
        if not 0 <= k <= d - 1:
            raise ParameterError(f"band k must be in [0, {d - 1}], got {k}")
    elif mode == TAPER:
        if not 0 <= k <= 2 * d:
            raise ParameterError(f"taper k must be in [0, {2 * d}], got {k}")
    else:
        raise ParameterError(f"unknown mask mode {mode!r}")
    return k


def weight_matrix(d, k, mode):
    """d x d single-index weight pattern W with W[l, m] = w_k(l, m)."""
    k = _check_k(d, k, mode)
    dist = np.abs(np.subtract.outer(np.arange(d), np.arange(d)))
    if mode == BAND:
        return (dist <= k).astype(np.float64)
    h = k // 2
    if h == 0:
        return np.eye(d)
    w = np.where(dist <= h, 1.0, np.where(dist <= k, np.maximum(2.0 - dist / h, 0.0), 0.0))
    return w


def weight_vector(d, k, mode):
    """weight_matrix raveled in vec order: w[m * d + l] = W[l, m]."""
    return weight_matrix(d, k, mode).ravel(order="F").copy()


def banded_pairs(d, k):
    """Flat vec-order indices m * d + l of the pairs with |l - m| <= k, sorted."""
    l, m = np.nonzero(np.abs(np.subtract.outer(np.arange(d), np.arange(d))) <= k)
    return np.sort(m * d + l)


class MaskedCovariance:
    """Doubly banded/tapered pq x pq covariance in compressed rearranged form.

    ``values[i, j]`` holds the post-mask entry for row pair
    ``row_pairs[i] = m2 * q + l2`` and column pair ``col_pairs[j] = m1 * p + l1``
    of the rearranged matrix, i.e. covariance entry ((l1, m1), (l2, m2)) times
    w_{k2}(l2, m2) * w_{k1}(l1, m1).
    """

    def __init__(self, p, q, k1, k2, mode, row_pairs, col_pairs, values):
        self.p = int(p)
        self.q = int(q)
        self.k1 = int(k1)
        self.k2 = int(k2)
        self.mode = mode
        self.row_pairs = row_pairs
        self.col_pairs = col_pairs
        self.values = values

    @property
    def dim(self):
        return self.p * self.q

    @property
    def nnz(self):
        return self.values.size

    def frobenius(self):
        # masked-out entries are zero, so the compressed block carries the norm
        return float(np.linalg.norm(self.values))

    def rearranged_shape(self):
        return (self.q * self.q, self.p * self.p)

    def rearranged_matvec(self, v):
        out = np.zeros(self.q * self.q)
        out[self.row_pairs] = self.values @ v[self.col_pairs]
        return out

    def rearranged_rmatvec(self, u):
        out = np.zeros(self.p * self.p)
        out[self.col_pairs] = self.values.T @ u[self.row_pairs]
        return out

    def rearranged_dense(self, max_entries=1 << 26):
        nr, nc = self.rearranged_shape()
        if nr * nc > max_entries:
            raise DimensionError(
                f"refusing to materialize {nr} x {nc} rearranged matrix"
            )
        R = np.zeros((nr, nc))
        R[np.ix_(self.row_pairs, self.col_pairs)] = self.values
        return R

    def to_dense(self, max_dim=4096):
        """Materialize the masked pq x pq matrix."""
        d = self.dim
        if d > max_dim:
            raise DimensionError(
                f"refusing to materialize {d} x {d} masked covariance "
                f"(limit {max_dim})"
            )
        p, q = self.p, self.q
        out = np.zeros((d, d))
        l2 = self.row_pairs % q
        m2 = self.row_pairs // q
        l1 = self.col_pairs % p
        m1 = self.col_pairs // p
        rows = l2[:, None] * p + l1[None, :]
        cols = m2[:, None] * p + m1[None, :]
        out[rows, cols] = self.values
        return out


def mask_separable(cov, p, q, k1, k2, mode):
    """Hadamard-mask a pq x pq covariance with W_{k2}(q) (x) W_{k1}(p).

    ``cov`` may be a CovEstimate, DenseSymMatrix or plain array of dimension
    p*q.  Returns the compressed MaskedCovariance.
    """
    dense = np.asarray(getattr(cov, "matrix", cov), dtype=np.float64)
    if dense.shape != (p * q, p * q):
        raise DimensionError(
            f"covariance shape {dense.shape} does not match (p*q, p*q) = "
            f"({p * q}, {p * q})"
        )
    k1 = _check_k(p, k1, mode)
    k2 = _check_k(q, k2, mode)
    # structural support equals the band of the same k for both modes
    row_pairs = banded_pairs(q, min(k2, q - 1))
    col_pairs = banded_pairs(p, min(k1, p - 1))
    w2 = weight_vector(q, k2, mode)[row_pairs]
    w1 = weight_vector(p, k1, mode)[col_pairs]
    l2 = row_pairs % q
    m2 = row_pairs // q
    l1 = col_pairs % p
    m1 = col_pairs // p
    vals = dense[l2[:, None] * p + l1[None, :], m2[:, None] * p + m1[None, :]]
    vals = vals * np.multiply.outer(w2, w1)
    return MaskedCovariance(p, q, k1, k2, mode, row_pairs, col_pairs, vals)


def baseline_regularize(cov, k, mode):
    """Single-index banding/tapering of the full pq x pq covariance."""
    dense = np.asarray(getattr(cov, "matrix", cov), dtype=np.float64)
    d = dense.shape[0]
    W = weight_matrix(d, k, mode)
    return DenseSymMatrix(dense * W)
