"""Resampling-based selection of bandwidths and the truncation threshold.

Candidate fits are trained on a random n1-subset and scored against the
centered sample covariance of the held-out part; scores are averaged over N
splits and the minimizer wins.  Ties break toward the most parsimonious
estimator: smallest k1 + k2, then smallest k1, then the largest truncation
threshold.

The score norm defaults to the entrywise absolute sum ("l11"); the
max-column-sum norm ("l1") is available but is dominated by the test
covariance's own off-band sampling noise, which makes the score surface
nearly flat in the bandwidths and the argmin erratic.  The entrywise sum
aggregates the same comparison over all entries and concentrates sharply at
the oracle bandwidths.

The grid loop never refits covariances: per split it builds the rearranged
train covariance once (one per candidate threshold for robust variants) and
reuses it for every (k1, k2) via Hadamard-weighted power iteration, warm
starting along the k2 sweep.
"""

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .core import ParameterError, Rng
from .covariance import robust_cov, sample_cov, tau_candidates, truncate_dataset
from .nkp import MATERIALIZE_LIMIT, kron_factorize, xi
from .regularize import (
    BAND,
    TAPER,
    banded_pairs,
    baseline_regularize,
    mask_separable,
    weight_vector,
)

BAND_EST = "band"
TAPER_EST = "taper"
ROBUST_BAND = "robust_band"
ROBUST_TAPER = "robust_taper"
BASELINE_BAND = "baseline_band"
BASELINE_TAPER = "baseline_taper"

ESTIMATORS = (BAND_EST, TAPER_EST, ROBUST_BAND, ROBUST_TAPER,
              BASELINE_BAND, BASELINE_TAPER)

# percentile pool used for threshold candidates when none is configured
DEFAULT_TAU_PERCENTILES = (99.9999, 99.999, 99.99, 99.9, 95.0, 90.0)

SCORE_TOL = 1e-7
SCORE_MAX_ITER = 5000

_GRID_CAP_BAND = 20
_GRID_CAP_TAPER = 40


def estimator_mode(estimator):
    if estimator not in ESTIMATORS:
        raise ParameterError(f"unknown estimator {estimator!r}")
    return TAPER if estimator.endswith("taper") else BAND


def is_robust(estimator):
    return estimator in (ROBUST_BAND, ROBUST_TAPER)


def is_baseline(estimator):
    return estimator in (BASELINE_BAND, BASELINE_TAPER)


def default_grid(dim, mode):
    """Default bandwidth candidates: every k up to min(dim-1, 20) for band,
    the even values up to min(2*dim, 40) for taper."""
    if mode == BAND:
        return tuple(range(0, min(dim - 1, _GRID_CAP_BAND) + 1))
    return tuple(range(0, min(2 * dim, _GRID_CAP_TAPER) + 1, 2))


@dataclass(frozen=True)
class TuningConfig:
    estimator: str
    splits: int = 10
    n1: int | None = None  # default: floor(n / 3)
    grid1: tuple | None = None
    grid2: tuple | None = None
    tau_pool: tuple | None = None
    tau_percentiles: tuple | None = None
    center_train: bool = True  # ignored by robust variants (always uncentered)
    score_norm: str = "l11"  # "l11" entrywise abs sum, "l1" max column sum
    seed: int = 0

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ParameterError(f"unknown estimator {self.estimator!r}")
        if self.splits < 1:
            raise ParameterError("splits must be >= 1")
        if self.score_norm not in ("l11", "l1"):
            raise ParameterError(f"unknown score norm {self.score_norm!r}")


@dataclass(frozen=True)
class TuningResult:
    estimator: str
    k1_hat: int
    k2_hat: int | None
    tau_hat: float | None
    grid1: tuple
    grid2: tuple
    tau_pool: tuple
    scores: np.ndarray  # shape (len(grid1), len(grid2) or 1, len(tau_pool) or 1)
    split_indices: tuple  # ((train_idx, test_idx), ...) per split

    def score_records(self):
        recs = []
        g2 = self.grid2 or (None,)
        taus = self.tau_pool or (None,)
        for i1, k1 in enumerate(self.grid1):
            for i2, k2 in enumerate(g2):
                for it, tau in enumerate(taus):
                    recs.append(
                        {"k1": k1, "k2": k2, "tau": tau,
                         "score": float(self.scores[i1, i2, it])}
                    )
        return recs

    def min_score(self):
        return float(self.scores.min())


def split(ds, n1, rng):
    """Uniform random partition into (train of size n1, rest)."""
    tr, te = _split_indices(ds.n, n1, rng.generator() if isinstance(rng, Rng) else rng)
    return ds.subset(tr), ds.subset(te)


def _split_indices(n, n1, gen):
    if not 1 <= n1 < n:
        raise ParameterError(f"need 1 <= n1 < n, got n1={n1}, n={n}")
    perm = gen.permutation(n)
    return np.sort(perm[:n1]), np.sort(perm[n1:])


def _test_cov(test_ds):
    if test_ds.n < 2:
        raise ParameterError("test set must hold at least 2 samples")
    return sample_cov(test_ds, centered=True).matrix.values


def _train_cov(train_ds, estimator, tau, center_train):
    if is_robust(estimator):
        if tau is None:
            raise ParameterError(f"{estimator} needs a truncation threshold")
        return robust_cov(train_ds, tau).matrix.values
    return sample_cov(train_ds, centered=center_train).matrix.values


def _score_kernels(score_norm):
    if score_norm == "l1":
        return kernels.kron_diff_l1, kernels.dense_diff_l1
    return kernels.kron_diff_l11, kernels.dense_diff_l11


def score(train, test, k1, k2, estimator, tau=None, center_train=True,
          score_norm="l11"):
    """Resampling score of one candidate: norm of fit(train) - cov(test)."""
    mode = estimator_mode(estimator)
    kron_norm, dense_norm = _score_kernels(score_norm)
    te = _test_cov(test)
    cov_tr = _train_cov(train, estimator, tau, center_train)
    if is_baseline(estimator):
        fit = baseline_regularize(cov_tr, k1, mode)
        return float(dense_norm(fit.values, te))
    p, q = train.p, train.q
    masked = mask_separable(cov_tr, p, q, k1, k2, mode)
    sep = kron_factorize(masked, tol=SCORE_TOL, max_iter=SCORE_MAX_ITER,
                         method="power")
    return float(kron_norm(sep.sigma2.values, sep.sigma1.values, te))


def _resolve_grids(cfg, p, q):
    mode = estimator_mode(cfg.estimator)
    if is_baseline(cfg.estimator):
        grid1 = tuple(cfg.grid1) if cfg.grid1 else default_grid(p * q, mode)
        grid2 = ()
    else:
        grid1 = tuple(cfg.grid1) if cfg.grid1 else default_grid(p, mode)
        grid2 = tuple(cfg.grid2) if cfg.grid2 else default_grid(q, mode)
    if not grid1 or (not grid2 and not is_baseline(cfg.estimator)):
        raise ParameterError("bandwidth grids must be nonempty")
    return grid1, grid2


def _resolve_taus(cfg, ds):
    if not is_robust(cfg.estimator):
        return ()
    if cfg.tau_pool:
        return tuple(float(t) for t in cfg.tau_pool)
    pcts = cfg.tau_percentiles or DEFAULT_TAU_PERCENTILES
    return tuple(tau_candidates(ds, pcts))


def _sym_outer_factors(sigma, u, v, p, q):
    """Symmetrized (B, C) with B (x) C equal to the rank-one product."""
    U = u.reshape(q, q)
    B = (0.5 * sigma) * (U + U.T)
    V = v.reshape(p, p)
    C = 0.5 * (V + V.T)
    return np.ascontiguousarray(B), np.ascontiguousarray(C)


def _score_grid_for_rearranged(R, w1_list, w2_list, te, p, q, kron_norm,
                               row_pairs=None, col_pairs=None):
    """Scores for every (k1, k2) against the dense test covariance te.

    R is the (possibly compressed) rearranged train covariance; w1_list and
    w2_list hold the per-candidate weight vectors already restricted to the
    compressed index sets when those are given.  For each k1 the columns
    outside the k1 support are sliced away once, so the inner k2 sweep only
    touches live columns (the kernel skips dead rows on its own).
    """
    n1g, n2g = len(w1_list), len(w2_list)
    out = np.empty((n1g, n2g))
    ncols = R.shape[1]
    v0 = np.zeros(ncols)
    if col_pairs is None:
        v0[:] = np.eye(p).ravel()
    else:
        v0[np.searchsorted(col_pairs, np.arange(p) * p + np.arange(p))] = 1.0
    v0 /= np.linalg.norm(v0)
    for i1 in range(n1g):
        w1 = w1_list[i1]
        cols = np.flatnonzero(w1)
        if cols.size < ncols:
            Rc = np.ascontiguousarray(R[:, cols])
            w1c = np.ascontiguousarray(w1[cols])
            v_start = np.ascontiguousarray(v0[cols])
        else:
            cols = None
            Rc, w1c, v_start = R, w1, v0
        for i2 in range(n2g):
            w2 = w2_list[i2]
            sigma, u, v, _, resid, status = kernels.rank1_power_weighted(
                Rc, w2, w1c, v_start, SCORE_TOL, SCORE_MAX_ITER
            )
            if status != 0:
                raise _power_failure(status, sigma, resid)
            v_start = v
            if cols is not None:
                vc = np.zeros(ncols)
                vc[cols] = v
            else:
                vc = v
            if row_pairs is not None:
                uf = np.zeros(q * q)
                uf[row_pairs] = u
                vf = np.zeros(p * p)
                vf[col_pairs] = vc
                u, vc = uf, vf
            B, C = _sym_outer_factors(sigma, u, vc, p, q)
            out[i1, i2] = kron_norm(B, C, te)
    return out


def _power_failure(status, sigma, resid):
    from .core import NumericalError

    if status == 2:
        return NumericalError("masked train covariance is zero; cannot fit")
    return NumericalError(
        "power iteration did not converge during tuning",
        sigma=sigma, residual=resid,
    )


def _compressed_rearranged_cov(ds_or_vecs, p, q, k1, k2, centered):
    """Compressed rearranged covariance R[(l2,m2),(l1,m1)] at band supports.

    Avoids forming the dense pq x pq covariance; cost O(#row_pairs * n * p^2).
    """
    if hasattr(ds_or_vecs, "data"):
        data = ds_or_vecs.data
    else:
        data = ds_or_vecs
    n = data.shape[0]
    if centered:
        data = data - data.mean(axis=0)
    row_pairs = banded_pairs(q, min(k2, q - 1))
    col_pairs = banded_pairs(p, min(k1, p - 1))
    l1 = col_pairs % p
    m1 = col_pairs // p
    R = np.empty((row_pairs.size, col_pairs.size))
    for i, a in enumerate(row_pairs):
        l2 = int(a % q)
        m2 = int(a // q)
        block = data[:, :, l2].T @ data[:, :, m2] / n
        R[i] = block[l1, m1]
    return R, row_pairs, col_pairs


def select(ds, cfg, threads=1):
    """Grid search by averaged resampling scores; deterministic given seed."""
    p, q = ds.p, ds.q
    n = ds.n
    grid1, grid2 = _resolve_grids(cfg, p, q)
    taus = _resolve_taus(cfg, ds)
    mode = estimator_mode(cfg.estimator)
    n1 = cfg.n1 if cfg.n1 is not None else n // 3
    if not 1 <= n1 < n:
        raise ParameterError(f"training size n1={n1} invalid for n={n}")
    if n - n1 < 2:
        raise ParameterError("test split needs at least 2 samples")

    rng = Rng(cfg.seed)
    splits = [_split_indices(n, n1, rng.child(v).generator())
              for v in range(cfg.splits)]
    kron_norm, dense_norm = _score_kernels(cfg.score_norm)

    n2g = max(len(grid2), 1)
    ntau = max(len(taus), 1)
    compressed = (q * q) * (p * p) > MATERIALIZE_LIMIT

    def one_split(idx_pair):
        tr_idx, te_idx = idx_pair
        train = ds.subset(tr_idx)
        te = _test_cov(ds.subset(te_idx))
        acc = np.zeros((len(grid1), n2g, ntau))
        if is_baseline(cfg.estimator):
            cov_tr = _train_cov(train, cfg.estimator, None, cfg.center_train)
            for i1, k in enumerate(grid1):
                fit = baseline_regularize(cov_tr, k, mode)
                acc[i1, 0, 0] = dense_norm(fit.values, te)
            return acc
        w1_list = [np.ascontiguousarray(weight_vector(p, k, mode)) for k in grid1]
        w2_list = [np.ascontiguousarray(weight_vector(q, k, mode)) for k in grid2]
        for it in range(ntau):
            tau = taus[it] if taus else None
            if compressed:
                if is_robust(cfg.estimator):
                    base = truncate_dataset(train, tau)
                    centered = False
                else:
                    base = train
                    centered = cfg.center_train
                R, rp, cp = _compressed_rearranged_cov(
                    base, p, q, max(grid1), max(grid2), centered
                )
                sub1 = [np.ascontiguousarray(w[cp]) for w in w1_list]
                sub2 = [np.ascontiguousarray(w[rp]) for w in w2_list]
                acc[:, :, it] = _score_grid_for_rearranged(
                    R, sub1, sub2, te, p, q, kron_norm, row_pairs=rp, col_pairs=cp
                )
            else:
                cov_tr = _train_cov(train, cfg.estimator, tau, cfg.center_train)
                R = xi(cov_tr, p, q)
                acc[:, :, it] = _score_grid_for_rearranged(
                    R, w1_list, w2_list, te, p, q, kron_norm
                )
        return acc

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(one_split, splits))
    else:
        partials = [one_split(s) for s in splits]

    scores = np.zeros((len(grid1), n2g, ntau))
    for part in partials:  # fixed split order, deterministic accumulation
        scores += part
    scores /= cfg.splits

    k1_hat, k2_hat, tau_hat = _argmin_with_ties(scores, grid1, grid2, taus)
    return TuningResult(
        estimator=cfg.estimator,
        k1_hat=k1_hat,
        k2_hat=k2_hat,
        tau_hat=tau_hat,
        grid1=grid1,
        grid2=grid2,
        tau_pool=taus,
        scores=scores,
        split_indices=tuple(
            (tuple(int(i) for i in tr), tuple(int(i) for i in te))
            for tr, te in splits
        ),
    )


def _argmin_with_ties(scores, grid1, grid2, taus):
    best = scores.min()
    cand = np.argwhere(scores <= best)
    g2 = grid2 or (None,)
    tp = taus or (None,)

    def key(idx):
        i1, i2, it = idx
        k1 = grid1[i1]
        k2 = g2[i2] if g2[i2] is not None else 0
        tau = tp[it] if tp[it] is not None else 0.0
        return (k1 + k2, k1, -tau)

    i1, i2, it = min(map(tuple, cand), key=key)
    return (
        int(grid1[i1]),
        None if not grid2 else int(grid2[i2]),
        None if not taus else float(taus[it]),
    )
