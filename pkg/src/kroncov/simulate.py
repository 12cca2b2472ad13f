"""Ground-truth covariance models and matrix-variate samplers.

Covariance models: MA(1) (tridiagonal, rho on the first off-diagonal) and
AR(1) (rho^|l-m|), both with unit diagonal.  Samplers draw matrix-normal and
matrix-t data whose vectorized covariance / scale matrix is
sigma2 (x) sigma1, using the fixed lower-Cholesky square root so that a seed
pins the output bit-for-bit.
"""

from dataclasses import dataclass

import numpy as np

from .core import (
    DenseSymMatrix,
    DimensionError,
    MatrixDataset,
    ParameterError,
    Rng,
    SeparableCovariance,
)

MA1 = "ma1"
AR1 = "ar1"

GAUSSIAN = "gaussian"
STUDENT_T = "student_t"

# How the matrix-t scale parameter relates to sigma2 (x) sigma1:
#   'scale'      -> sigma2 (x) sigma1 is the scale matrix, cov = df/(df-2) * it
#   'covariance' -> cov(vec X) equals sigma2 (x) sigma1 itself
T_MODE_SCALE = "scale"
T_MODE_COVARIANCE = "covariance"


@dataclass(frozen=True)
class CovModel:
    kind: str
    dim: int
    rho: float

    def __post_init__(self):
        if self.kind not in (MA1, AR1):
            raise ParameterError(f"unknown covariance model kind {self.kind!r}")
        if self.dim < 1:
            raise ParameterError("model dimension must be >= 1")
        if not abs(self.rho) < 1:
            raise ParameterError(f"|rho| must be < 1, got {self.rho}")


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    q: int
    model1: CovModel
    model2: CovModel
    tail: str = GAUSSIAN
    df: float = 3.0
    t_mode: str = T_MODE_SCALE
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.model1.dim != self.p or self.model2.dim != self.q:
            raise DimensionError(
                f"model dims ({self.model1.dim}, {self.model2.dim}) must equal (p, q) = "
                f"({self.p}, {self.q})"
            )
        if self.tail not in (GAUSSIAN, STUDENT_T):
            raise ParameterError(f"unknown tail {self.tail!r}")
        if self.tail == STUDENT_T and self.df < 3:
            raise ParameterError("student_t tail requires df >= 3")
        if self.t_mode not in (T_MODE_SCALE, T_MODE_COVARIANCE):
            raise ParameterError(f"unknown t_mode {self.t_mode!r}")


def build_cov(model):
    """Dense covariance of an MA(1) or AR(1) process with unit diagonal."""
    d = np.abs(np.subtract.outer(np.arange(model.dim), np.arange(model.dim)))
    out = np.asarray(model.rho, dtype=np.float64) ** d
    if model.kind == MA1:
        out = np.where(d <= 1, out, 0.0)
    return DenseSymMatrix(out)


def truth_covariance(cfg):
    """SeparableCovariance for the configured ground truth."""
    return SeparableCovariance(
        build_cov(cfg.model2), build_cov(cfg.model1), convention_tag="truth"
    )


def _cholesky(sym, what):
    try:
        return np.linalg.cholesky(np.asarray(sym, dtype=np.float64))
    except np.linalg.LinAlgError as exc:
        raise ParameterError(f"{what} is not positive definite") from exc


def sample_matrix_normal(n, sigma1, sigma2, rng):
    """n i.i.d. p x q samples with cov(vec X) = sigma2 (x) sigma1.

    Each sample is L1 Z L2' with L1 L1' = sigma1, L2 L2' = sigma2 and Z
    standard normal.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    L1 = _cholesky(sigma1, "sigma1")
    L2 = _cholesky(sigma2, "sigma2")
    gen = rng.generator() if isinstance(rng, Rng) else rng
    Z = gen.standard_normal((n, L1.shape[0], L2.shape[0]))
    data = np.einsum("ab,nbc,dc->nad", L1, Z, L2, optimize=True)
    return MatrixDataset(data)


def sample_matrix_t(n, sigma1, sigma2, df, rng, t_mode=T_MODE_SCALE):
    """n i.i.d. samples with vec(X) multivariate-t of the given df.

    With t_mode='scale' the matrix sigma2 (x) sigma1 is the t scale matrix
    (so cov = df/(df-2) times it); with 'covariance' the samples are rescaled
    so that cov(vec X) equals sigma2 (x) sigma1 exactly.
    """
    if df < 3:
        raise ParameterError("df must be >= 3")
    if t_mode not in (T_MODE_SCALE, T_MODE_COVARIANCE):
        raise ParameterError(f"unknown t_mode {t_mode!r}")
    gen = rng.generator() if isinstance(rng, Rng) else rng
    gauss = sample_matrix_normal(n, sigma1, sigma2, gen)
    w = gen.chisquare(df, size=n)
    num = df if t_mode == T_MODE_SCALE else df - 2.0
    scale = np.sqrt(num / w)
    return MatrixDataset(gauss.data * scale[:, None, None])


def simulate(cfg, rng=None):
    """Draw the dataset described by a SimConfig."""
    if rng is None:
        rng = Rng(cfg.seed)
    s1 = build_cov(cfg.model1)
    s2 = build_cov(cfg.model2)
    if cfg.tail == GAUSSIAN:
        return sample_matrix_normal(cfg.n, s1, s2, rng)
    return sample_matrix_t(cfg.n, s1, s2, cfg.df, rng, t_mode=cfg.t_mode)
