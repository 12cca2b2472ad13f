"""Fundamental types, vectorization, matrix norms and deterministic RNG.

Index conventions
-----------------
Matrices are stored 0-based; the accompanying docs use 1-based pairs
(l1, l2) for the row/column position inside one p x q sample.  The single
conversion rule is: entry (l1, l2) of a sample (1-based) sits at flat vec
position (l2 - 1) * p + (l1 - 1), i.e. columns are stacked.  A pq x pq
covariance entry is addressed by the pair ((l1, m1), (l2, m2)) meaning row
(l2-1)p + l1 and column (m2-1)p + m1.

``SeparableCovariance`` keeps the two small factors (sigma2: q x q over
columns, sigma1: p x p over rows) and never materializes the pq x pq product
unless asked.
"""

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels


class KroncovError(Exception):
    """Base class for package errors."""


class DimensionError(KroncovError):
    """Shapes or sizes are inconsistent."""


class ParameterError(KroncovError):
    """A parameter is outside its valid range."""


class NumericalError(KroncovError):
    """An iterative routine failed; carries diagnostics."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DataFormatError(KroncovError):
    """A dataset file or config is malformed."""


def _as_float_matrix(a, name="matrix"):
    m = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterError(f"{name} contains non-finite entries")
    return m


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

class MatrixDataset:
    """n samples of p x q real matrices; immutable after construction."""

    def __init__(self, data):
        arr = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        if arr.ndim != 3:
            raise DimensionError(f"dataset must be (n, p, q), got shape {arr.shape}")
        n, p, q = arr.shape
        if n < 1 or p < 1 or q < 1:
            raise DimensionError(f"dataset dims must be >= 1, got {(n, p, q)}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("dataset contains non-finite entries")
        arr.setflags(write=False)
        self.data = arr
        self.n = n
        self.p = p
        self.q = q

    def vecs(self):
        """(n, pq) array whose rows are the column-stacked samples."""
        return self.data.transpose(0, 2, 1).reshape(self.n, self.p * self.q)

    def __len__(self):
        return self.n

    def subset(self, indices):
        return MatrixDataset(self.data[np.asarray(indices, dtype=np.intp)])


class DenseSymMatrix:
    """Explicit symmetric d x d matrix; symmetrized via (A + A.T)/2 on build."""

    def __init__(self, values):
        m = _as_float_matrix(values)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"matrix must be square, got shape {m.shape}")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        self.values = m
        self.dim = m.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _sym_values(m):
    """Accept DenseSymMatrix or array-like; return a symmetric float array."""
    if isinstance(m, DenseSymMatrix):
        return m.values
    return DenseSymMatrix(m).values


@dataclass(frozen=True)
class SeparableCovariance:
    """Ordered factor pair representing sigma2 (x) sigma1 without materializing it.

    Entry ((l1, m1), (l2, m2)) of the represented pq x pq matrix equals
    sigma2[l2, m2] * sigma1[l1, m1].  The product is invariant under
    (c * sigma2, sigma1 / c); ``convention_tag`` records how that free scale
    was pinned.
    """

    sigma2: DenseSymMatrix
    sigma1: DenseSymMatrix
    convention_tag: str = "raw"

    @property
    def p(self):
        return self.sigma1.dim

    @property
    def q(self):
        return self.sigma2.dim

    @property
    def dim(self):
        return self.p * self.q

    def dense(self, max_dim=4096):
        if self.dim > max_dim:
            raise DimensionError(
                f"refusing to materialize {self.dim} x {self.dim} product "
                f"(limit {max_dim}); raise max_dim explicitly if intended"
            )
        return np.kron(self.sigma2.values, self.sigma1.values)

    def rescaled(self, c):
        """Equivalent pair (c * sigma2, sigma1 / c)."""
        if c == 0:
            raise ParameterError("rescaling constant must be nonzero")
        return SeparableCovariance(
            DenseSymMatrix(c * self.sigma2.values),
            DenseSymMatrix(self.sigma1.values / c),
            convention_tag="rescaled",
        )

    def matvec(self, x):
        """Product-matrix times vector in O(pq(p+q)) without materializing."""
        X = unvec(np.asarray(x, dtype=np.float64), self.p, self.q)
        return vec(self.sigma1.values @ X @ self.sigma2.values.T)


@dataclass(frozen=True)
class Rng:
    """Deterministic random stream with a stable splitting rule.

    Streams are PCG64 generators keyed by (seed, path): ``child(i)`` extends
    the path, which maps to numpy's SeedSequence spawn_key.  Identical seed
    and path give a bit-identical stream regardless of how many workers run
    or in which order children are created.
    """

    seed: int
    path: tuple = field(default_factory=tuple)

    def generator(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *indices):
        return Rng(self.seed, self.path + tuple(int(i) for i in indices))


# ---------------------------------------------------------------------------
# vectorization
# ---------------------------------------------------------------------------

def vec(X):
    """Stack the columns of X into one vector."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"vec expects a matrix, got shape {X.shape}")
    return X.T.reshape(-1).copy()


def unvec(v, p, q):
    """Inverse of vec: reshape a length-pq vector into a p x q matrix."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape[0] != p * q:
        raise DimensionError(f"expected length {p * q} vector, got {v.shape[0]}")
    return v.reshape(q, p).T.copy()


# ---------------------------------------------------------------------------
# matrix norms
# ---------------------------------------------------------------------------

def norm_frobenius(A):
    return float(np.linalg.norm(np.asarray(A, dtype=np.float64)))


def norm_l1(A):
    """Max absolute column sum."""
    A = np.asarray(A, dtype=np.float64)
    return float(np.abs(A).sum(axis=0).max())


def norm_linf(A):
    """Max absolute row sum."""
    A = np.asarray(A, dtype=np.float64)
    return float(np.abs(A).sum(axis=1).max())


def norm_max(A):
    return float(np.max(np.abs(np.asarray(A, dtype=np.float64))))


def _power_norm_symmetric(matvec, d, tol, max_iter):
    """Largest |eigenvalue| of a symmetric operator given by matvec."""
    v = np.ones(d) / np.sqrt(d)
    sigma_prev = np.inf
    stable = 0
    perturbed = False
    sigma = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        sigma = float(np.linalg.norm(w))
        if sigma == 0.0:
            if perturbed:
                return 0.0
            # all-ones start can sit in the null space; fixed fallback
            v = np.ones(d) + 1e-3 * np.cos(np.arange(d))
            v /= np.linalg.norm(v)
            perturbed = True
            continue
        v = w / sigma
        gap = abs(sigma - sigma_prev)
        if gap <= tol * sigma:
            stable += 1
            if stable >= 3:
                return sigma
        else:
            stable = 0
        sigma_prev = sigma
    raise NumericalError(
        "operator-norm power iteration did not converge",
        last_gap=abs(sigma - sigma_prev),
        last_sigma=sigma,
        iterations=max_iter,
    )


def norm_operator(A, tol=1e-8, max_iter=10_000, dense_cutoff=512):
    """Spectral norm (largest |eigenvalue|) of a symmetric matrix.

    Exact dense eigensolve up to ``dense_cutoff``; deterministic power
    iteration above that.  Non-convergence raises NumericalError with the
    last iterate gap.
    """
    A = _as_float_matrix(A)
    d = A.shape[0]
    if d != A.shape[1]:
        raise DimensionError("norm_operator expects a square symmetric matrix")
    if d <= dense_cutoff:
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (A + A.T)))))
    return _power_norm_symmetric(lambda x: A @ x, d, tol, max_iter)


def norm_diff_separable_vs_dense(S, D, which):
    """Norm of S.dense() - D without materializing the Kronecker product.

    ``which`` is one of 'frob', 'l1', 'op', 'max'.  D must be symmetric of
    dimension p*q; cost is O((pq)^2) streaming for frob/l1/max and a
    matrix-free power iteration for 'op'.
    """
    D = _sym_values(D)
    p, q = S.p, S.q
    if D.shape[0] != p * q:
        raise DimensionError(
            f"dense matrix dim {D.shape[0]} does not match separable dim {p * q}"
        )
    B = S.sigma2.values
    C = S.sigma1.values
    if which == "frob":
        # |K - D|_F^2 = |B|^2 |C|^2 - 2 <K, D> + |D|^2 with a streamed <K, D>
        D4 = D.reshape(q, p, q, p)
        cross = float(np.einsum("ac,bd,abcd->", B, C, D4))
        val = (
            float(np.sum(B * B)) * float(np.sum(C * C))
            - 2.0 * cross
            + float(np.sum(D * D))
        )
        return float(np.sqrt(max(val, 0.0)))
    if which == "l1":
        return float(kernels.kron_diff_l1(B, C, D))
    if which == "max":
        return float(kernels.kron_diff_max(B, C, D))
    if which == "op":
        d = p * q
        if d <= 512:
            return norm_operator(np.kron(B, C) - D)

        def mv(x):
            return S.matvec(x) - D @ x

        return _power_norm_symmetric(mv, d, 1e-8, 10_000)
    raise ParameterError(f"unknown norm kind {which!r}")


def norm_diff_separable(Sa, Sb, which):
    """Norm of Sa.dense() - Sb.dense(), both kept in factored form."""
    if (Sa.p, Sa.q) != (Sb.p, Sb.q):
        raise DimensionError("separable operands have different shapes")
    B, C = Sa.sigma2.values, Sa.sigma1.values
    S2, S1 = Sb.sigma2.values, Sb.sigma1.values
    if which == "frob":
        val = (
            float(np.sum(B * B)) * float(np.sum(C * C))
            + float(np.sum(S2 * S2)) * float(np.sum(S1 * S1))
            - 2.0 * float(np.sum(B * S2)) * float(np.sum(C * S1))
        )
        return float(np.sqrt(max(val, 0.0)))
    if which == "l1":
        return float(kernels.kron_kron_diff_l1(B, C, S2, S1))
    if which == "max":
        return float(kernels.kron_kron_diff_max(B, C, S2, S1))
    if which == "op":
        d = Sa.p * Sa.q
        if d <= 512:
            return norm_operator(np.kron(B, C) - np.kron(S2, S1))

        def mv(x):
            return Sa.matvec(x) - Sb.matvec(x)

        return _power_norm_symmetric(mv, d, 1e-8, 10_000)
    raise ParameterError(f"unknown norm kind {which!r}")
