"""Pure-numpy implementations of the hot numerical kernels.

Same call signatures as the compiled module ``kroncov._kernels``; one of the
two is picked at import time by :mod:`kroncov.backend`.  Everything here takes
C-contiguous float64 arrays.

The kernels cover the two operations that dominate bandwidth-selection and
benchmark runtime:

* leading singular triple of a Hadamard-weighted matrix ``R * outer(wrow, wcol)``
  by alternating power iteration (the weighted matrix is never materialized);
* max-absolute-column-sum / Frobenius / max norms of differences between a
  Kronecker product ``B (x) C`` and a dense matrix or a second Kronecker
  product, without materializing the products.

Symmetry contract: the norm kernels assume B, C, D (and S2, S1) are symmetric,
which lets them run over rows instead of strided columns.  All covariance
objects in this package are symmetrized on construction, so callers satisfy
that for free.
"""

import numpy as np

BACKEND = "python"

# Status codes shared with the compiled kernels.
OK = 0
NO_CONVERGENCE = 1
ZERO_INPUT = 2


def _perturbed(v):
    # Fixed, seed-free perturbation used for the single stagnation restart.
    w = v + 1e-3 * np.cos(np.arange(v.shape[0], dtype=np.float64))
    nrm = np.linalg.norm(w)
    if nrm == 0.0:
        w = np.cos(np.arange(v.shape[0], dtype=np.float64))
        nrm = np.linalg.norm(w)
    return w / nrm


def power_loop(matvec, rmatvec, v0, tol, max_iter):
    """Alternating power iteration returning (sigma, u, v, iters, resid, status).

    At exit the triple satisfies ``rmatvec(u) == sigma * v`` exactly by
    construction and ``|matvec(v) - sigma * u| <= resid`` with
    ``resid <= tol * sigma`` when status == OK.
    """
    nrm = np.linalg.norm(v0)
    if nrm == 0.0:
        return 0.0, None, None, 0, np.inf, ZERO_INPUT
    v = v0 / nrm
    total = 0
    for attempt in range(2):
        u_raw = matvec(v)
        resid = np.inf
        u = u_raw
        sv = 0.0
        for _ in range(max_iter):
            total += 1
            su = np.linalg.norm(u_raw)
            if su == 0.0:
                break
            u = u_raw / su
            v_raw = rmatvec(u)
            sv = np.linalg.norm(v_raw)
            if sv == 0.0:
                break
            v = v_raw / sv
            u_raw = matvec(v)
            resid = np.linalg.norm(u_raw - sv * u)
            if resid <= tol * sv:
                return sv, u, v, total, resid, OK
        if attempt == 0:
            # one fixed perturbed restart on stagnation / null-space starts
            v = _perturbed(v if sv > 0.0 else v0)
    if sv == 0.0 or not np.isfinite(sv):
        return 0.0, None, None, total, resid, ZERO_INPUT
    return sv, u, v, total, resid, NO_CONVERGENCE


def rank1_power(R, v0, tol, max_iter):
    """Leading singular triple of a dense matrix R (nr x nc)."""
    return power_loop(lambda v: R @ v, lambda u: R.T @ u, v0, tol, max_iter)


def rank1_power_weighted(R, wrow, wcol, v0, tol, max_iter):
    """Leading singular triple of R * outer(wrow, wcol), never materialized."""
    return power_loop(
        lambda v: wrow * (R @ (wcol * v)),
        lambda u: wcol * (R.T @ (wrow * u)),
        v0,
        tol,
        max_iter,
    )


def kron_diff_l1(B, C, D):
    """Max absolute column sum of B (x) C - D for symmetric B, C, D."""
    q = B.shape[0]
    p = C.shape[0]
    best = 0.0
    for m2 in range(q):
        # all columns (m1, m2) for this m2-block at once: (pq, p)
        block = np.kron(B[:, m2 : m2 + 1], C)
        block -= D[:, m2 * p : (m2 + 1) * p]
        np.abs(block, out=block)
        best = max(best, block.sum(axis=0).max())
    return float(best)


def kron_diff_fro(B, C, D):
    """Frobenius norm of B (x) C - D."""
    q = B.shape[0]
    p = C.shape[0]
    acc = 0.0
    for m2 in range(q):
        block = np.kron(B[:, m2 : m2 + 1], C)
        block -= D[:, m2 * p : (m2 + 1) * p]
        acc += float(np.sum(block * block))
    return float(np.sqrt(acc))


def kron_diff_max(B, C, D):
    """Max absolute entry of B (x) C - D."""
    q = B.shape[0]
    p = C.shape[0]
    best = 0.0
    for m2 in range(q):
        block = np.kron(B[:, m2 : m2 + 1], C)
        block -= D[:, m2 * p : (m2 + 1) * p]
        best = max(best, float(np.max(np.abs(block))))
    return float(best)


def kron_kron_diff_l1(B, C, S2, S1):
    """Max absolute column sum of B (x) C - S2 (x) S1 (all symmetric)."""
    q = B.shape[0]
    best = 0.0
    for m2 in range(q):
        # per (l2, l1, m1) tensor of |B[l2,m2] C[l1,m1] - S2[l2,m2] S1[l1,m1]|
        t = np.multiply.outer(B[:, m2], C) - np.multiply.outer(S2[:, m2], S1)
        np.abs(t, out=t)
        best = max(best, float(t.sum(axis=(0, 1)).max()))
    return best


def kron_kron_diff_max(B, C, S2, S1):
    """Max absolute entry of B (x) C - S2 (x) S1."""
    q = B.shape[0]
    best = 0.0
    for m2 in range(q):
        t = np.multiply.outer(B[:, m2], C) - np.multiply.outer(S2[:, m2], S1)
        best = max(best, float(np.max(np.abs(t))))
    return best


def dense_diff_l1(A, D):
    """Max absolute column sum of A - D."""
    return float(np.abs(A - D).sum(axis=0).max())


def kron_diff_l11(B, C, D):
    """Entrywise absolute sum of B (x) C - D."""
    q = B.shape[0]
    p = C.shape[0]
    acc = 0.0
    for m2 in range(q):
        block = np.kron(B[:, m2 : m2 + 1], C)
        block -= D[:, m2 * p : (m2 + 1) * p]
        np.abs(block, out=block)
        acc += float(block.sum())
    return acc


def dense_diff_l11(A, D):
    """Entrywise absolute sum of A - D."""
    return float(np.abs(A - D).sum())
