import numpy as np
import pytest

from kroncov import (
    DimensionError,
    ParameterError,
    band_weight,
    baseline_regularize,
    mask_separable,
    taper_weight,
    weight_matrix,
    weight_vector,
)
from kroncov.regularize import BAND, TAPER, banded_pairs

from conftest import rand_sym


def test_band_weight_examples():
    assert band_weight(1, 2, 3) == 1.0
    assert band_weight(1, 1, 3) == 0.0
    W = weight_matrix(4, 0, BAND)
    assert np.array_equal(W, np.eye(4))


def test_taper_weight_examples():
    assert taper_weight(4, 1, 4) == pytest.approx(0.5)  # |l-m| = 3, floor(k/2) = 2
    assert taper_weight(4, 1, 3) == 1.0  # |l-m| = 2 inside the flat part
    assert taper_weight(2, 1, 2) == 1.0  # T_2 equals B_1
    assert taper_weight(0, 1, 2) == 0.0
    assert taper_weight(1, 1, 2) == 0.0  # floor(1/2) = 0 degenerates to diagonal
    assert taper_weight(1, 2, 2) == 1.0


def test_taper_band_relations():
    for d in (3, 6, 10):
        for k in range(0, d):
            Wb = weight_matrix(d, k, BAND)
            Wt = weight_matrix(d, k, TAPER)
            # taper never exceeds the band indicator at equal k
            assert np.all(Wt <= Wb + 1e-15)
            assert np.all(Wt >= 0.0)
            # T_{2k} is exactly 1 on |l-m| <= k
            W2k = weight_matrix(d, min(2 * k, 2 * d), TAPER)
            assert np.all(W2k[Wb == 1.0] >= 1.0 - 1e-15)


def test_weight_symmetry():
    for k in (0, 1, 3):
        for l in range(5):
            for m in range(5):
                assert band_weight(k, l, m) == band_weight(k, m, l)
                assert taper_weight(k, l, m) == taper_weight(k, m, l)


def test_weight_vector_order():
    W = weight_matrix(3, 1, TAPER)
    w = weight_vector(3, 1, TAPER)
    for l in range(3):
        for m in range(3):
            assert w[m * 3 + l] == W[l, m]


def _mask_oracle(cov, p, q, k1, k2, mode):
    W = np.kron(weight_matrix(q, k2, mode), weight_matrix(p, k1, mode))
    return cov * W


@pytest.mark.parametrize("mode", [BAND, TAPER])
@pytest.mark.parametrize("pq", [(2, 2), (3, 4), (4, 3), (2, 6)])
def test_mask_separable_matches_dense_oracle(gen, mode, pq):
    p, q = pq
    cov = rand_sym(gen, p * q)
    kmax1 = p - 1 if mode == BAND else 2 * p
    kmax2 = q - 1 if mode == BAND else 2 * q
    for k1 in range(0, kmax1 + 1):
        for k2 in range(0, kmax2 + 1):
            m = mask_separable(cov, p, q, k1, k2, mode)
            assert np.max(np.abs(m.to_dense() - _mask_oracle(cov, p, q, k1, k2, mode))) <= 1e-14


def test_mask_full_bandwidth_is_identity(gen):
    p, q = 3, 4
    cov = rand_sym(gen, 12)
    m = mask_separable(cov, p, q, p - 1, q - 1, BAND)
    sym = 0.5 * (cov + cov.T)
    assert np.array_equal(m.to_dense(), sym)


def test_mask_zero_bandwidth_keeps_double_diagonal(gen):
    p, q = 3, 4
    cov = rand_sym(gen, 12)
    m = mask_separable(cov, p, q, 0, 0, BAND)
    dense = m.to_dense()
    for l1 in range(p):
        for m1 in range(p):
            for l2 in range(q):
                for m2 in range(q):
                    v = dense[l2 * p + l1, m2 * p + m1]
                    if l1 == m1 and l2 == m2:
                        assert v == 0.5 * (cov + cov.T)[l2 * p + l1, m2 * p + m1]
                    else:
                        assert v == 0.0


def test_taper_all_ones_2x2_unchanged():
    cov = np.ones((4, 4))
    m = mask_separable(cov, 2, 2, 2, 2, TAPER)  # floor(k/2) = 1 covers |l-m| <= 1
    assert np.array_equal(m.to_dense(), cov)


def test_masked_invariants(gen):
    p, q = 4, 5
    cov = rand_sym(gen, 20)
    for mode, k1, k2 in ((BAND, 1, 2), (TAPER, 3, 4)):
        m = mask_separable(cov, p, q, k1, k2, mode)
        dense = m.to_dense()
        # symmetric under the simultaneous pair swap = plain matrix symmetry
        assert np.array_equal(dense, dense.T)
        keff1, keff2 = min(k1, p - 1), min(k2, q - 1)
        bound = min((2 * keff1 + 1) * p, p * p) * min((2 * keff2 + 1) * q, q * q)
        assert m.nnz <= bound
        # re-masking the materialized matrix changes nothing (band support)
        again = mask_separable(dense, p, q, keff1, keff2, BAND)
        assert np.max(np.abs(again.to_dense() - dense)) == 0.0
        # frobenius through compressed storage
        assert m.frobenius() == pytest.approx(np.linalg.norm(dense), rel=1e-14)


def test_banded_pairs_count():
    for d in (1, 3, 6):
        for k in range(0, d):
            expect = d * (2 * k + 1) - k * (k + 1)
            assert banded_pairs(d, k).size == expect


def test_mask_validation(gen):
    cov = rand_sym(gen, 6)
    with pytest.raises(DimensionError):
        mask_separable(cov, 2, 4, 1, 1, BAND)
    with pytest.raises(ParameterError):
        mask_separable(cov, 2, 3, 2, 1, BAND)  # band k1 > p-1
    with pytest.raises(ParameterError):
        mask_separable(cov, 2, 3, 1, 7, TAPER)  # taper k2 > 2q
    with pytest.raises(ParameterError):
        mask_separable(cov, 2, 3, 1, 1, "smooth")


def test_baseline_regularize(gen):
    d = 6
    cov = rand_sym(gen, d)
    sym = 0.5 * (cov + cov.T)
    assert np.array_equal(baseline_regularize(cov, d - 1, BAND).values, sym)
    assert np.array_equal(baseline_regularize(cov, 0, BAND).values, np.diag(np.diag(sym)))
    ones = np.ones((3, 3))
    t = baseline_regularize(ones, 2, TAPER).values
    assert t[0, 1] == 1.0 and t[1, 0] == 1.0
    assert t[0, 2] == 0.0
    with pytest.raises(ParameterError):
        baseline_regularize(cov, d, BAND)
