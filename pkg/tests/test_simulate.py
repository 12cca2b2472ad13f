import numpy as np
import pytest

from kroncov import (
    CovModel,
    ParameterError,
    Rng,
    SimConfig,
    build_cov,
    sample_matrix_normal,
    sample_matrix_t,
    simulate,
    truth_covariance,
)


def test_build_cov_ma1():
    m = build_cov(CovModel("ma1", 3, 0.5)).values
    assert np.allclose(m, [[1, 0.5, 0], [0.5, 1, 0.5], [0, 0.5, 1]])


def test_build_cov_ar1():
    m = build_cov(CovModel("ar1", 3, 0.5)).values
    assert np.allclose(m, [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])


def test_build_cov_zero_rho_identity():
    for kind in ("ma1", "ar1"):
        assert np.array_equal(build_cov(CovModel(kind, 4, 0.0)).values, np.eye(4))


def test_build_cov_invalid_rho():
    with pytest.raises(ParameterError):
        CovModel("ar1", 3, 1.0)
    with pytest.raises(ParameterError):
        CovModel("ma1", 3, -1.5)
    with pytest.raises(ParameterError):
        CovModel("garch", 3, 0.5)


@pytest.mark.parametrize("d", [2, 16, 128])
def test_build_cov_positive_definite(d):
    # AR(1) is PD for any |rho| < 1; the tridiagonal MA(1) matrix needs
    # |rho| <= 1 / (2 cos(pi/(d+1))), so 0.5 is the safe simulation value
    for rho in (0.3, 0.8, -0.8):
        m = build_cov(CovModel("ar1", d, rho)).values
        assert np.array_equal(m, m.T)
        np.linalg.cholesky(m)
    for rho in (0.3, 0.5, -0.5):
        m = build_cov(CovModel("ma1", d, rho)).values
        assert np.array_equal(m, m.T)
        np.linalg.cholesky(m)


def test_matrix_normal_identity_variance():
    ds = sample_matrix_normal(10_000, np.eye(2), np.eye(2), Rng(1))
    var = ds.vecs().var(axis=0)
    assert np.all(np.abs(var - 1.0) < 0.05)


def test_matrix_normal_scalar_scale():
    ds = sample_matrix_normal(100_000, 4.0 * np.eye(1), np.eye(1), Rng(2))
    assert abs(ds.data.var() - 4.0) < 0.1


def test_matrix_normal_kronecker_covariance():
    s1 = build_cov(CovModel("ar1", 2, 0.5)).values
    s2 = build_cov(CovModel("ar1", 2, 0.5)).values
    ds = sample_matrix_normal(100_000, s1, s2, Rng(3))
    emp = np.cov(ds.vecs().T, bias=True)
    assert np.max(np.abs(emp - np.kron(s2, s1))) < 0.02


def test_vec_ordering_guard():
    # cov(vec X) must be sigma2 (x) sigma1, not the reversed product
    s1 = build_cov(CovModel("ar1", 2, 0.8)).values  # p = 2
    s2 = build_cov(CovModel("ar1", 3, 0.2)).values  # q = 3
    ds = sample_matrix_normal(100_000, s1, s2, Rng(4))
    emp = np.cov(ds.vecs().T, bias=True)
    right = np.kron(s2, s1)
    wrong = np.kron(s1, s2)
    assert np.max(np.abs(emp - right)) < 0.05
    assert np.max(np.abs(right - wrong)) > 0.3  # orderings genuinely differ
    assert np.max(np.abs(emp - wrong)) > 0.2


def test_matrix_normal_deterministic():
    a = sample_matrix_normal(5, np.eye(2), np.eye(3), Rng(9))
    b = sample_matrix_normal(5, np.eye(2), np.eye(3), Rng(9))
    assert np.array_equal(a.data, b.data)


def test_matrix_normal_not_pd():
    with pytest.raises(ParameterError, match="positive definite"):
        sample_matrix_normal(3, np.zeros((2, 2)), np.eye(2), Rng(0))


def test_matrix_t_large_df_close_to_gaussian():
    g = sample_matrix_normal(20_000, np.eye(2), np.eye(2), Rng(5))
    t = sample_matrix_t(20_000, np.eye(2), np.eye(2), 1e6, Rng(5))
    assert abs(g.data.var() - t.data.var()) < 0.05


def test_matrix_t_scale_vs_covariance_mode():
    t_scale = sample_matrix_t(100_000, np.eye(2), np.eye(2), 3.0, Rng(6))
    emp = np.cov(t_scale.vecs().T, bias=True)
    # scale reading: covariance = df/(df-2) * identity = 3I; heavy tails make
    # the tolerance loose
    assert abs(np.diag(emp).mean() - 3.0) < 0.6
    t_cov = sample_matrix_t(100_000, np.eye(2), np.eye(2), 3.0, Rng(6), t_mode="covariance")
    emp2 = np.cov(t_cov.vecs().T, bias=True)
    assert abs(np.diag(emp2).mean() - 1.0) < 0.2


def test_matrix_t_heavy_tails():
    t = sample_matrix_t(100_000, np.eye(1), np.eye(1), 3.0, Rng(7)).data.ravel()
    g = sample_matrix_normal(100_000, np.eye(1), np.eye(1), Rng(7)).data.ravel()
    kurt_t = np.mean(t**4) / np.mean(t**2) ** 2
    kurt_g = np.mean(g**4) / np.mean(g**2) ** 2
    assert kurt_g < 3.5
    assert kurt_t > 10


def test_matrix_t_validation():
    with pytest.raises(ParameterError):
        sample_matrix_t(3, np.eye(2), np.eye(2), 2.0, Rng(0))
    with pytest.raises(ParameterError):
        sample_matrix_t(3, np.eye(2), np.eye(2), 3.0, Rng(0), t_mode="weird")


def test_sim_config_validation():
    m1 = CovModel("ma1", 3, 0.5)
    m2 = CovModel("ma1", 4, 0.5)
    cfg = SimConfig(n=5, p=3, q=4, model1=m1, model2=m2)
    ds = simulate(cfg)
    assert (ds.n, ds.p, ds.q) == (5, 3, 4)
    with pytest.raises(Exception):
        SimConfig(n=5, p=4, q=4, model1=m1, model2=m2)
    with pytest.raises(ParameterError):
        SimConfig(n=5, p=3, q=4, model1=m1, model2=m2, tail="student_t", df=2.5)


def test_truth_covariance_shape():
    cfg = SimConfig(
        n=5, p=3, q=4, model1=CovModel("ma1", 3, 0.5), model2=CovModel("ar1", 4, 0.2)
    )
    t = truth_covariance(cfg)
    assert t.p == 3 and t.q == 4
    assert np.allclose(t.dense()[:3, :3], build_cov(cfg.model1).values)
