import numpy as np
import pytest

from glbm import (
    InvalidParameterError,
    RngStream,
    haar_unitary,
    params_from_rho_zeta,
    sample_elliptic_increment,
    sample_ginibre,
    sample_gue,
)


def ts(A):
    return np.trace(A) / A.shape[0]


def test_gue_scalar_case_is_real_normal():
    s = RngStream(1, 0)
    draws = np.array([sample_gue(1, 1.0, s)[0, 0] for _ in range(2000)])
    assert np.all(draws.imag == 0.0)
    # standard normal: mean 0 +- 4/sqrt(n), second moment 1 +- 4*se
    assert abs(draws.real.mean()) < 4 / np.sqrt(2000)
    m2 = (draws.real ** 2).mean()
    se = (draws.real ** 2).std(ddof=1) / np.sqrt(2000)
    assert abs(m2 - 1.0) < 4 * se


def test_zero_time_gives_zero_matrix():
    s = RngStream(2, 0)
    assert not sample_gue(5, 0.0, s).any()
    assert not sample_ginibre(5, 0.0, s).any()
    p = params_from_rho_zeta(2.0, 1.0j)
    assert not sample_elliptic_increment(p, 0.0, 5, s).any()


def test_gue_exact_hermiticity():
    s = RngStream(3, 0)
    X = sample_gue(48, 0.7, s)
    assert np.abs(X - X.conj().T).max() == 0.0


def test_gue_second_moment():
    s = RngStream(4, 0)
    vals = []
    for _ in range(1000):
        X = sample_gue(32, 1.0, s)
        vals.append(ts(X @ X).real)
    vals = np.array(vals)
    se = vals.std(ddof=1) / np.sqrt(1000)
    assert abs(vals.mean() - 1.0) < 4 * se


def test_ginibre_moments():
    s = RngStream(5, 0)
    gram, sq = [], []
    for _ in range(1000):
        G = sample_ginibre(32, 1.0, s)
        gram.append(ts(G @ G.conj().T).real)
        sq.append(ts(G @ G))
    gram, sq = np.array(gram), np.array(sq)
    assert abs(gram.mean() - 1.0) < 4 * gram.std(ddof=1) / np.sqrt(1000)
    se_sq = np.sqrt(sq.real.var(ddof=1) + sq.imag.var(ddof=1)) / np.sqrt(1000)
    assert abs(sq.mean()) < 4 * se_sq


def test_unitary_mode_increment_is_exactly_skew_hermitian():
    p = params_from_rho_zeta(1.0, -1.0)
    s = RngStream(6, 0)
    dW = sample_elliptic_increment(p, 0.3, 24, s)
    assert np.abs(dW + dW.conj().T).max() == 0.0


def test_elliptic_increment_moments():
    p = params_from_rho_zeta(2.0, 0.6 + 1.0j)
    s = RngStream(7, 0)
    gram, sq = [], []
    for _ in range(1000):
        dW = sample_elliptic_increment(p, 0.1, 32, s)
        gram.append(ts(dW.conj().T @ dW).real)
        sq.append(ts(dW @ dW))
    gram, sq = np.array(gram), np.array(sq)
    se = gram.std(ddof=1) / np.sqrt(1000)
    assert abs(gram.mean() - 0.2) < 4 * se
    se_sq = np.sqrt(sq.real.var(ddof=1) + sq.imag.var(ddof=1)) / np.sqrt(1000)
    assert abs(sq.mean() - (0.06 + 0.1j)) < 4 * se_sq


def test_unitary_conjugation_invariance_two_sample():
    p = params_from_rho_zeta(2.0, 0.6 + 1.0j)
    U = haar_unitary(24, RngStream(8, 99))
    sa, sb = RngStream(8, 0), RngStream(8, 1)
    stats_a, stats_b = [], []
    for _ in range(400):
        W = sample_elliptic_increment(p, 1.0, 24, sa)
        stats_a.append((ts(W.conj().T @ W).real, ts(W @ W), ts(W @ W @ W)))
        V = sample_elliptic_increment(p, 1.0, 24, sb)
        V = U @ V @ U.conj().T
        stats_b.append((ts(V.conj().T @ V).real, ts(V @ V), ts(V @ V @ V)))
    A, B = np.array(stats_a), np.array(stats_b)
    for k in range(3):
        da, db = A[:, k], B[:, k]
        se = np.sqrt((da.real.var(ddof=1) + da.imag.var(ddof=1)
                      + db.real.var(ddof=1) + db.imag.var(ddof=1)) / 400)
        assert abs(da.mean() - db.mean()) < 4 * se


def test_stream_reproducibility_and_independence():
    X1 = sample_gue(16, 1.0, RngStream(42, 7))
    X2 = sample_gue(16, 1.0, RngStream(42, 7))
    assert np.array_equal(X1, X2)
    X3 = sample_gue(16, 1.0, RngStream(42, 8))
    assert not np.array_equal(X1, X3)
    X4 = sample_gue(16, 1.0, RngStream(43, 7))
    assert not np.array_equal(X1, X4)
    assert np.array_equal(X3, sample_gue(16, 1.0, RngStream(42, 7).derive(8)))


def test_negative_time_rejected():
    s = RngStream(9, 0)
    p = params_from_rho_zeta(1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        sample_gue(4, -0.1, s)
    with pytest.raises(InvalidParameterError):
        sample_ginibre(4, -0.1, s)
    with pytest.raises(InvalidParameterError):
        sample_elliptic_increment(p, -0.1, 4, s)


def test_haar_unitary_is_unitary():
    U = haar_unitary(32, RngStream(10, 0))
    assert np.linalg.norm(U.conj().T @ U - np.eye(32), 2) < 1e-12
