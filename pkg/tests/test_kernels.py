import numpy as np
import pytest

from stoffar import kernels
from stoffar.kernels import fallback


def make_csr(N=60, n=25, seed=0, density=0.3):
    rng = np.random.default_rng(seed)
    indptr = [0]
    indices = []
    data = []
    for _ in range(N):
        k = rng.binomial(n, density)
        idx = np.sort(rng.choice(n, size=k, replace=False))
        indices.extend(idx.tolist())
        data.extend(rng.standard_normal(k).tolist())
        indptr.append(len(indices))
    return (np.array(indptr, dtype=np.int64), np.array(indices, dtype=np.int32),
            np.array(data, dtype=np.float64))


def dense_of(indptr, indices, data, N, n):
    D = np.zeros((N, n))
    for i in range(N):
        D[i, indices[indptr[i]:indptr[i + 1]]] = data[indptr[i]:indptr[i + 1]]
    return D


@pytest.fixture(scope="module")
def csr():
    return make_csr()


def test_rows_dot_matches_dense(csr):
    indptr, indices, data = csr
    N, n = 60, 25
    D = dense_of(indptr, indices, data, N, n)
    rng = np.random.default_rng(1)
    x = rng.standard_normal(n)
    rows = np.array([0, 3, 3, 17, 59], dtype=np.int64)
    out = kernels.csr_rows_dot(indptr, indices, data, rows, x)
    np.testing.assert_allclose(out, D[rows] @ x, rtol=1e-13, atol=1e-14)


def test_weighted_sum_matches_dense(csr):
    indptr, indices, data = csr
    N, n = 60, 25
    D = dense_of(indptr, indices, data, N, n)
    rng = np.random.default_rng(2)
    rows = np.sort(rng.choice(N, 20, replace=False)).astype(np.int64)
    w = rng.standard_normal(20)
    out = kernels.csr_rows_weighted_sum(indptr, indices, data, rows, w, n)
    np.testing.assert_allclose(out, D[rows].T @ w, rtol=1e-13, atol=1e-14)


def test_sq_dot_matches_dense(csr):
    indptr, indices, data = csr
    N, n = 60, 25
    D = dense_of(indptr, indices, data, N, n)
    rng = np.random.default_rng(3)
    x = rng.standard_normal(n)
    rows = np.arange(N, dtype=np.int64)
    out = kernels.csr_rows_sq_dot(indptr, indices, data, rows, x)
    np.testing.assert_allclose(out, (D ** 2) @ x, rtol=1e-13, atol=1e-14)


def test_empty_rows_handled(csr):
    indptr, indices, data = csr
    rows = np.empty(0, dtype=np.int64)
    x = np.zeros(25)
    assert kernels.csr_rows_dot(indptr, indices, data, rows, x).shape == (0,)
    out = kernels.csr_rows_weighted_sum(indptr, indices, data, rows,
                                        np.empty(0), 25)
    np.testing.assert_array_equal(out, np.zeros(25))


@pytest.mark.skipif(kernels.BACKEND != "compiled",
                    reason="compiled core unavailable; nothing to compare")
def test_compiled_and_fallback_agree_bitwise(csr):
    indptr, indices, data = csr
    rng = np.random.default_rng(4)
    x = rng.standard_normal(25)
    rows = np.sort(rng.choice(60, 30, replace=True)).astype(np.int64)
    w = rng.standard_normal(30)
    a = kernels.csr_rows_dot(indptr, indices, data, rows, x)
    b = fallback.csr_rows_dot(indptr, indices, data, rows, x)
    assert np.array_equal(a, b)
    a = kernels.csr_rows_weighted_sum(indptr, indices, data, rows, w, 25)
    b = fallback.csr_rows_weighted_sum(indptr, indices, data, rows, w, 25)
    assert np.array_equal(a, b)
    a = kernels.csr_rows_sq_dot(indptr, indices, data, rows, x)
    b = fallback.csr_rows_sq_dot(indptr, indices, data, rows, x)
    assert np.array_equal(a, b)


def test_backend_env_override():
    import subprocess
    import sys
    out = subprocess.run(
        [sys.executable, "-c", "from stoffar import kernels; print(kernels.BACKEND)"],
        env={"STOFFAR_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True, text=True)
    assert out.stdout.strip() == "fallback"
