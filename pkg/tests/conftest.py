import numpy as np
import pytest

from stoffar import QuadraticProblem, data_io
from stoffar.objectives import FiniteSumProblem

DATA_DIR = __file__.rsplit("/", 1)[0] + "/data"


@pytest.fixture(scope="session")
def small_dataset():
    return data_io.synthetic_binary(N=300, n=40, nnz=8, seed=11, name="small")


@pytest.fixture(scope="session")
def a9a_like():
    return data_io.synthetic_binary(N=1000, n=123, nnz=14, seed=5, name="a9a_like")


@pytest.fixture
def sigmoid_ls_problem(small_dataset):
    return FiniteSumProblem(small_dataset, kind="sigmoid_ls")


@pytest.fixture
def nc_logistic_problem(small_dataset):
    return FiniteSumProblem(small_dataset, kind="nc_logistic", alpha=0.001)


def random_spd_quadratic(n, seed, spread=3.0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    Q = A @ A.T / n + 0.1 * np.eye(n)
    Q *= spread / max(1.0, np.linalg.eigvalsh(Q)[-1])
    b = rng.standard_normal(n)
    return QuadraticProblem(Q, b, name=f"spd{n}-{seed}")


def random_indefinite_quadratic(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    Q = (A + A.T) / 2
    b = rng.standard_normal(n)
    return QuadraticProblem(Q, b, name=f"indef{n}-{seed}")
