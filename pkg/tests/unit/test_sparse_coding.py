"""
Testing Orthogonal Matching Pursuit in sparse_coding.py
"""

import numpy as np
import pytest

from hodge_tdl.dictionary import normalize_columns
from hodge_tdl.metrics import nmse
from hodge_tdl.sparse_coding import omp, sparse_code


@pytest.fixture(scope="module")
def orthonormal():
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((30, 30)))
    return q


def test_planted_support(orthonormal):
    y = orthonormal[:, [3, 7, 11]] @ np.array([1.5, -2.0, 1.2])
    result = omp(orthonormal, y, 3)

    assert sorted(result.support) == [3, 7, 11]
    assert result.residual_norms[-1] <= 1e-10
    np.testing.assert_allclose(result.coefficients[[3, 7, 11]], [1.5, -2.0, 1.2])


def test_recovery_rate_on_gaussian_dictionaries():
    rng = np.random.default_rng(4)
    recovered = 0
    for _ in range(200):
        d_w, _ = normalize_columns(rng.standard_normal((50, 150)))
        support = np.sort(rng.choice(150, size=3, replace=False))
        y = d_w[:, support] @ rng.standard_normal(3)

        recovered += sorted(omp(d_w, y, 3).support) == list(support)

    assert recovered >= 190


def test_full_support_is_least_squares():
    rng = np.random.default_rng(1)
    matrix = rng.standard_normal((10, 10)) + 3.0 * np.eye(10)
    Y = rng.standard_normal((10, 4))

    code = sparse_code(matrix, Y, k0=10)
    assert nmse(Y, matrix @ code.s) <= 1e-10


def test_residual_is_monotone():
    rng = np.random.default_rng(2)
    d_w, _ = normalize_columns(rng.standard_normal((20, 50)))

    for _ in range(10):
        result = omp(d_w, rng.standard_normal(20), 8)
        norms = np.array(result.residual_norms)
        assert len(result.support) == 8
        assert np.all(np.diff(norms) <= 1e-12)


def test_lowest_index_wins_ties():
    d_w = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert omp(d_w, np.array([2.0, 0.0]), 1).support == (0,)


def test_zero_atoms_are_never_selected():
    rng = np.random.default_rng(3)
    matrix = rng.standard_normal((8, 6))
    matrix[:, 0] = 0.0

    code = sparse_code(matrix, rng.standard_normal((8, 5)), k0=5)
    assert all(0 not in support for support in code.supports)
    np.testing.assert_array_equal(code.s[0], 0.0)


def test_codes_follow_the_unnormalised_dictionary(orthonormal):
    matrix = 2.5 * orthonormal
    Y = orthonormal[:, [0, 5]] @ np.array([[1.0, 0.0], [-1.0, 2.0]])

    code = sparse_code(matrix, Y, k0=2)
    np.testing.assert_allclose(matrix @ code.s, Y, atol=1e-10)
    assert code.max_support == 2


def test_threads_do_not_change_codes():
    rng = np.random.default_rng(4)
    matrix = rng.standard_normal((12, 24))
    Y = rng.standard_normal((12, 9))

    serial = sparse_code(matrix, Y, k0=3, threads=1)
    pooled = sparse_code(matrix, Y, k0=3, threads=4)

    np.testing.assert_array_equal(serial.s, pooled.s)
    assert serial.supports == pooled.supports


def test_bad_inputs(orthonormal):
    with pytest.raises(ValueError):
        omp(orthonormal, np.ones(30), 0)
    with pytest.raises(ValueError):
        omp(orthonormal, np.ones(29), 2)
