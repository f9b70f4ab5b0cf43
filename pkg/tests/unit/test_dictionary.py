"""
Testing the parametric dictionaries in dictionary.py
"""

import numpy as np
import pytest

from hodge_tdl.complex import PolygonSelector, SelectorMode, hodge_pair
from hodge_tdl.dictionary import (
    DictionaryParams,
    assemble,
    check_frame,
    fir_filter,
    frame_energy,
    kernel_eval,
    normalize_columns,
    translate,
)
from hodge_tdl.learner import select_bounds
from hodge_tdl.spectral import FilterKind, FrequencyClass, eigendecompose
from hodge_tdl.synth import SynthConfig, gen_complex, gen_params

from .conftest import random_params


@pytest.fixture(scope="module")
def random_complex():
    """
    Return a random complex with its planted topology
    """
    return gen_complex(SynthConfig(n_vertices=10, n_edges=22, q_tr=0.7, seed=8))


def _random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 13))
    cx, p = gen_complex(SynthConfig(n_vertices=n, n_edges=2 * n, q_tr=0.7, seed=seed))
    return hodge_pair(cx, p), random_params(3, 2, seed)


def test_params_layout():
    params = DictionaryParams.from_blocks(
        [1.0, 2.0], [[3, 4], [5, 6]], [[7, 8], [9, 0]]
    )

    assert (params.M, params.J, params.block_size) == (2, 2, 5)
    np.testing.assert_array_equal(params.block(1), [2, 5, 6, 9, 0])
    np.testing.assert_array_equal(params.h_up, [[3, 4], [5, 6]])
    np.testing.assert_array_equal(params.h_down, [[7, 8], [9, 0]])
    np.testing.assert_array_equal(params.upper_mask(), [0, 1, 1, 0, 0, 0, 1, 1, 0, 0])

    with pytest.raises(ValueError):
        DictionaryParams(2, 2, np.zeros(9))
    with pytest.raises(ValueError):
        DictionaryParams(1, 1, [np.nan, 0.0, 0.0])


@pytest.mark.parametrize("seed", range(20))
def test_filter_matches_kernel(seed):
    hp, params = _random_instance(seed)
    spec = eigendecompose(hp)
    u = spec.eigenvectors

    for i in range(params.M):
        h_i = params.block(i)
        filt = fir_filter(h_i, hp)
        spectral = u @ np.diag(kernel_eval(h_i, spec)) @ u.T
        np.testing.assert_allclose(filt, spectral, atol=1e-9 * np.abs(filt).max())


@pytest.mark.parametrize("seed", range(20))
def test_translation_stack(seed):
    hp, params = _random_instance(seed)
    spec = eigendecompose(hp)
    h_i = params.block(0)
    g_hat = kernel_eval(h_i, spec)

    stacked = np.column_stack([translate(spec, g_hat, m) for m in range(spec.n)])
    expected = np.sqrt(spec.n) * fir_filter(h_i, hp)

    np.testing.assert_allclose(stacked, expected, atol=1e-8 * np.abs(expected).max())

    with pytest.raises(IndexError):
        translate(spec, g_hat, spec.n)


def test_joint_filter(square_complex):
    hp = hodge_pair(square_complex, PolygonSelector([1, 1]))
    h_i = np.array([0.5, -0.2, 0.03])
    lap = hp.laplacian

    expected = 0.5 * np.eye(hp.n) - 0.2 * lap + 0.03 * lap @ lap
    np.testing.assert_allclose(fir_filter(h_i, hp, FilterKind.JOINT), expected)


def test_assemble(k4_complex):
    hp = hodge_pair(k4_complex, PolygonSelector([1, 0.5, 0, 1], SelectorMode.RELAXED))
    a, b = random_params(2, 2, 0), random_params(2, 2, 1)

    d_a = assemble(a, hp)
    d_b = assemble(b, hp)
    combined = assemble(a.with_h(2.0 * a.h - b.h), hp)

    assert d_a.matrix.shape == (6, 12)
    assert d_a.n_atoms == 12
    np.testing.assert_allclose(
        d_a.block(1), np.sqrt(6) * fir_filter(a.block(1), hp), atol=1e-12
    )
    np.testing.assert_allclose(
        combined.matrix, 2.0 * d_a.matrix - d_b.matrix, atol=1e-10
    )


def _frame_params(spec):
    _, top_up = spec.extremes(FrequencyClass.UPPER)
    _, top_down = spec.extremes(FrequencyClass.LOWER)
    # the two kernels add up to 1.05 at every frequency
    return DictionaryParams(
        2,
        1,
        [0.5, 0.5 / top_up, 0.5 / top_down, 0.55, -0.5 / top_up, -0.5 / top_down],
    )


def test_check_frame(square_complex):
    hp = hodge_pair(square_complex, PolygonSelector([1, 1]))
    spec = eigendecompose(hp)
    params = _frame_params(spec)

    report = check_frame(params, spec, d=1.1, eps=0.1)
    assert report.ok
    assert report.lower_bound == pytest.approx(0.5)
    assert report.upper_bound == pytest.approx(1.44)

    dictionary = assemble(params, hp)
    rng = np.random.default_rng(0)
    for _ in range(10):
        y = rng.standard_normal(hp.n)
        energy = frame_energy(dictionary, y)
        assert report.lower_bound * (y @ y) <= energy <= report.upper_bound * (y @ y)


@pytest.mark.parametrize("seed", range(10))
def test_frame_inequality(random_complex, seed):
    cx, p = random_complex
    hp = hodge_pair(cx, p)
    spec = eigendecompose(hp)
    params = gen_params(cx, p, M=3, J=2, seed=seed)

    report = check_frame(params, spec, *select_bounds(params, spec))
    assert report.ok

    dictionary = assemble(params, hp)
    rng = np.random.default_rng(100 + seed)
    for _ in range(100):
        y = rng.standard_normal(hp.n)
        energy = frame_energy(dictionary, y)
        assert energy >= report.lower_bound * (y @ y) * (1 - 1e-8)
        assert energy <= report.upper_bound * (y @ y) * (1 + 1e-8)


def test_check_frame_violations(square_complex):
    spec = eigendecompose(hodge_pair(square_complex, PolygonSelector([1, 1])))
    params = DictionaryParams(2, 1, [-0.1, 0, 0, 0.2, 0, 0])

    report = check_frame(params, spec, d=1.0, eps=0.5)
    assert not report.assumption1_ok
    assert not report.assumption2_ok
    assert (0, 0) in report.kernel_violations
    assert report.coverage_violations == tuple(range(spec.n))

    with pytest.raises(ValueError):
        check_frame(params, spec, d=1.0, eps=1.0)


def test_normalize_columns():
    matrix = np.array([[3.0, 0.0, 1.0], [4.0, 0.0, 1.0]])
    normalized, weights = normalize_columns(matrix)

    np.testing.assert_allclose(weights, [0.2, 0.0, 1.0 / np.sqrt(2.0)])
    np.testing.assert_allclose(np.linalg.norm(normalized, axis=0), [1.0, 0.0, 1.0])
