"""
Testing the topology update primitives in topo_opt.py
"""

import numpy as np
import pytest

from hodge_tdl.complex import PolygonSelector, SelectorMode, hodge_pair
from hodge_tdl.dictionary import assemble
from hodge_tdl.topo_opt import (
    estimate_lipschitz,
    evaluate,
    grad_p,
    greedy_step,
    objective,
    prox_hard_box,
    rtdl_step,
)

from .conftest import random_params


def _codes(cx, M, T=5, seed=0):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((M * cx.n_edges, T))
    return S, rng.standard_normal((cx.n_edges, T))


def _without_upper(params):
    h = params.h.copy()
    h[params.upper_mask()] = 0.0
    return params.with_h(h)


def test_objective(k4_complex):
    params = random_params(2, 2, 0)
    S, Y = _codes(k4_complex, 2)
    p = PolygonSelector([1, 0, 1, 1])

    assert objective(params, np.zeros_like(S), p, Y, k4_complex, 0.1) == pytest.approx(
        np.sum(Y**2) + 0.1 * params.h @ params.h
    )

    D = assemble(params, hodge_pair(k4_complex, p)).matrix
    state = evaluate(params, S, p, D @ S, k4_complex, gamma=0.1)
    assert state.value == pytest.approx(0.1 * params.h @ params.h, rel=1e-9)
    np.testing.assert_allclose(state.residual, 0.0, atol=1e-10)


def test_greedy_finds_planted_removal(k4_complex):
    params = random_params(2, 2, 1)
    S, _ = _codes(k4_complex, 2, seed=1)
    truth = PolygonSelector.ones(4).without(2)
    Y = assemble(params, hodge_pair(k4_complex, truth)).matrix @ S

    choice = greedy_step(params, S, PolygonSelector.ones(4), Y, k4_complex)

    assert choice.polygon == 2
    assert choice.value == objective(params, S, truth, Y, k4_complex)
    assert [j for j, _ in choice.candidates] == [0, 1, 2, 3]


def test_greedy_ties_go_to_lowest_index(k4_complex):
    # without upper coefficients the dictionary ignores the topology
    params = _without_upper(random_params(2, 2, 2))
    S, Y = _codes(k4_complex, 2, seed=2)

    choice = greedy_step(params, S, PolygonSelector([0, 1, 1, 1]), Y, k4_complex)
    assert choice.polygon == 1
    assert len(choice.candidates) == 3


def test_greedy_threads_and_evaluator(k4_complex):
    params = random_params(2, 2, 3)
    S, Y = _codes(k4_complex, 2, seed=3)
    p = PolygonSelector.ones(4)

    serial = greedy_step(params, S, p, Y, k4_complex, threads=1)
    pooled = greedy_step(params, S, p, Y, k4_complex, threads=3)
    assert serial == pooled

    custom = greedy_step(
        params, S, p, Y, k4_complex, evaluator=lambda q: float(q.values @ [1, 2, 3, 4])
    )
    assert custom.polygon == 3

    with pytest.raises(ValueError):
        greedy_step(params, S, PolygonSelector.zeros(4), Y, k4_complex)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(k4_complex, seed):
    params = random_params(2, 2, seed)
    S, Y = _codes(k4_complex, 2, seed=seed)
    values = np.random.default_rng(seed).uniform(0.2, 0.8, 4)
    p = PolygonSelector(values, SelectorMode.RELAXED)

    grad = grad_p(params, S, p, Y, k4_complex)

    def f(v):
        relaxed = PolygonSelector(v, SelectorMode.RELAXED)
        return objective(params, S, relaxed, Y, k4_complex)

    step = 1e-6
    numeric = np.empty(4)
    for j in range(4):
        shift = np.zeros(4)
        shift[j] = step
        numeric[j] = (f(values + shift) - f(values - shift)) / (2 * step)

    np.testing.assert_allclose(
        grad, numeric, rtol=1e-5, atol=1e-6 * np.abs(numeric).max()
    )


def test_first_order_gradient(square_complex):
    params = random_params(1, 1, 4)
    S, Y = _codes(square_complex, 1, seed=4)
    p = PolygonSelector([1.0, 0.6], SelectorMode.RELAXED)

    D = assemble(params, hodge_pair(square_complex, p)).matrix
    R = Y - D @ S
    b2 = square_complex.b2.astype(float)
    expected = [
        -2.0 * np.sqrt(5) * params.h_up[0, 0] * b2[:, j] @ S @ R.T @ b2[:, j]
        for j in range(2)
    ]

    np.testing.assert_allclose(grad_p(params, S, p, Y, square_complex), expected)


def test_gradient_without_upper_terms(k4_complex):
    params = _without_upper(random_params(2, 2, 5))
    S, Y = _codes(k4_complex, 2, seed=5)

    grad = grad_p(params, S, PolygonSelector.ones(4), Y, k4_complex)
    np.testing.assert_array_equal(grad, 0.0)
    assert estimate_lipschitz(params, S, PolygonSelector.ones(4), Y, k4_complex) == 0


def test_prox_hard_box():
    out = prox_hard_box(np.array([0.2, 0.5, 1.3]), 0.045)
    np.testing.assert_allclose(out, [0.0, 0.5, 1.0])

    z = np.array([-0.4, 0.1, 0.29, 0.31, 0.99, 1.0, 7.0])
    once = prox_hard_box(z, 0.045)
    np.testing.assert_array_equal(prox_hard_box(once, 0.045), once)
    assert np.all((once == 0) | ((once >= 0.3) & (once <= 1)))

    for lam in (0.0, 0.5):
        with pytest.raises(ValueError):
            prox_hard_box(z, lam)


def test_rtdl_steps_descend(k4_complex):
    params = random_params(2, 2, 6, scale=0.3)
    S, Y = _codes(k4_complex, 2, seed=6)
    p = PolygonSelector(np.full(4, 0.9), SelectorMode.RELAXED)

    lipschitz = estimate_lipschitz(params, S, p, Y, k4_complex)
    assert lipschitz > 0
    mu = 1.0 / lipschitz

    previous = None
    for _ in range(20):
        step = rtdl_step(params, S, p, Y, k4_complex, mu, 0.045)

        assert step.accepted
        assert step.p_next.mode is SelectorMode.RELAXED
        assert np.all((step.p_next.values >= 0) & (step.p_next.values <= 1))
        if previous is not None:
            assert step.obj_before == previous
        previous = step.obj_after
        p = step.p_next


def test_rtdl_step_fixed_point(k4_complex):
    params = _without_upper(random_params(2, 2, 7))
    S, Y = _codes(k4_complex, 2, seed=7)
    p = PolygonSelector([0.4, 0.1, 1.0, 0.9], SelectorMode.RELAXED)

    step = rtdl_step(params, S, p, Y, k4_complex, mu=1.0, lam=0.045)

    np.testing.assert_array_equal(step.p_next.values, [0.4, 0.0, 1.0, 0.9])
    assert step.backtracks == 0
    assert step.obj_after == pytest.approx(step.obj_before)

    with pytest.raises(ValueError):
        rtdl_step(params, S, p, Y, k4_complex, mu=0.0, lam=0.045)
