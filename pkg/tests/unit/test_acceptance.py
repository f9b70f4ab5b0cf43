"""
Full-scale runs on the synthetic benchmark. These are deselected by default,
run them with `pytest -m slow` or `tox -e slow`.
"""

import numpy as np
import pytest

from hodge_tdl.complex import PolygonSelector, build_complex, hodge_decompose
from hodge_tdl.learner import LearnConfig, learn, reconstruct
from hodge_tdl.metrics import nmse, topology_error_rate
from hodge_tdl.synth import SynthConfig, gen_complex, gen_dataset

from .test_learner import assert_monotone

pytestmark = pytest.mark.slow

SEEDS = range(5)

# best first; neighbours may tie within 5%
ORDER = ("gtdl", "separated", "joint", "edge", "fourier")
SWEEP = (5, 15, 25)


def _recovery(q_tr, method):
    rates = []
    for seed in SEEDS:
        synth = SynthConfig(q_tr=q_tr, k0_gen=5, n_datasets=1, seed=seed)
        dataset = gen_dataset(synth)
        truth = dataset.truth
        cfg = LearnConfig(method=method, k0=5, bounds="truth", seed=seed)
        result = learn(dataset.y_train, truth.complex, cfg, truth.params)

        assert_monotone(result.trace)
        rates.append(topology_error_rate(truth.p, result.p))
    return float(np.mean(rates))


@pytest.mark.parametrize("method", ["gtdl", "rtdl"])
def test_topology_recovery_dense(method):
    assert _recovery(0.7, method) <= 0.05


def test_greedy_is_not_worse_when_sparse():
    assert _recovery(0.2, "gtdl") <= _recovery(0.2, "rtdl") + 0.05


def _test_errors(seed):
    synth = SynthConfig(q_tr=0.7, k0_gen=25, n_datasets=1, seed=seed)
    dataset = gen_dataset(synth)
    truth = dataset.truth

    errors = {}
    for method in ORDER:
        cfg = LearnConfig(method=method, k0=25, bounds="truth", seed=seed)
        result = learn(dataset.y_train, truth.complex, cfg, truth.params)
        for k0 in SWEEP:
            Y_hat, _ = reconstruct(result, dataset.y_test, k0)
            errors[method, k0] = nmse(dataset.y_test, Y_hat)
    return errors


def test_method_ordering():
    runs = [_test_errors(seed) for seed in SEEDS]

    for k0 in SWEEP:
        means = {m: float(np.mean([run[m, k0] for run in runs])) for m in ORDER}
        for better, worse in zip(ORDER, ORDER[1:]):
            assert means[better] <= 1.05 * means[worse], (k0, means)


@pytest.mark.parametrize("seed", range(50))
def test_random_complexes_are_exact(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 41))
    cfg = SynthConfig(n_vertices=n, n_edges=min(2 * n, n * (n - 1) // 2), seed=seed)
    cx, p = gen_complex(cfg)

    assert not np.any(cx.b1 @ cx.b2)

    rebuilt = build_complex(cx.n_vertices, cx.skeleton.edges)
    np.testing.assert_array_equal(rebuilt.b2, cx.b2)

    y = rng.standard_normal(cx.n_edges)
    for selector in (p, PolygonSelector.ones(cx.n_polygons)):
        grad, curl, harmonic = hodge_decompose(y, cx, selector)
        np.testing.assert_allclose(grad + curl + harmonic, y, atol=1e-10)
        assert abs(grad @ curl) <= 1e-10
        assert abs(grad @ harmonic) <= 1e-10
        assert abs(curl @ harmonic) <= 1e-10
