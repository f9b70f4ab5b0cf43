"""
File to store default objects for testing
"""

import numpy as np
import pytest

from hodge_tdl.complex import build_complex
from hodge_tdl.dictionary import DictionaryParams
from hodge_tdl.synth import SynthConfig, gen_dataset

TRIANGLE_EDGES = [(0, 1), (1, 2), (0, 2)]

# a square split by its diagonal: two triangles sharing the edge (0, 2)
SQUARE_EDGES = [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]

K4_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

SMALL_SYNTH = SynthConfig(
    n_vertices=8,
    n_edges=16,
    q_tr=0.5,
    T=40,
    t_train=30,
    t_test=10,
    k0_gen=2,
    M=2,
    J=2,
    n_datasets=2,
    seed=3,
)


def random_params(M, J, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return DictionaryParams(M, J, scale * rng.uniform(-1.0, 1.0, M * (2 * J + 1)))


@pytest.fixture(scope="module")
def triangle_complex():
    """
    Return a single filled triangle
    """
    return build_complex(3, TRIANGLE_EDGES)


@pytest.fixture(scope="module")
def square_complex():
    """
    Return a square with one diagonal, so two candidate triangles
    """
    return build_complex(4, SQUARE_EDGES)


@pytest.fixture(scope="module")
def k4_complex():
    """
    Return the complete graph on four vertices with its four triangles
    """
    return build_complex(4, K4_EDGES)


@pytest.fixture(scope="module")
def path_complex():
    """
    Return a path graph, which has no candidate polygons
    """
    return build_complex(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture(scope="module")
def small_synth_cfg():
    """
    Return a synthetic benchmark config small enough for unit tests
    """
    return SMALL_SYNTH


@pytest.fixture(scope="module")
def small_dataset():
    """
    Return the first dataset of the small synthetic benchmark
    """
    return gen_dataset(SMALL_SYNTH)
