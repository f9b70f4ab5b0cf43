"""
Synthetic benchmark: a random connected graph, triangles switched on with
probability q_tr, random feasible filter coefficients and planted sparse
codes.

Random streams are derived from the seed only. The graph and the activation
draws use their own streams, so every q_tr shares the same 1-skeleton and a
larger q_tr switches on a superset of the triangles.
"""

import logging
from concurrent import futures
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import networkx as nx
import numpy as np

from hodge_tdl.complex import (
    CellComplex2,
    PolygonSelector,
    build_skeleton,
    enumerate_polygons,
    hodge_pair,
    incidence_matrices,
)
from hodge_tdl.constants import THREADS
from hodge_tdl.dictionary import DictionaryParams, assemble
from hodge_tdl.exceptions import ConfigError, SynthesisError
from hodge_tdl.spectral import FrequencyClass, eigendecompose

logger = logging.getLogger(__name__)

MAX_RESAMPLES = 100

INT_FIELDS = (
    ("n_vertices", "nVertices"),
    ("T", "T"),
    ("k0_gen", "k0Gen"),
    ("M", "M"),
    ("J", "J"),
    ("n_datasets", "nDatasets"),
)


@dataclass(frozen=True)
class SynthConfig:
    n_vertices: int = 40
    n_edges: int = 100
    q_tr: float = 0.7
    T: int = 220
    t_train: int = 150
    t_test: int = 70
    k0_gen: int = 25
    M: int = 3
    J: int = 2
    n_datasets: int = 10
    seed: int = 0

    def __post_init__(self):
        for name, key in INT_FIELDS:
            value = getattr(self, name)
            if value < 1:
                raise ConfigError(key, f"must be at least 1, got {value}")

        if self.n_edges < 0:
            raise ConfigError("nEdges", f"must be non-negative, got {self.n_edges}")

        if not 0.0 <= self.q_tr <= 1.0:
            raise ConfigError("qTr", f"must lie in [0, 1], got {self.q_tr}")

        if self.t_train < 1 or self.t_test < 0:
            raise ConfigError("tTrain", "need at least one training signal")

        if self.t_train + self.t_test > self.T:
            raise ConfigError(
                "tTest",
                f"tTrain + tTest = {self.t_train + self.t_test} exceeds T = {self.T}",
            )

        if self.k0_gen > self.M * self.n_edges:
            raise ConfigError(
                "k0Gen", f"{self.k0_gen} exceeds the {self.M * self.n_edges} atoms"
            )


@dataclass(frozen=True, eq=False)
class PlantedTruth:
    complex: CellComplex2
    p: PolygonSelector
    params: DictionaryParams
    codes: np.ndarray
    dictionary: np.ndarray


class SyntheticDataset(NamedTuple):
    y_train: np.ndarray
    y_test: np.ndarray
    truth: PlantedTruth


def _streams(seed: int) -> Tuple[np.random.SeedSequence, ...]:
    graph, activation, data = np.random.SeedSequence(seed).spawn(3)
    return graph, activation, data


def gen_complex(cfg: SynthConfig) -> Tuple[CellComplex2, PolygonSelector]:
    """
    G(n, m) graph resampled until connected, its triangles as candidate
    polygons and each triangle active with probability q_tr.
    """

    n, m = cfg.n_vertices, cfg.n_edges
    if m > n * (n - 1) // 2:
        raise SynthesisError(f"a simple graph on {n} vertices has fewer than {m} edges")
    if m < n - 1:
        raise SynthesisError(f"{m} edges cannot connect {n} vertices")

    graph_seq, activation_seq, _ = _streams(cfg.seed)
    graph_seed = int(np.random.default_rng(graph_seq).integers(2**31 - 1))

    for attempt in range(MAX_RESAMPLES):
        graph = nx.gnm_random_graph(n, m, seed=graph_seed + attempt)
        if nx.is_connected(graph):
            break
    else:
        raise SynthesisError(
            f"no connected G({n}, {m}) graph after {MAX_RESAMPLES} resamples"
        )

    logger.debug("connected graph after %d resamples", attempt)

    sk = build_skeleton(n, graph.edges())
    cx = incidence_matrices(sk, enumerate_polygons(sk, 3))

    draws = np.random.default_rng(activation_seq).uniform(size=cx.n_polygons)
    p_true = PolygonSelector((draws < cfg.q_tr).astype(float))

    logger.info(
        "complex: %d edges, %d triangles, %d active",
        cx.n_edges,
        cx.n_polygons,
        len(p_true.active()),
    )
    return cx, p_true


def gen_params(
    cx: CellComplex2,
    p_true: PolygonSelector,
    M: int,
    J: int,
    seed=None,
) -> DictionaryParams:
    """
    Uniform [0, 1] coefficients with every power term divided by the matching
    power of the largest eigenvalue of its Laplacian, so each term is at most
    its coefficient at the top of the spectrum. Upper terms vanish when the
    topology has no active polygon.
    """

    rng = np.random.default_rng(seed)
    spec = eigendecompose(hodge_pair(cx, p_true))
    _, top_down = spec.extremes(FrequencyClass.LOWER)
    _, top_up = spec.extremes(FrequencyClass.UPPER)

    orders = np.arange(1, J + 1)
    h_id = rng.uniform(0.0, 1.0, M)
    h_up = rng.uniform(0.0, 1.0, (M, J))
    h_down = rng.uniform(0.0, 1.0, (M, J))

    h_up = h_up / top_up**orders if top_up > 0 else np.zeros((M, J))
    h_down = h_down / top_down**orders if top_down > 0 else np.zeros((M, J))

    return DictionaryParams.from_blocks(h_id, h_up, h_down)


def _planted(
    cfg: SynthConfig,
    cx: CellComplex2,
    p_true: PolygonSelector,
    seq: np.random.SeedSequence,
) -> SyntheticDataset:
    rng = np.random.default_rng(seq)
    params = gen_params(cx, p_true, cfg.M, cfg.J, rng)
    matrix = assemble(params, hodge_pair(cx, p_true)).matrix

    atoms = matrix.shape[1]
    codes = np.zeros((atoms, cfg.T))
    for t in range(cfg.T):
        support = rng.choice(atoms, size=cfg.k0_gen, replace=False)
        codes[support, t] = rng.standard_normal(cfg.k0_gen)

    Y = matrix @ codes
    truth = PlantedTruth(cx, p_true, params, codes, matrix)
    return SyntheticDataset(
        Y[:, : cfg.t_train],
        Y[:, cfg.t_train : cfg.t_train + cfg.t_test],
        truth,
    )


def gen_benchmark(
    cfg: SynthConfig,
    complex_and_p: Optional[Tuple[CellComplex2, PolygonSelector]] = None,
    threads: int = THREADS,
) -> List[SyntheticDataset]:
    """
    n_datasets datasets on one complex, each with its own coefficients and
    codes drawn from a stream spawned off the seed.
    """

    cx, p_true = complex_and_p if complex_and_p is not None else gen_complex(cfg)
    _, _, data_seq = _streams(cfg.seed)
    seqs = data_seq.spawn(cfg.n_datasets)

    def make(index: int) -> SyntheticDataset:
        return _planted(cfg, cx, p_true, seqs[index])

    if threads > 1 and cfg.n_datasets > 1:
        with futures.ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(make, range(cfg.n_datasets)))

    return [make(i) for i in range(cfg.n_datasets)]


def gen_dataset(cfg: SynthConfig, index: int = 0) -> SyntheticDataset:
    """
    Dataset number `index` of the benchmark described by cfg.
    """

    if not 0 <= index < cfg.n_datasets:
        raise IndexError(f"dataset {index} outside [0, {cfg.n_datasets})")

    cx, p_true = gen_complex(cfg)
    _, _, data_seq = _streams(cfg.seed)
    return _planted(cfg, cx, p_true, data_seq.spawn(cfg.n_datasets)[index])
