"""
Oriented second-order cell complexes.

Edges carry the reference orientation low -> high vertex. A polygon is stored
as a cyclic vertex sequence that starts at its smallest vertex and continues
toward the smaller of that vertex's two cycle neighbours.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from scipy import linalg

from hodge_tdl.constants import BINARIZE_AT, RANK_TOL
from hodge_tdl.exceptions import TopologyError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
Cycle = Tuple[int, ...]
SignedEdge = Tuple[int, int]


@dataclass(frozen=True)
class Skeleton1:
    """
    The 1-skeleton: vertices 0..num_vertices-1 and edges (u, v) with u < v,
    indexed in lexicographic order.
    """

    num_vertices: int
    edges: Tuple[Edge, ...]
    edge_index: Dict[Edge, int] = field(compare=False, repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def oriented_index(self, u: int, v: int) -> SignedEdge:
        """
        Returns (edge index, +1) when u -> v follows the reference orientation
        and (edge index, -1) when it runs against it.
        """
        key = (u, v) if u < v else (v, u)
        if key not in self.edge_index:
            raise TopologyError(f"edge {key} is not part of the skeleton")
        return self.edge_index[key], 1 if u < v else -1

    def to_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_vertices))
        graph.add_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class CandidatePolygons:
    """
    Candidate 2-cells. `incidences[c]` lists the (edge index, sign) pairs met
    while walking cycle c.
    """

    cycles: Tuple[Cycle, ...]
    incidences: Tuple[Tuple[SignedEdge, ...], ...]

    def __len__(self) -> int:
        return len(self.cycles)


@dataclass(frozen=True, eq=False)
class CellComplex2:
    skeleton: Skeleton1
    polygons: CandidatePolygons
    b1: np.ndarray
    b2: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.skeleton.num_vertices

    @property
    def n_edges(self) -> int:
        return self.skeleton.n_edges

    @property
    def n_polygons(self) -> int:
        return len(self.polygons)

    def lower_laplacian(self) -> np.ndarray:
        b1 = self.b1.astype(float)
        return b1.T @ b1

    def upper_incidence(self, p: "PolygonSelector") -> np.ndarray:
        """B2 diag(p)."""
        return self.b2.astype(float) * p.values[np.newaxis, :]


class SelectorMode(str, Enum):
    BINARY = "binary"
    RELAXED = "relaxed"


@dataclass(frozen=True, eq=False)
class PolygonSelector:
    """
    Indicator weights over the candidate polygons. Binary selectors hold 0/1
    entries, relaxed ones anything in [0, 1].
    """

    values: np.ndarray
    mode: SelectorMode = SelectorMode.BINARY

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        mode = SelectorMode(self.mode)

        if not np.all(np.isfinite(values)):
            raise ValueError("polygon selector contains non-finite entries")

        if mode is SelectorMode.BINARY and not np.all((values == 0) | (values == 1)):
            raise ValueError("binary polygon selector must only contain 0 and 1")

        if np.any(values < 0) or np.any(values > 1):
            raise ValueError("polygon selector entries must lie in [0, 1]")

        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mode", mode)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def ones(cls, n: int, mode: SelectorMode = SelectorMode.BINARY):
        return cls(np.ones(n), mode)

    @classmethod
    def zeros(cls, n: int, mode: SelectorMode = SelectorMode.BINARY):
        return cls(np.zeros(n), mode)

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.values == 0) | (self.values == 1)))

    def active(self) -> List[int]:
        return [int(j) for j in np.flatnonzero(self.values > 0)]

    def without(self, j: int) -> "PolygonSelector":
        values = self.values.copy()
        values[j] = 0.0
        return PolygonSelector(values, self.mode)

    def binarize(self, threshold: float = BINARIZE_AT) -> "PolygonSelector":
        return PolygonSelector((self.values >= threshold).astype(float))


@dataclass(frozen=True, eq=False)
class HodgePair:
    """
    Lower and upper Laplacians. `p` is the selector the upper part was built
    from, when there is one.
    """

    l_down: np.ndarray
    l_up: np.ndarray
    p: Optional[PolygonSelector] = None

    @property
    def n(self) -> int:
        return self.l_down.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        return self.l_down + self.l_up


def build_skeleton(num_vertices: int, edge_list: Iterable[Sequence[int]]) -> Skeleton1:
    """
    Builds a 1-skeleton, storing every edge as (min, max).
    """

    if num_vertices < 0:
        raise TopologyError(f"vertex count must be non-negative, got {num_vertices}")

    seen: Set[Edge] = set()

    for pair in edge_list:
        u, v = (int(x) for x in pair)

        if u == v:
            raise TopologyError(f"self-loop at vertex {u}")

        if not (0 <= u < num_vertices and 0 <= v < num_vertices):
            raise TopologyError(
                f"edge {(u, v)} references a vertex outside [0, {num_vertices})"
            )

        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise TopologyError(f"duplicate edge {(u, v)}")
        seen.add(key)

    edges = tuple(sorted(seen))
    return Skeleton1(num_vertices, edges, {e: i for i, e in enumerate(edges)})


def canonical_cycle(cycle: Sequence[int]) -> Cycle:
    """
    Rotates a cyclic vertex sequence to start at its minimal vertex and walks
    toward the smaller neighbour.
    """

    seq = [int(v) for v in cycle]
    start = seq.index(min(seq))
    seq = seq[start:] + seq[:start]

    if len(seq) > 2 and seq[-1] < seq[1]:
        seq = [seq[0]] + seq[1:][::-1]

    return tuple(seq)


def _cycle_incidence(sk: Skeleton1, cycle: Cycle) -> Tuple[SignedEdge, ...]:
    length = len(cycle)
    return tuple(
        sk.oriented_index(cycle[k], cycle[(k + 1) % length]) for k in range(length)
    )


def polygons_from_cycles(
    sk: Skeleton1, cycles: Iterable[Sequence[int]]
) -> CandidatePolygons:
    """
    Validates cycles against the skeleton and records their signed edge
    incidences. Duplicates (up to rotation and reflection) are dropped and the
    first occurrence keeps its position.
    """

    kept: List[Cycle] = []
    seen: Set[Cycle] = set()

    for raw in cycles:
        cycle = canonical_cycle(raw)

        if len(cycle) < 3:
            raise TopologyError(f"cycle {tuple(raw)} has fewer than 3 vertices")

        if len(set(cycle)) != len(cycle):
            raise TopologyError(f"cycle {tuple(raw)} is not simple")

        if cycle in seen:
            logger.debug("dropping duplicate cycle %s", cycle)
            continue

        seen.add(cycle)
        kept.append(cycle)

    incidences = tuple(_cycle_incidence(sk, c) for c in kept)
    return CandidatePolygons(tuple(kept), incidences)


def enumerate_polygons(sk: Skeleton1, max_len: int = 3) -> CandidatePolygons:
    """
    Lists the candidate polygons of the skeleton: all triangles when
    max_len == 3, otherwise every induced (chordless) cycle of length up to
    max_len. Cycles are ordered by length, then lexicographically.
    """

    if max_len < 3:
        raise ValueError(f"max_len must be at least 3, got {max_len}")

    if max_len == 3:
        neighbours: Dict[int, Set[int]] = {v: set() for v in range(sk.num_vertices)}
        for u, v in sk.edges:
            neighbours[u].add(v)
            neighbours[v].add(u)

        cycles = [
            (u, v, w)
            for u, v in sk.edges
            for w in sorted(neighbours[u] & neighbours[v])
            if w > v
        ]
    else:
        found = nx.chordless_cycles(sk.to_graph(), length_bound=max_len)
        cycles = [canonical_cycle(c) for c in found if len(c) >= 3]

    cycles = sorted(set(cycles), key=lambda c: (len(c), c))
    return polygons_from_cycles(sk, cycles)


def incidence_matrices(sk: Skeleton1, polys: CandidatePolygons) -> CellComplex2:
    """
    Builds B1 (vertices x edges) and B2 (edges x polygons) and checks that
    B1 B2 vanishes.
    """

    b1 = np.zeros((sk.num_vertices, sk.n_edges), dtype=np.int64)
    for e, (u, v) in enumerate(sk.edges):
        b1[u, e] = -1
        b1[v, e] = 1

    b2 = np.zeros((sk.n_edges, len(polys)), dtype=np.int64)
    for c, incidence in enumerate(polys.incidences):
        for e, sign in incidence:
            b2[e, c] = sign

    if np.any(b1 @ b2 != 0):
        raise TopologyError("B1 B2 != 0: polygon orientation is inconsistent")

    b1.setflags(write=False)
    b2.setflags(write=False)
    return CellComplex2(sk, polys, b1, b2)


def build_complex(
    num_vertices: int, edge_list: Iterable[Sequence[int]], max_len: int = 3
) -> CellComplex2:
    """
    Shortcut: skeleton, enumerated candidate polygons and incidence matrices.
    """

    sk = build_skeleton(num_vertices, edge_list)
    return incidence_matrices(sk, enumerate_polygons(sk, max_len))


def hodge_pair(c: CellComplex2, p: PolygonSelector) -> HodgePair:
    """
    Lower Laplacian B1^T B1 and upper Laplacian sum_j p_j b_j b_j^T.
    """

    if len(p) != c.n_polygons:
        raise ValueError(
            f"polygon selector has {len(p)} entries, complex has {c.n_polygons}"
        )

    l_down = c.lower_laplacian()
    l_up = c.upper_incidence(p) @ c.b2.T.astype(float)
    l_up = 0.5 * (l_up + l_up.T)

    return HodgePair(l_down, l_up, p)


def _project(basis: np.ndarray, y: np.ndarray) -> np.ndarray:
    if basis.shape[1] == 0:
        return np.zeros_like(y)
    coef, *_ = linalg.lstsq(basis, y, cond=RANK_TOL)
    return basis @ coef


def hodge_decompose(
    y: np.ndarray, c: CellComplex2, p: PolygonSelector
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Splits an edge signal into its irrotational (im B1^T), solenoidal
    (im B2 diag(p)) and harmonic parts.
    """

    if not p.is_binary:
        raise ValueError("the Hodge decomposition needs a binary polygon selector")

    y = np.asarray(y, dtype=float)
    if y.shape != (c.n_edges,):
        raise ValueError(f"edge signal has shape {y.shape}, expected ({c.n_edges},)")

    irrotational = _project(c.b1.T.astype(float), y)
    active = c.b2[:, p.values > 0].astype(float)
    solenoidal = _project(active, y)
    harmonic = y - irrotational - solenoidal

    return irrotational, solenoidal, harmonic


def betti_number(c: CellComplex2, p: PolygonSelector) -> int:
    """
    First Betti number N1 - rank(B1) - rank(B2 diag(p)).
    """

    rank_b1 = np.linalg.matrix_rank(c.b1.astype(float), tol=RANK_TOL)
    upper = c.upper_incidence(p)
    rank_b2 = np.linalg.matrix_rank(upper, tol=RANK_TOL) if upper.size else 0
    return int(c.n_edges - rank_b1 - rank_b2)
