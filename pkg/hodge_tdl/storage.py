"""
On-disk formats.

A dataset directory holds signals.csv (one row per edge, one column per
signal), edges.txt, polygons.txt, manifest.json and, for synthetic data,
truth.json. Floats are written with repr(), the shortest decimal string that
reads back to the same double.
"""

import csv
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from hodge_tdl.complex import (
    CellComplex2,
    PolygonSelector,
    build_skeleton,
    enumerate_polygons,
    incidence_matrices,
    polygons_from_cycles,
)
from hodge_tdl.constants import FILES
from hodge_tdl.dictionary import DictionaryParams
from hodge_tdl.exceptions import DatasetError, TopologyError
from hodge_tdl.spectral import FilterKind

logger = logging.getLogger(__name__)

VERTEX_HEADER = "# vertices"


def _fmt(value: float) -> str:
    return repr(float(value))


def write_edges(path: str, cx: CellComplex2):
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(f"{VERTEX_HEADER} {cx.n_vertices}\n")
        for u, v in cx.skeleton.edges:
            stream.write(f"{u} {v}\n")


def read_edges(path: str) -> Tuple[int, List[Tuple[int, int]]]:
    """
    Reads an edge list: one "u v" pair per line, blank lines and lines
    starting with '#' ignored. A "# vertices N" line fixes the vertex count,
    otherwise it is one more than the largest vertex.
    """

    num_vertices: Optional[int] = None
    edges: List[Tuple[int, int]] = []

    with open(path, "r", encoding="utf-8") as stream:
        for line_no, raw in enumerate(stream, start=1):
            line = raw.strip()

            if line.startswith(VERTEX_HEADER):
                try:
                    num_vertices = int(line[len(VERTEX_HEADER) :])
                except ValueError as err:
                    raise DatasetError(f"bad vertex count '{line}'", line_no) from err
                continue

            if not line or line.startswith("#"):
                continue

            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise DatasetError(f"expected 'u v', got '{line}'", line_no)
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError as err:
                raise DatasetError(f"non-integer vertex in '{line}'", line_no) from err

    if not edges:
        raise DatasetError(f"{path} contains no edges")

    if num_vertices is None:
        num_vertices = max(max(e) for e in edges) + 1

    return num_vertices, edges


def write_polygons(path: str, cx: CellComplex2):
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        for cycle in cx.polygons.cycles:
            stream.write(" ".join(str(v) for v in cycle) + "\n")


def read_polygons(path: str) -> List[Tuple[int, ...]]:
    cycles: List[Tuple[int, ...]] = []

    with open(path, "r", encoding="utf-8") as stream:
        for line_no, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                cycles.append(tuple(int(v) for v in line.replace(",", " ").split()))
            except ValueError as err:
                raise DatasetError(f"non-integer vertex in '{line}'", line_no) from err

    return cycles


def load_complex(
    edges_path: str, polygons_path: Optional[str] = None, max_len: Optional[int] = None
) -> CellComplex2:
    """
    Without a polygon file the complex has no polygons, unless max_len is
    given, in which case every induced cycle up to that length is a candidate.
    """

    num_vertices, edges = read_edges(edges_path)
    sk = build_skeleton(num_vertices, edges)
    if polygons_path:
        candidates = polygons_from_cycles(sk, read_polygons(polygons_path))
    elif max_len is not None:
        candidates = enumerate_polygons(sk, max_len)
    else:
        candidates = polygons_from_cycles(sk, [])
    return incidence_matrices(sk, candidates)


def write_signals(path: str, Y: np.ndarray):
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        for row in np.atleast_2d(Y):
            writer.writerow(_fmt(v) for v in row)


def read_signals(path: str) -> np.ndarray:
    """
    Reads an edge-by-signal matrix from CSV. Every row needs the same number
    of columns.
    """

    rows: List[List[float]] = []

    with open(path, "r", encoding="utf-8", newline="") as stream:
        for line_no, row in enumerate(csv.reader(stream), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError as err:
                raise DatasetError(f"non-numeric entry: {err}", line_no) from err

            if rows and len(values) != len(rows[0]):
                raise DatasetError(
                    f"row has {len(values)} columns, expected {len(rows[0])}", line_no
                )
            if not np.all(np.isfinite(values)):
                raise DatasetError("non-finite entry", line_no)
            rows.append(values)

    if not rows:
        raise DatasetError(f"{path} contains no signals")

    return np.array(rows, dtype=float)


def write_json(path: str, data: Any):
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        json.dump(data, stream, indent=2, sort_keys=True, allow_nan=True)
        stream.write("\n")


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as stream:
        return json.load(stream)


def params_to_dict(params: DictionaryParams) -> Dict[str, Any]:
    return {
        "J": params.J,
        "M": params.M,
        "kind": params.kind.value,
        "h": [[float(v) for v in block] for block in params.blocks],
    }


def params_from_dict(data: Dict[str, Any]) -> DictionaryParams:
    blocks = np.array(data["h"], dtype=float)
    return DictionaryParams(
        int(data["M"]), int(data["J"]), blocks.ravel(), FilterKind(data["kind"])
    )


def truth_to_dict(p: PolygonSelector, params: DictionaryParams, q_tr: float):
    return {
        "p": [float(v) for v in p.values],
        "params": params_to_dict(params),
        "q_tr": float(q_tr),
    }


@dataclass(frozen=True, eq=False)
class Truth:
    p: PolygonSelector
    params: DictionaryParams
    q_tr: Optional[float] = None


def truth_from_dict(data: Dict[str, Any]) -> Truth:
    return Truth(
        PolygonSelector(data["p"]),
        params_from_dict(data["params"]),
        data.get("q_tr"),
    )


@dataclass(frozen=True, eq=False)
class StoredModel:
    method: str
    params: Optional[DictionaryParams]
    p: PolygonSelector
    d: float
    eps: float
    k0: int
    num_vertices: int
    edges: Tuple[Tuple[int, int], ...]
    polygons: Tuple[Tuple[int, ...], ...]
    p_relaxed: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "params": None if self.params is None else params_to_dict(self.params),
            "p": [float(v) for v in self.p.values],
            "p_relaxed": None
            if self.p_relaxed is None
            else [float(v) for v in self.p_relaxed],
            "d": float(self.d),
            "eps": float(self.eps),
            "k0": int(self.k0),
            "num_vertices": int(self.num_vertices),
            "edges": [list(e) for e in self.edges],
            "polygons": [list(c) for c in self.polygons],
        }

    def complex(self) -> CellComplex2:
        sk = build_skeleton(self.num_vertices, self.edges)
        return incidence_matrices(sk, polygons_from_cycles(sk, self.polygons))


def model_from_dict(data: Dict[str, Any]) -> StoredModel:
    try:
        params = data.get("params")
        relaxed = data.get("p_relaxed")
        return StoredModel(
            method=data["method"],
            params=None if params is None else params_from_dict(params),
            p=PolygonSelector(data["p"]),
            d=float(data["d"]),
            eps=float(data["eps"]),
            k0=int(data["k0"]),
            num_vertices=int(data["num_vertices"]),
            edges=tuple(tuple(e) for e in data["edges"]),
            polygons=tuple(tuple(c) for c in data["polygons"]),
            p_relaxed=None if relaxed is None else np.array(relaxed, dtype=float),
        )
    except KeyError as err:
        raise DatasetError(f"model file is missing field {err}") from err


def write_model(path: str, model: StoredModel):
    write_json(path, model.to_dict())


def read_model(path: str) -> StoredModel:
    return model_from_dict(read_json(path))


def write_trace(path: str, trace: Iterable[Sequence]):
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["iteration", "objective", "phase"])
        for iteration, value, phase in trace:
            writer.writerow([int(iteration), _fmt(value), phase])


def read_trace(path: str) -> List[Tuple[int, float, str]]:
    with open(path, "r", encoding="utf-8", newline="") as stream:
        reader = csv.DictReader(stream)
        return [
            (int(row["iteration"]), float(row["objective"]), row["phase"])
            for row in reader
        ]


RESULT_COLUMNS = [
    "method",
    "k0",
    "count",
    "nmse_mean",
    "nmse_std",
    "error_rate_mean",
    "error_rate_std",
    "laplacian_nmse_mean",
    "laplacian_nmse_std",
]


def write_results(csv_path: str, json_path: str, rows: List[Dict[str, Any]]):
    """
    One row per (method, k0). Metrics a row does not carry stay empty in the
    CSV and are left out of the JSON.
    """

    with open(csv_path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(
                ""
                if row.get(col) is None
                else (_fmt(row[col]) if isinstance(row[col], float) else row[col])
                for col in RESULT_COLUMNS
            )

    write_json(json_path, rows)


def git_blob_hash(data: bytes) -> str:
    header = f"blob {len(data)}\0".encode("utf-8")
    return hashlib.sha1(header + data).hexdigest()


def content_hash(paths: Iterable[str]) -> str:
    """
    Hash over the git blob hashes of the given files, in sorted path order.
    """

    digest = hashlib.sha256()
    for path in sorted(paths):
        with open(path, "rb") as stream:
            blob = git_blob_hash(stream.read())
        digest.update(f"{os.path.basename(path)} {blob}\n".encode("utf-8"))
    return digest.hexdigest()


@dataclass
class RunManifest:
    """
    Everything needed to re-run a command: its name, the arguments it was
    called with, the resolved config, the seed and a hash of its inputs.
    """

    command: str
    args: Dict[str, Any]
    config: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    input_hash: str = ""
    timings: Dict[str, float] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    split: Optional[Dict[str, int]] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def write_manifest(path: str, manifest: RunManifest):
    write_json(path, manifest.to_dict())


def read_manifest(path: str) -> RunManifest:
    data = read_json(path)
    try:
        return RunManifest(**data)
    except TypeError as err:
        raise DatasetError(f"{path} is not a run manifest: {err}") from err


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    path: str
    complex: CellComplex2
    Y: np.ndarray
    n_train: int
    truth: Optional[Truth] = None

    @property
    def y_train(self) -> np.ndarray:
        return self.Y[:, : self.n_train]

    @property
    def y_test(self) -> np.ndarray:
        return self.Y[:, self.n_train :]


def write_dataset(
    directory: str,
    cx: CellComplex2,
    Y: np.ndarray,
    manifest: RunManifest,
    truth: Optional[Dict[str, Any]] = None,
) -> List[str]:
    """
    Writes one dataset directory and returns the paths written.
    """

    os.makedirs(directory, exist_ok=True)
    written = [
        os.path.join(directory, FILES.SIGNALS),
        os.path.join(directory, FILES.EDGES),
        os.path.join(directory, FILES.POLYGONS),
    ]
    write_signals(written[0], Y)
    write_edges(written[1], cx)
    write_polygons(written[2], cx)

    if truth is not None:
        written.append(os.path.join(directory, FILES.TRUTH))
        write_json(written[-1], truth)

    write_manifest(os.path.join(directory, FILES.MANIFEST), manifest)
    return written


def read_dataset(directory: str, max_len: Optional[int] = None) -> Dataset:
    """
    Loads a dataset directory. max_len enumerates candidate polygons when the
    directory carries no polygon file.
    """

    signals = os.path.join(directory, FILES.SIGNALS)
    if not os.path.isfile(signals):
        raise DatasetError(f"{directory} has no {FILES.SIGNALS}")

    polygons = os.path.join(directory, FILES.POLYGONS)
    try:
        cx = load_complex(
            os.path.join(directory, FILES.EDGES),
            polygons if os.path.isfile(polygons) else None,
            max_len,
        )
    except (OSError, TopologyError) as err:
        raise DatasetError(f"cannot load the complex of {directory}: {err}") from err

    Y = read_signals(signals)
    if Y.shape[0] != cx.n_edges:
        raise DatasetError(
            f"{FILES.SIGNALS} has {Y.shape[0]} rows but the complex has "
            f"{cx.n_edges} edges"
        )

    n_train = Y.shape[1]
    manifest_path = os.path.join(directory, FILES.MANIFEST)
    if os.path.isfile(manifest_path):
        split = read_manifest(manifest_path).split
        if split:
            n_train = int(split["train"])

    truth = None
    truth_path = os.path.join(directory, FILES.TRUTH)
    if os.path.isfile(truth_path):
        truth = truth_from_dict(read_json(truth_path))
        if len(truth.p) != cx.n_polygons:
            raise DatasetError(
                f"truth has {len(truth.p)} polygons, complex has {cx.n_polygons}"
            )

    return Dataset(
        os.path.basename(os.path.normpath(directory)), directory, cx, Y, n_train, truth
    )


def list_datasets(directory: str) -> List[str]:
    """
    A dataset directory itself, or the sorted dataset directories below it.
    """

    if os.path.isfile(os.path.join(directory, FILES.SIGNALS)):
        return [directory]

    found = sorted(
        os.path.join(directory, name)
        for name in os.listdir(directory)
        if os.path.isfile(os.path.join(directory, name, FILES.SIGNALS))
    )
    if not found:
        raise DatasetError(f"no dataset found under {directory}")
    return found
