import logging
import os
import time
from contextlib import contextmanager
from typing import Dict, List, Optional

import numpy as np
import typer

from hodge_tdl import config, metrics, storage
from hodge_tdl.complex import (
    build_skeleton,
    enumerate_polygons,
    hodge_pair,
    incidence_matrices,
    polygons_from_cycles,
)
from hodge_tdl.constants import FILES, LOG_LEVEL
from hodge_tdl.exceptions import ConfigError, DatasetError, HodgeTdlError
from hodge_tdl.learner import dictionary_matrix, learn
from hodge_tdl.sparse_coding import sparse_code
from hodge_tdl.synth import gen_benchmark

app = typer.Typer(help="CLI for topological dictionary learning on cell complexes.")

logger = logging.getLogger(__name__)


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level.")
):
    logging.basicConfig(
        level=logging.DEBUG if verbose else LOG_LEVEL.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@contextmanager
def reporting():
    """
    Turns library errors into a one-line message and exit code 1.
    """
    try:
        yield
    except (HodgeTdlError, OSError) as err:
        typer.echo(f"Error: {err}", err=True)
        raise typer.Exit(code=1)


def parse_k0_sweep(value: Optional[str]) -> List[int]:
    if not value:
        return []
    try:
        sweep = [int(v) for v in value.replace(" ", "").split(",") if v]
    except ValueError as err:
        raise ConfigError("k0-sweep", f"expected comma separated integers: {err}")
    if any(k < 1 for k in sweep):
        raise ConfigError("k0-sweep", "every sparsity level must be at least 1")
    return sweep


@app.command()
def generate(
    config_file: Optional[str] = typer.Option(None, "--config", help="YAML config."),
    out: str = typer.Option("data", "--out", help="Output directory."),
    seed: Optional[int] = typer.Option(None, "--seed"),
    q_tr: Optional[float] = typer.Option(None, "--q-tr", help="Triangle probability."),
    n_datasets: Optional[int] = typer.Option(None, "--n-datasets"),
):
    """
    Generates synthetic datasets with a planted topology and dictionary
    """
    with reporting():
        generate_worker(config_file, out, seed, q_tr, n_datasets)


@app.command()
def train(
    dataset_dir: str,
    config_file: Optional[str] = typer.Option(None, "--config", help="YAML config."),
    out: str = typer.Option("model", "--out", help="Output directory."),
    method: Optional[str] = typer.Option(
        None, "--method", help="gtdl|rtdl|fourier|edge|joint|separated"
    ),
    seed: Optional[int] = typer.Option(None, "--seed"),
    k0: Optional[int] = typer.Option(None, "--k0"),
    gamma: Optional[float] = typer.Option(None, "--gamma"),
    lam: Optional[float] = typer.Option(None, "--lambda"),
    mu: Optional[float] = typer.Option(None, "--mu"),
    imax: Optional[int] = typer.Option(None, "--imax"),
    d: Optional[float] = typer.Option(None, "--d"),
    eps: Optional[float] = typer.Option(None, "--eps"),
):
    """
    Learns a dictionary (and topology) on the training split of every dataset
    """
    with reporting():
        train_worker(
            dataset_dir,
            out,
            config_file,
            method,
            seed,
            k0,
            gamma,
            lam,
            mu,
            imax,
            d,
            eps,
        )


@app.command()
def evaluate(
    dataset_dir: str,
    models: List[str],
    out: str = typer.Option("results", "--out", help="Output directory."),
    k0: Optional[int] = typer.Option(None, "--k0"),
    k0_sweep: Optional[str] = typer.Option(None, "--k0-sweep", help="e.g. 5,10,15"),
):
    """
    Scores learned models on the test split, sweeping the sparsity level
    """
    with reporting():
        sweep = parse_k0_sweep(k0_sweep) or ([k0] if k0 is not None else [])
        evaluate_worker(dataset_dir, models, out, sweep)


@app.command()
def ingest(
    edge_csv: str,
    edgelist: str,
    out: str = typer.Option("dataset", "--out", help="Output directory."),
    split: int = typer.Option(..., "--split", help="Number of training signals."),
    polygons: Optional[str] = typer.Option(None, "--polygons"),
    max_len: int = typer.Option(3, "--max-len", help="Longest candidate cycle."),
):
    """
    Converts an edge-signal CSV and an edge list into a dataset directory
    """
    with reporting():
        ingest_worker(edge_csv, edgelist, out, split, polygons, max_len)


@app.command()
def replay(manifest: str):
    """
    Re-runs the command recorded in a manifest
    """
    with reporting():
        replay_worker(manifest)


def _input_hash(paths: List[Optional[str]]) -> str:
    files: List[str] = []
    for path in paths:
        if path is None:
            continue
        if os.path.isdir(path):
            for root, _, names in os.walk(path):
                files.extend(os.path.join(root, n) for n in names)
        else:
            files.append(path)
    return storage.content_hash(files)


def generate_worker(
    config_file: Optional[str],
    out: str,
    seed: Optional[int] = None,
    q_tr: Optional[float] = None,
    n_datasets: Optional[int] = None,
) -> storage.RunManifest:
    """
    A worker function for generate command.

    This function is separated from generate command to allow for easier testing.
    """

    started = time.perf_counter()
    args = {
        "config_file": config_file,
        "out": out,
        "seed": seed,
        "q_tr": q_tr,
        "n_datasets": n_datasets,
    }
    cfg = config.convert_to_synth_config(
        config_file, seed=seed, q_tr=q_tr, n_datasets=n_datasets
    )
    file_keys = config.to_file_keys(cfg)
    input_hash = _input_hash([config_file])

    typer.echo(f"Generating {cfg.n_datasets} datasets (seed {cfg.seed})")
    datasets = gen_benchmark(cfg)

    outputs: List[str] = []
    for index, dataset in enumerate(datasets):
        truth = dataset.truth
        directory = os.path.join(out, f"dataset_{index:03d}")
        manifest = storage.RunManifest(
            command="generate",
            args=args,
            config=file_keys,
            seed=cfg.seed,
            input_hash=input_hash,
            split={"train": cfg.t_train, "test": cfg.t_test},
        )
        outputs += storage.write_dataset(
            directory,
            truth.complex,
            np.hstack([dataset.y_train, dataset.y_test]),
            manifest,
            storage.truth_to_dict(truth.p, truth.params, cfg.q_tr),
        )
        typer.echo(f"Wrote {directory}")

    cx = datasets[0].truth.complex
    typer.echo(
        f"Complex: {cx.n_edges} edges, {cx.n_polygons} candidate triangles, "
        f"{len(datasets[0].truth.p.active())} active"
    )

    manifest = storage.RunManifest(
        command="generate",
        args=args,
        config=file_keys,
        seed=cfg.seed,
        input_hash=input_hash,
        timings={"total": time.perf_counter() - started},
        outputs=outputs,
    )
    storage.write_manifest(os.path.join(out, FILES.MANIFEST), manifest)
    return manifest


def train_worker(
    dataset_dir: str,
    out: str,
    config_file: Optional[str] = None,
    method: Optional[str] = None,
    seed: Optional[int] = None,
    k0: Optional[int] = None,
    gamma: Optional[float] = None,
    lam: Optional[float] = None,
    mu: Optional[float] = None,
    imax: Optional[int] = None,
    d: Optional[float] = None,
    eps: Optional[float] = None,
) -> storage.RunManifest:
    """
    A worker function for train command.

    This function is separated from train command to allow for easier testing.
    """

    started = time.perf_counter()
    args = {
        "dataset_dir": dataset_dir,
        "out": out,
        "config_file": config_file,
        "method": method,
        "seed": seed,
        "k0": k0,
        "gamma": gamma,
        "lam": lam,
        "mu": mu,
        "imax": imax,
        "d": d,
        "eps": eps,
    }
    cfg = config.convert_to_learn_config(
        config_file,
        method=method,
        seed=seed,
        k0=k0,
        gamma=gamma,
        lam=lam,
        mu=mu,
        imax=imax,
        d=d,
        eps=eps,
    )

    paths = storage.list_datasets(dataset_dir)
    outputs: List[str] = []
    timings: Dict[str, float] = {}

    for path in paths:
        dataset = storage.read_dataset(path, cfg.max_len)
        target = out if len(paths) == 1 else os.path.join(out, dataset.name)
        os.makedirs(target, exist_ok=True)

        typer.echo(
            f"Training {cfg.method.value} on {dataset.name} "
            f"({dataset.y_train.shape[1]} signals)"
        )
        h_ref = dataset.truth.params if dataset.truth is not None else None
        result = learn(dataset.y_train, dataset.complex, cfg, h_ref)

        cx = dataset.complex
        model = storage.StoredModel(
            method=result.method.value,
            params=result.params,
            p=result.p,
            d=result.d,
            eps=result.eps,
            k0=cfg.k0,
            num_vertices=cx.n_vertices,
            edges=cx.skeleton.edges,
            polygons=cx.polygons.cycles,
            p_relaxed=result.p_relaxed,
        )
        model_path = os.path.join(target, FILES.MODEL)
        trace_path = os.path.join(target, FILES.TRACE)
        storage.write_model(model_path, model)
        storage.write_trace(trace_path, result.trace)
        outputs += [model_path, trace_path]

        for phase, seconds in result.timings.items():
            timings[f"{dataset.name}/{phase}"] = seconds

        typer.echo(
            f"Objective {result.final_objective:.6g}, "
            f"{len(result.p.active())} of {len(result.p)} polygons active"
        )

    timings["total"] = time.perf_counter() - started
    manifest = storage.RunManifest(
        command="train",
        args=args,
        config=config.to_file_keys(cfg),
        seed=cfg.seed,
        input_hash=_input_hash([config_file, dataset_dir]),
        timings=timings,
        outputs=outputs,
    )
    os.makedirs(out, exist_ok=True)
    storage.write_manifest(os.path.join(out, FILES.MANIFEST), manifest)
    typer.echo(f"Models written to {out}")
    return manifest


def _model_path(model: str, dataset: storage.Dataset) -> str:
    if os.path.isfile(model):
        return model
    for candidate in (
        os.path.join(model, dataset.name, FILES.MODEL),
        os.path.join(model, FILES.MODEL),
    ):
        if os.path.isfile(candidate):
            return candidate
    raise DatasetError(f"no model for {dataset.name} under {model}")


def evaluate_dataset(
    dataset: storage.Dataset, model: storage.StoredModel, k0_sweep: List[int]
) -> List[metrics.EvalReport]:
    """
    NMSE on the test split for every sparsity level, with topology metrics
    whenever the dataset carries its planted truth.
    """

    cx = model.complex()
    if cx.skeleton.edges != dataset.complex.skeleton.edges:
        raise DatasetError(
            f"model has {cx.n_edges} edges, dataset {dataset.name} has "
            f"{dataset.complex.n_edges}; they do not describe the same complex"
        )

    Y = dataset.y_test
    if Y.shape[1] == 0:
        raise DatasetError(f"dataset {dataset.name} has no test signals")

    matrix = dictionary_matrix(model.method, model.params, model.p, cx)

    error_rate = laplacian_error = None
    if dataset.truth is not None and len(dataset.truth.p) == len(model.p):
        error_rate = metrics.topology_error_rate(dataset.truth.p, model.p)
        laplacian_error = metrics.laplacian_nmse(
            hodge_pair(dataset.complex, dataset.truth.p).l_up,
            hodge_pair(cx, model.p).l_up,
        )

    reports = []
    for k0 in k0_sweep or [model.k0]:
        code = sparse_code(matrix, Y, k0)
        Y_hat = matrix @ code.s
        errors = metrics.per_signal_nmse(Y, Y_hat)
        reports.append(
            metrics.EvalReport(
                method=model.method,
                k0=k0,
                nmse=metrics.nmse(Y, Y_hat),
                per_signal=tuple(float(e) for e in errors),
                error_rate=error_rate,
                laplacian_nmse=laplacian_error,
            )
        )
    return reports


def evaluate_worker(
    dataset_dir: str, models: List[str], out: str, k0_sweep: List[int]
) -> storage.RunManifest:
    """
    A worker function for evaluate command.

    This function is separated from evaluate command to allow for easier testing.
    """

    started = time.perf_counter()
    args = {
        "dataset_dir": dataset_dir,
        "models": list(models),
        "out": out,
        "k0_sweep": list(k0_sweep),
    }
    if not models:
        raise ConfigError("models", "at least one model is required")

    datasets = [storage.read_dataset(p) for p in storage.list_datasets(dataset_dir)]
    rows = []

    for model_arg in models:
        grouped: Dict[int, List[metrics.EvalReport]] = {}
        method = None

        for dataset in datasets:
            model = storage.read_model(_model_path(model_arg, dataset))
            method = model.method
            for report in evaluate_dataset(dataset, model, k0_sweep):
                grouped.setdefault(report.k0, []).append(report)

        for k0, reports in grouped.items():
            row = {"method": method, "k0": k0}
            row.update(metrics.aggregate(reports))
            rows.append(row)
            typer.echo(
                f"{method} k0={k0}: NMSE {row['nmse_mean']:.4g} "
                f"(+/- {row['nmse_std']:.2g}) over {row['count']} datasets"
            )

    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, FILES.RESULTS_CSV)
    json_path = os.path.join(out, FILES.RESULTS_JSON)
    storage.write_results(csv_path, json_path, rows)

    manifest = storage.RunManifest(
        command="evaluate",
        args=args,
        input_hash=_input_hash([dataset_dir, *models]),
        timings={"total": time.perf_counter() - started},
        outputs=[csv_path, json_path],
    )
    storage.write_manifest(os.path.join(out, FILES.MANIFEST), manifest)
    typer.echo(f"Results written to {out}")
    return manifest


def ingest_worker(
    edge_csv: str,
    edgelist: str,
    out: str,
    split: int,
    polygons: Optional[str] = None,
    max_len: int = 3,
) -> storage.RunManifest:
    """
    A worker function for ingest command.

    Rows of the CSV follow the order and orientation of the edge list; they
    are reordered and re-signed to the canonical low -> high edge orientation.
    """

    started = time.perf_counter()
    args = {
        "edge_csv": edge_csv,
        "edgelist": edgelist,
        "out": out,
        "split": split,
        "polygons": polygons,
        "max_len": max_len,
    }

    num_vertices, edges = storage.read_edges(edgelist)
    sk = build_skeleton(num_vertices, edges)
    if polygons is not None:
        candidates = polygons_from_cycles(sk, storage.read_polygons(polygons))
    else:
        candidates = enumerate_polygons(sk, max_len)
    cx = incidence_matrices(sk, candidates)

    Y = storage.read_signals(edge_csv)
    if Y.shape[0] != len(edges):
        raise DatasetError(
            f"{edge_csv} has {Y.shape[0]} rows but {edgelist} lists {len(edges)} edges"
        )

    if not 0 < split <= Y.shape[1]:
        raise ConfigError("split", f"must lie in [1, {Y.shape[1]}], got {split}")

    ordered = np.empty_like(Y)
    for row, (u, v) in enumerate(edges):
        index, sign = sk.oriented_index(u, v)
        ordered[index] = sign * Y[row]

    manifest = storage.RunManifest(
        command="ingest",
        args=args,
        input_hash=_input_hash([edge_csv, edgelist, polygons]),
        split={"train": split, "test": Y.shape[1] - split},
    )
    outputs = storage.write_dataset(out, cx, ordered, manifest)
    manifest.outputs = outputs
    manifest.timings = {"total": time.perf_counter() - started}
    storage.write_manifest(os.path.join(out, FILES.MANIFEST), manifest)

    typer.echo(
        f"Ingested {Y.shape[1]} signals on {cx.n_edges} edges "
        f"({split} train, {Y.shape[1] - split} test), "
        f"{cx.n_polygons} candidate polygons"
    )
    return manifest


WORKERS = {
    "generate": generate_worker,
    "train": train_worker,
    "evaluate": evaluate_worker,
    "ingest": ingest_worker,
}


def replay_worker(manifest_path: str) -> storage.RunManifest:
    manifest = storage.read_manifest(manifest_path)
    worker = WORKERS.get(manifest.command)
    if worker is None:
        raise DatasetError(f"cannot replay unknown command '{manifest.command}'")

    typer.echo(f"Replaying {manifest.command} from {manifest_path}")
    return worker(**manifest.args)


if __name__ == "__main__":
    app()
