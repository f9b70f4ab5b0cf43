"""
Testing the commands in __main__.py
"""

import csv
import os

import numpy as np
import pytest
from typer.testing import CliRunner

from hodge_tdl import storage
from hodge_tdl.__main__ import (
    app,
    generate_worker,
    ingest_worker,
    parse_k0_sweep,
    replay_worker,
)
from hodge_tdl.constants import FILES
from hodge_tdl.exceptions import ConfigError

runner = CliRunner()

SYNTH_FILE = "tests/files/synth_small.yml"
LEARN_FILE = "tests/files/learn_small.yml"


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    """
    Return a directory holding two small synthetic datasets
    """

    out = str(tmp_path_factory.mktemp("generated"))
    result = runner.invoke(app, ["generate", "--config", SYNTH_FILE, "--out", out])
    assert result.exit_code == 0, result.output
    return out


def _read(path):
    with open(path, "rb") as stream:
        return stream.read()


def test_app():
    directory = "Not A Dir"
    result = runner.invoke(app, ["train", directory])

    # the dataset directory does not exist
    assert result.exit_code == 1, result.output
    assert "Error" in result.output, result.output
    assert directory in result.output, result.output


def test_generate(generated):
    names = sorted(os.listdir(generated))
    assert names == ["dataset_000", "dataset_001", FILES.MANIFEST]

    dataset = storage.read_dataset(os.path.join(generated, "dataset_000"))
    assert dataset.y_train.shape == (14, 20)
    assert dataset.y_test.shape == (14, 10)
    assert dataset.truth is not None

    manifest = storage.read_manifest(os.path.join(generated, FILES.MANIFEST))
    assert manifest.command == "generate"
    assert manifest.seed == 1
    assert manifest.config["nVertices"] == 8
    assert len(manifest.outputs) == 8


def test_generate_worker(tmp_path, capsys):
    out = str(tmp_path / "data")
    generate_worker(SYNTH_FILE, out, n_datasets=1)

    captured = capsys.readouterr()
    assert "Generating 1 datasets (seed 1)" in captured.out, captured.out
    assert f"Wrote {os.path.join(out, 'dataset_000')}" in captured.out, captured.out
    assert "Complex: 14 edges" in captured.out, captured.out


def test_generate_is_deterministic(tmp_path, generated):
    out = str(tmp_path / "again")
    result = runner.invoke(app, ["generate", "--config", SYNTH_FILE, "--out", out])
    assert result.exit_code == 0, result.output

    for name in ("dataset_000", "dataset_001"):
        for file in (FILES.SIGNALS, FILES.EDGES, FILES.POLYGONS, FILES.TRUTH):
            assert _read(os.path.join(out, name, file)) == _read(
                os.path.join(generated, name, file)
            ), file


def test_replay(tmp_path):
    out = str(tmp_path / "replayed")
    generate_worker(SYNTH_FILE, out, seed=4, n_datasets=1)
    signals = os.path.join(out, "dataset_000", FILES.SIGNALS)
    before = _read(signals)
    os.remove(signals)

    result = runner.invoke(app, ["replay", os.path.join(out, FILES.MANIFEST)])
    assert result.exit_code == 0, result.output
    assert "Replaying generate" in result.output
    assert _read(signals) == before

    manifest = replay_worker(os.path.join(out, FILES.MANIFEST))
    assert manifest.seed == 4


@pytest.mark.parametrize("method", ["fourier", "gtdl"])
def test_train_and_evaluate(tmp_path, generated, method):
    models = str(tmp_path / "models")
    result = runner.invoke(
        app,
        [
            "train",
            generated,
            "--config",
            LEARN_FILE,
            "--method",
            method,
            "--out",
            models,
        ],
    )
    assert result.exit_code == 0, result.output
    assert f"Training {method} on dataset_000" in result.output
    assert "Models written to" in result.output

    for name in ("dataset_000", "dataset_001"):
        model = storage.read_model(os.path.join(models, name, FILES.MODEL))
        assert model.method == method
        trace = storage.read_trace(os.path.join(models, name, FILES.TRACE))
        assert trace

    results = str(tmp_path / "results")
    result = runner.invoke(
        app, ["evaluate", generated, models, "--k0-sweep", "1,2", "--out", results]
    )
    assert result.exit_code == 0, result.output
    assert f"{method} k0=1: NMSE" in result.output
    assert "Results written to" in result.output

    with open(os.path.join(results, FILES.RESULTS_CSV), encoding="utf-8") as stream:
        rows = list(csv.DictReader(stream))
    assert [(row["method"], row["k0"]) for row in rows] == [
        (method, "1"),
        (method, "2"),
    ]
    assert all(row["count"] == "2" for row in rows)
    assert all(0 <= float(row["error_rate_mean"]) <= 1 for row in rows)


def test_evaluate_rejects_a_foreign_model(tmp_path, generated):
    models = str(tmp_path / "models")
    result = runner.invoke(
        app, ["train", generated, "--method", "fourier", "--k0", "2", "--out", models]
    )
    assert result.exit_code == 0, result.output

    other = str(tmp_path / "other")
    edge_csv, edgelist = _ingest_inputs(tmp_path)
    ingest_worker(edge_csv, edgelist, other, split=1)
    model = os.path.join(models, "dataset_000", FILES.MODEL)

    result = runner.invoke(app, ["evaluate", other, model, "--out", str(tmp_path)])
    assert result.exit_code == 1, result.output
    assert "do not describe the same complex" in result.output


def _ingest_inputs(tmp_path):
    edge_csv = tmp_path / "signals_in.csv"
    edge_csv.write_text("1,2\n3,4\n5,6\n", encoding="utf-8")
    edgelist = tmp_path / "edges_in.txt"
    edgelist.write_text("1 0\n1 2\n0 2\n", encoding="utf-8")
    return str(edge_csv), str(edgelist)


def test_ingest(tmp_path):
    edge_csv, edgelist = _ingest_inputs(tmp_path)
    out = str(tmp_path / "ingested")

    result = runner.invoke(
        app, ["ingest", edge_csv, edgelist, "--out", out, "--split", "1"]
    )
    assert result.exit_code == 0, result.output
    assert "Ingested 2 signals on 3 edges" in result.output

    dataset = storage.read_dataset(out)
    # rows reordered to (0, 1), (0, 2), (1, 2) and flipped where reversed
    np.testing.assert_array_equal(dataset.Y, [[-1, -2], [5, 6], [3, 4]])
    assert dataset.complex.n_polygons == 1
    assert dataset.n_train == 1
    assert dataset.truth is None


def test_ingest_rejects_bad_inputs(tmp_path):
    edge_csv, edgelist = _ingest_inputs(tmp_path)
    short = tmp_path / "short.csv"
    short.write_text("1,2\n3,4\n", encoding="utf-8")

    result = runner.invoke(
        app, ["ingest", str(short), edgelist, "--out", str(tmp_path), "--split", "1"]
    )
    assert result.exit_code == 1, result.output
    assert "2 rows" in result.output

    with pytest.raises(ConfigError):
        ingest_worker(edge_csv, edgelist, str(tmp_path / "x"), split=3)


def test_parse_k0_sweep():
    assert parse_k0_sweep("5, 10,15") == [5, 10, 15]
    assert parse_k0_sweep(None) == []

    for bad in ("1,x", "0,2"):
        with pytest.raises(ConfigError):
            parse_k0_sweep(bad)
