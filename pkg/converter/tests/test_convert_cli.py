"""End-to-end conversion runs on pre-populated caches (no network)."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from bundleconvert.cli import convert, main, parse_split_policy
from bundleconvert.graph import ConvertError

from fixtures import write_arxiv_zip, write_npz, write_planetoid, write_webkb

CONVERT_PY = Path(__file__).resolve().parents[1] / "convert.py"


def read_bundle_files(path: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def run_ingest(bundle_dir: Path) -> dict:
    proc = subprocess.run(
        [sys.executable, "-m", "gsoselect.cli", "ingest",
         "--bundle", str(bundle_dir)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)


def test_split_policy_parsing():
    assert parse_split_policy("public") is None
    assert parse_split_policy("random:0.6:0.2:5") == (0.6, 0.2, 5)
    for bad in ("random:0.6:0.2", "fixed:1:2:3", "random:a:b:0"):
        with pytest.raises(ConvertError):
            parse_split_policy(bad)


def test_webkb_conversion_ingested_by_analysis_cli(tmp_path):
    cache, out = tmp_path / "cache", tmp_path / "bundle"
    cache.mkdir()
    info = write_webkb(cache, "cornell")
    summary = convert("cornell", out, cache)
    assert summary["n"] == info["n"] and summary["c"] == info["c"]
    assert summary["split"] == "public"
    assert summary["edges_written"] == 5          # reverse duplicate merged
    assert summary["matches_expected"] is False   # fixture, not the real set
    report = run_ingest(out)
    diag = report["diagnostics"]
    assert (diag["n"], diag["d"], diag["c"]) == (info["n"], info["d"],
                                                 info["c"])
    assert diag["edges"] == 5
    assert diag["split_sizes"] == {"train": 2, "val": 2, "test": 2,
                                   "none": 0}


def test_planetoid_conversion_and_feature_precision(tmp_path):
    cache, out = tmp_path / "cache", tmp_path / "bundle"
    cache.mkdir()
    info = write_planetoid(cache, "cora")
    summary = convert("cora", out, cache, features_format="tsv")
    assert summary["n"] == info["n"]
    assert (out / "features.tsv").exists()
    report = run_ingest(out)
    assert report["diagnostics"]["class_counts"] == np.bincount(
        info["labels"]).tolist()


def test_conversion_is_deterministic(tmp_path):
    cache = tmp_path / "cache"
    cache.mkdir()
    write_npz(cache)
    out1, out2 = tmp_path / "b1", tmp_path / "b2"
    convert("computers", out1, cache, split="random:0.5:0.25:3")
    convert("computers", out2, cache, split="random:0.5:0.25:3")
    assert read_bundle_files(out1) == read_bundle_files(out2)


def test_dataset_without_public_split_falls_back(tmp_path, capsys):
    cache, out = tmp_path / "cache", tmp_path / "bundle"
    cache.mkdir()
    write_npz(cache)
    summary = convert("computers", out, cache)
    assert summary["split"] == "random:0.6:0.2:0"
    sizes = summary["split_sizes"]
    assert sizes["train"] + sizes["val"] + sizes["test"] == summary["n"]
    err = capsys.readouterr().err
    assert "ships no public split" in err


def test_arxiv_conversion_builds_five_classes(tmp_path):
    cache, out = tmp_path / "cache", tmp_path / "bundle"
    cache.mkdir()
    write_arxiv_zip(cache)
    summary = convert("arxiv-year", out, cache,
                      split="random:0.5:0.25:0")
    assert summary["c"] == 5
    report = run_ingest(out)
    assert report["diagnostics"]["class_counts"] == [2, 2, 2, 2, 2]


def test_cli_reports_unknown_dataset(tmp_path, capsys):
    rc = main(["--dataset", "nonexistent", "--out", str(tmp_path / "o"),
               "--cache-dir", str(tmp_path)])
    assert rc == 1
    assert "unknown dataset" in capsys.readouterr().err


def test_cli_reports_bad_split_fractions(tmp_path, capsys):
    cache = tmp_path / "cache"
    cache.mkdir()
    write_webkb(cache, "cornell")
    rc = main(["--dataset", "cornell", "--out", str(tmp_path / "o"),
               "--cache-dir", str(cache), "--split", "random:0.9:0.2:0"])
    assert rc == 1
    assert "split fractions" in capsys.readouterr().err


def test_cli_missing_required_flag_exits_nonzero(capsys):
    assert main(["--dataset", "cora"]) == 1
    capsys.readouterr()


def test_convert_script_end_to_end(tmp_path):
    cache, out = tmp_path / "cache", tmp_path / "bundle"
    cache.mkdir()
    write_webkb(cache, "wisconsin")
    proc = subprocess.run(
        [sys.executable, str(CONVERT_PY), "--dataset", "wisconsin",
         "--out", str(out), "--cache-dir", str(cache)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    summary = json.loads(proc.stdout)
    assert summary["name"] == "wisconsin"
    assert (out / "meta.json").exists()
    assert (out / "features.f32").exists()
