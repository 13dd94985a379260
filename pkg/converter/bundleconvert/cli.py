"""Command-line conversion pipeline.

    convert.py --dataset NAME --out DIR [--split random:0.6:0.2:SEED]
               [--cache-dir DIR] [--features-format {f32,tsv}]

Artifacts are fetched into the cache directory (or read from it when
already present, which is the offline path), parsed, canonicalized, split,
and written as a bundle directory.  A JSON summary goes to stdout; it
includes the published reference counts and whether the conversion matched
them.  Exit codes: 0 success, 1 user/config/conversion error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import arxivyear, npzgraph, planetoid, webkb
from .fetch import ensure_artifact
from .graph import ConvertError, RawGraph, random_split
from .registry import DATASETS

DEFAULT_RANDOM_SPLIT = (0.6, 0.2, 0)  # for datasets without a public split

PARSERS = {
    "planetoid": planetoid.parse,
    "webkb": webkb.parse,
    "npz": npzgraph.parse,
    "arxiv-year": arxivyear.parse,
}


def parse_split_policy(text: str) -> tuple[float, float, int] | None:
    """None means public; otherwise (train_frac, val_frac, seed)."""
    if text == "public":
        return None
    parts = text.split(":")
    if len(parts) != 4 or parts[0] != "random":
        raise ConvertError(
            f"bad --split {text!r}: expected 'public' or "
            f"'random:TRAIN:VAL:SEED'")
    try:
        train_frac, val_frac = float(parts[1]), float(parts[2])
        seed = int(parts[3])
    except ValueError as exc:
        raise ConvertError(f"bad --split {text!r}: {exc}") from exc
    return train_frac, val_frac, seed


def convert(dataset: str, out_dir: Path, cache_dir: Path,
            split: str = "public", features_format: str = "f32") -> dict:
    key = dataset.lower()
    if key not in DATASETS:
        raise ConvertError(f"unknown dataset {dataset!r}; supported: "
                           + ", ".join(sorted(DATASETS)))
    entry = DATASETS[key]
    policy = parse_split_policy(split)

    cache = {art.filename: ensure_artifact(cache_dir, art)
             for art in entry.artifacts}
    graph: RawGraph = PARSERS[entry.parser](cache, **entry.parser_args)

    split_used = split
    if policy is None and not graph.has_public_split():
        # documented fallback: these distributions ship no split
        tf, vf, seed = DEFAULT_RANDOM_SPLIT
        split_used = f"random:{tf}:{vf}:{seed}"
        print(f"note: {key} ships no public split; using {split_used}",
              file=sys.stderr)
        policy = DEFAULT_RANDOM_SPLIT
    if policy is not None:
        masks = random_split(graph.n, *policy)
        graph.train_mask, graph.val_mask, graph.test_mask = masks

    summary = write_bundle_checked(graph, out_dir, entry, features_format)
    summary["split"] = split_used
    return summary


def write_bundle_checked(graph: RawGraph, out_dir: Path, entry,
                         features_format: str) -> dict:
    from .writer import write_bundle
    summary = write_bundle(graph, out_dir, entry.name, features_format)
    expected = entry.expected()
    summary["expected"] = expected
    summary["matches_expected"] = (
        summary["n"] == expected["n"]
        and summary["d"] == expected["d"]
        and summary["c"] == expected["c"])
    return summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="convert.py",
        description="Export a public benchmark as a graph bundle directory.")
    p.add_argument("--dataset", required=True,
                   help="one of: " + ", ".join(sorted(DATASETS)))
    p.add_argument("--out", required=True, help="bundle directory to write")
    p.add_argument("--split", default="public",
                   help="'public' (default) or 'random:TRAIN:VAL:SEED'")
    p.add_argument("--cache-dir", default="raw-cache",
                   help="directory for downloaded artifacts (default: "
                        "./raw-cache); pre-populate it to convert offline")
    p.add_argument("--features-format", choices=("f32", "tsv"),
                   default="f32")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        summary = convert(args.dataset, Path(args.out), Path(args.cache_dir),
                          args.split, args.features_format)
    except ConvertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
