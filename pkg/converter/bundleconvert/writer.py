"""Bundle directory writer.

Produces the directory layout the analysis CLI ingests:

    meta.json       {"n": ..., "d": ..., "c": ..., "name": ...}
    edges.tsv       canonical undirected edges, "u<TAB>v", u < v, sorted
    features.f32    row-major little-endian float32 (default), or
    features.tsv    full-precision text when requested
    labels.tsv      one integer class id per line
    split.tsv       one of train/val/test/none per line

Output is byte-deterministic for a given graph: re-running a conversion
over identical upstream artifacts yields identical bundles.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .graph import ConvertError, RawGraph, canonicalize_edges


def write_bundle(g: RawGraph, out_dir: str | Path, name: str,
                 features_format: str = "f32") -> dict:
    """Write the bundle; returns the summary the CLI prints."""
    if not g.has_public_split():
        raise ConvertError("graph has no split masks; assign one first")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n, d, c = g.n, g.d, g.c
    edges = canonicalize_edges(g.edges, n)

    meta = {"n": n, "d": d, "c": c, "name": name}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")

    with open(out / "edges.tsv", "w") as fh:
        for u, v in edges:
            fh.write(f"{u}\t{v}\n")

    if features_format == "f32":
        np.asarray(g.x).astype("<f4").tofile(out / "features.f32")
        (out / "features.tsv").unlink(missing_ok=True)
    elif features_format == "tsv":
        np.savetxt(out / "features.tsv", g.x, fmt="%.17g", delimiter="\t")
        (out / "features.f32").unlink(missing_ok=True)
    else:
        raise ConvertError(f"unknown features format {features_format!r}")

    np.savetxt(out / "labels.tsv", g.y, fmt="%d")

    tokens = np.full(n, "none", dtype=object)
    tokens[g.train_mask] = "train"
    tokens[g.val_mask] = "val"
    tokens[g.test_mask] = "test"
    (out / "split.tsv").write_text("\n".join(tokens) + "\n")

    return {
        "name": name,
        "out": str(out),
        "n": n,
        "d": d,
        "c": c,
        "edges_written": int(edges.shape[0]),
        "raw_edge_rows": int(np.asarray(g.edges).reshape(-1, 2).shape[0]),
        "split_sizes": {
            "train": int(g.train_mask.sum()),
            "val": int(g.val_mask.sum()),
            "test": int(g.test_mask.sum()),
        },
        "features_format": features_format,
    }
