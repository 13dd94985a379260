"""Supported datasets: artifact lists, parser dispatch, reference counts.

Reference (n, d, c) are the published statistics for each benchmark; the
converter reports whether a converted bundle matches them.  raw_edges is the
edge count as distributed (directed or duplicated) and is informational
only — canonical undirected deduplication may legitimately differ.

Checksums are optional: entries ship with sha256=None because the upstream
distributions do not publish stable digests; pin them per mirror if you
need tamper detection (fetch verifies any pinned value).
"""

from __future__ import annotations

from dataclasses import dataclass, field

PLANETOID_BASE = "https://github.com/kimiyoung/planetoid/raw/master/data"
GEOMGCN_BASE = ("https://raw.githubusercontent.com/graphdml-uiuc-jlu/"
                "geom-gcn/master")
NPZ_BASE = "https://github.com/shchur/gnn-benchmark/raw/master/data/npz"
OGB_ARXIV_URL = "https://snap.stanford.edu/ogb/data/nodeproppred/arxiv.zip"

PLANETOID_SUFFIXES = ("x", "y", "tx", "ty", "allx", "ally", "graph",
                      "test.index")


@dataclass(frozen=True)
class Artifact:
    filename: str                   # name inside the cache directory
    url: str
    sha256: str | None = None


@dataclass(frozen=True)
class DatasetEntry:
    name: str                       # canonical lowercase key
    parser: str                     # "planetoid" | "webkb" | "npz" | "arxiv-year"
    artifacts: tuple[Artifact, ...]
    n: int
    raw_edges: int
    d: int
    c: int
    parser_args: dict = field(default_factory=dict)

    def expected(self) -> dict:
        return {"n": self.n, "d": self.d, "c": self.c,
                "raw_edges": self.raw_edges}


def _planetoid(name: str, n: int, raw_edges: int, d: int, c: int) -> DatasetEntry:
    arts = tuple(Artifact(f"ind.{name}.{s}", f"{PLANETOID_BASE}/ind.{name}.{s}")
                 for s in PLANETOID_SUFFIXES)
    return DatasetEntry(name, "planetoid", arts, n, raw_edges, d, c,
                        parser_args={"name": name})


def _webkb(name: str, n: int, raw_edges: int, d: int, c: int) -> DatasetEntry:
    cap = name.capitalize()
    arts = (
        Artifact(f"{name}_edges.txt",
                 f"{GEOMGCN_BASE}/new_data/{cap}/out1_graph_edges.txt"),
        Artifact(f"{name}_features_labels.txt",
                 f"{GEOMGCN_BASE}/new_data/{cap}/out1_node_feature_label.txt"),
        Artifact(f"{name}_split_0.npz",
                 f"{GEOMGCN_BASE}/splits/{name}_split_0.6_0.2_0.npz"),
    )
    return DatasetEntry(name, "webkb", arts, n, raw_edges, d, c,
                        parser_args={"name": name})


def _npz(name: str, filename: str, n: int, raw_edges: int, d: int,
         c: int) -> DatasetEntry:
    arts = (Artifact(filename, f"{NPZ_BASE}/{filename}"),)
    return DatasetEntry(name, "npz", arts, n, raw_edges, d, c,
                        parser_args={"filename": filename})


DATASETS: dict[str, DatasetEntry] = {e.name: e for e in (
    _planetoid("cora", 2708, 5429, 1433, 7),
    _planetoid("citeseer", 3327, 4732, 3703, 6),
    _planetoid("pubmed", 19717, 44338, 500, 3),
    _webkb("cornell", 183, 295, 1703, 5),
    _webkb("wisconsin", 251, 499, 1703, 5),
    _npz("computers", "amazon_electronics_computers.npz",
         13752, 245866, 767, 10),
    _npz("cs", "ms_academic_cs.npz", 18333, 81894, 6805, 15),
    _npz("physics", "ms_academic_phy.npz", 34493, 495924, 8415, 5),
    DatasetEntry("arxiv-year", "arxiv-year",
                 (Artifact("arxiv.zip", OGB_ARXIV_URL),),
                 169343, 1157799, 128, 5),
)}
