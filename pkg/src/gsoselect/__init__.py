"""Training-free graph shift operator selection.

Given a node-classified graph, this package scores candidate shift operators
(adjacency, Laplacians, normalized variants, ...) by how well their diffused
features spectrally align with the label structure, without training a model.
The score is the largest generalized eigenvalue of the pencil formed by the
label Laplacian and a k-NN Laplacian built on the (diffused) features; lower
means better aligned. A small from-scratch GNN stack is included to train and
evaluate the selected operators.
"""

from .bundle import (BundleFormatError, GraphBundle, SbmConfig, generate_sbm,
                     load_bundle, make_bundle, save_bundle, validate_bundle)
from .gnn import (GnnModel, TrainConfig, bjorck_orthonormalize, load_model,
                  make_gcn, msd_o_select_and_train, save_model, train)
from .gso import GSO_KINDS, GsoLibrary, build_gso, diffuse
from .manifold import ManifoldConfig, build_knn_laplacian
from .msd import (MsdConfig, alignment_gain, compute_msd, msd_on_bundle,
                  rank_gsos, spearman, stability_experiment)

__all__ = [
    "BundleFormatError",
    "GSO_KINDS",
    "GnnModel",
    "GraphBundle",
    "GsoLibrary",
    "ManifoldConfig",
    "MsdConfig",
    "SbmConfig",
    "TrainConfig",
    "alignment_gain",
    "bjorck_orthonormalize",
    "build_gso",
    "build_knn_laplacian",
    "compute_msd",
    "diffuse",
    "generate_sbm",
    "load_bundle",
    "load_model",
    "make_bundle",
    "make_gcn",
    "msd_o_select_and_train",
    "msd_on_bundle",
    "rank_gsos",
    "save_bundle",
    "save_model",
    "spearman",
    "stability_experiment",
    "train",
    "validate_bundle",
]

__version__ = "0.1.0"
