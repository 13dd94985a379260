"""From-scratch GNN stack with orthonormal weights.

A model is a list of layers H -> act(S H W~): S is a cached shift operator
(or the identity for plain linear heads), W~ the Björck-orthonormalized
weight, act a ReLU on all but the last layer. The head is log-softmax +
negative log-likelihood on masked nodes. Everything - orthonormalization,
backprop (including through the unrolled Björck iterations), Adam - is
implemented directly on numpy arrays so gradients can be audited against
finite differences.

Orthonormalization starts from W / ||W||_F (spectral norm <= 1) and iterates
W <- W (I + (I - W'W)/2); fan-in < fan-out flips to row orthonormalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bundle import GraphBundle
from .gso import IDENTITY, GsoLibrary
from .msd import MsdConfig, MsdReport, rank_gsos
from .sparselin import NumericalError, SparseMatrix


# ---------------------------------------------------------------------------
# Björck orthonormalization, forward and adjoint
# ---------------------------------------------------------------------------

def bjorck_forward(w: np.ndarray, iters: int = 10,
                   normalize: bool = True) -> tuple[np.ndarray, dict]:
    """Orthonormalize columns (rows when d_in < d_out); returns (W~, cache).

    The cache holds every iterate so the exact unrolled computation can be
    differentiated by bjorck_backward.
    """
    w = np.asarray(w, dtype=np.float64)
    transposed = w.shape[0] < w.shape[1]
    wk = w.T if transposed else w
    cache = {"transposed": transposed, "normalize": normalize, "w_start": wk}
    if normalize:
        norm = float(np.linalg.norm(wk))
        if norm == 0.0:
            raise NumericalError("cannot orthonormalize an all-zero matrix")
        cache["norm"] = norm
        wk = wk / norm
    iterates = []
    for _ in range(iters):
        iterates.append(wk)
        wk = 1.5 * wk - 0.5 * (wk @ (wk.T @ wk))
    cache["iterates"] = iterates
    return (wk.T if transposed else wk), cache


def bjorck_backward(cache: dict, grad: np.ndarray) -> np.ndarray:
    """Adjoint of bjorck_forward: dL/dW from dL/dW~."""
    g = np.asarray(grad, dtype=np.float64)
    if cache["transposed"]:
        g = g.T
    for wk in reversed(cache["iterates"]):
        # f(W) = 1.5 W - 0.5 W W'W;  f'* applied to g:
        g = 1.5 * g - 0.5 * (g @ (wk.T @ wk) + wk @ (g.T @ wk)
                             + wk @ (wk.T @ g))
    if cache["normalize"]:
        w0, n = cache["w_start"], cache["norm"]
        g = g / n - (float(np.sum(g * w0)) / n ** 3) * w0
    return g.T if cache["transposed"] else g


def bjorck_orthonormalize(w: np.ndarray, iters: int = 10,
                          normalize: bool = True) -> np.ndarray:
    return bjorck_forward(w, iters, normalize)[0]


def orthogonality_error(w_tilde: np.ndarray) -> float:
    """||W~'W~ - I||_F over the smaller dimension."""
    if w_tilde.shape[0] < w_tilde.shape[1]:
        w_tilde = w_tilde.T
    gram = w_tilde.T @ w_tilde
    return float(np.linalg.norm(gram - np.eye(gram.shape[0])))


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

@dataclass
class Layer:
    gso: str                  # GSO kind, or "identity" for a plain linear map
    w: np.ndarray             # (d_in, d_out) raw weights
    orthonormal: bool = True
    relu: bool = True


@dataclass
class GnnModel:
    layers: list[Layer]
    bjorck_iters: int = 10
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def kinds(self) -> list[str]:
        return [lay.gso for lay in self.layers]


def _init_weight(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(d_in)
    return rng.uniform(-bound, bound, size=(d_in, d_out))


def make_phase_model(kind: str, d_in: int, n_classes: int, hidden: int,
                     seed: int, layer_index: int = 0, orthogonal: bool = True,
                     bjorck_iters: int = 10) -> GnnModel:
    """One GSO layer (d_in -> hidden, ReLU) plus a linear readout head."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, layer_index]))
    return GnnModel(
        layers=[Layer(kind, _init_weight(rng, d_in, hidden), orthogonal, True),
                Layer(IDENTITY, _init_weight(rng, hidden, n_classes),
                      False, False)],
        bjorck_iters=bjorck_iters, seed=seed)


def make_gcn(kinds, d_in: int, n_classes: int, hidden: int, seed: int,
             orthogonal: bool = True, bjorck_iters: int = 10) -> GnnModel:
    """Conventional stack: d -> hidden -> ... -> c, ReLU between GSO layers."""
    kinds = list(kinds)
    dims = [d_in] + [hidden] * (len(kinds) - 1) + [n_classes]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    layers = [Layer(kind, _init_weight(rng, dims[i], dims[i + 1]), orthogonal,
                    relu=(i + 1 < len(kinds)))
              for i, kind in enumerate(kinds)]
    return GnnModel(layers=layers, bjorck_iters=bjorck_iters, seed=seed)


def _resolve(smap, kind: str) -> SparseMatrix | None:
    if kind == IDENTITY:
        return None
    return smap.get(kind)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def forward(model: GnnModel, smap, x: np.ndarray,
            with_cache: bool = False):
    """Log-probabilities for every node; optionally the backprop cache."""
    h = np.asarray(x, dtype=np.float64)
    caches = []
    for lay in model.layers:
        s = _resolve(smap, lay.gso)
        m = h if s is None else s.matmat(h)
        if lay.orthonormal:
            w_tilde, bj = bjorck_forward(lay.w, model.bjorck_iters)
        else:
            w_tilde, bj = lay.w, None
        z = m @ w_tilde
        if with_cache:
            caches.append({"s": s, "m": m, "w_tilde": w_tilde, "bj": bj, "z": z})
        h = np.maximum(z, 0.0) if lay.relu else z
    if not np.isfinite(h).all():
        raise NumericalError("non-finite activations in forward pass")
    logp = _log_softmax(h)
    return (logp, caches) if with_cache else logp


def loss_and_grads(model: GnnModel, smap, x: np.ndarray, y: np.ndarray,
                   mask: np.ndarray, weight_decay: float = 0.0):
    """Masked NLL and dLoss/dW per layer (weight decay added to gradients).

    The returned loss is the data term only; the decay term enters the
    gradients as weight_decay * W on each raw weight.
    """
    logp, caches = forward(model, smap, x, with_cache=True)
    rows = np.flatnonzero(np.asarray(mask))
    if rows.size == 0:
        raise ValueError("empty mask")
    y = np.asarray(y, dtype=np.int64)
    loss = float(-logp[rows, y[rows]].mean())

    g = np.zeros_like(logp)
    g[rows] = np.exp(logp[rows])
    g[rows, y[rows]] -= 1.0
    g[rows] /= rows.size

    grads: list[np.ndarray] = [None] * len(model.layers)  # type: ignore
    for i in reversed(range(len(model.layers))):
        lay, cache = model.layers[i], caches[i]
        if lay.relu:
            g = g * (cache["z"] > 0.0)
        dw_tilde = cache["m"].T @ g
        g = g @ cache["w_tilde"].T
        if cache["s"] is not None:
            g = cache["s"].rmatmat(g)
        dw = bjorck_backward(cache["bj"], dw_tilde) if lay.orthonormal \
            else dw_tilde
        if weight_decay:
            dw = dw + weight_decay * lay.w
        grads[i] = dw
    return loss, grads


def accuracy(model: GnnModel, smap, x: np.ndarray, y: np.ndarray,
             mask: np.ndarray) -> float:
    logp = forward(model, smap, x)
    rows = np.flatnonzero(np.asarray(mask))
    pred = logp[rows].argmax(axis=1)       # argmax ties resolve to lowest class
    return float((pred == np.asarray(y)[rows]).mean())


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 200
    patience: int = 20
    seed: int = 0
    hidden: int = 64
    bjorck_iters: int = 10
    orthogonal: bool = True


@dataclass
class TrainResult:
    history: list[dict]
    best_epoch: int
    best_val_acc: float
    epochs_run: int


def train(model: GnnModel, smap, x: np.ndarray, y: np.ndarray,
          train_mask: np.ndarray, val_mask: np.ndarray,
          cfg: TrainConfig) -> TrainResult:
    """Full-batch Adam with early stopping on validation accuracy.

    Tracks the best validation accuracy (strict improvement); stops after
    cfg.patience epochs without one and restores the best weights in place.
    """
    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
    m_state = [np.zeros_like(lay.w) for lay in model.layers]
    v_state = [np.zeros_like(lay.w) for lay in model.layers]

    best_weights = [lay.w.copy() for lay in model.layers]
    best_val = accuracy(model, smap, x, y, val_mask)
    best_epoch = 0
    stale = 0
    history = []

    for epoch in range(1, cfg.epochs + 1):
        loss, grads = loss_and_grads(model, smap, x, y, train_mask,
                                     cfg.weight_decay)
        for i, lay in enumerate(model.layers):
            m_state[i] = beta1 * m_state[i] + (1 - beta1) * grads[i]
            v_state[i] = beta2 * v_state[i] + (1 - beta2) * grads[i] ** 2
            m_hat = m_state[i] / (1 - beta1 ** epoch)
            v_hat = v_state[i] / (1 - beta2 ** epoch)
            lay.w = lay.w - cfg.lr * m_hat / (np.sqrt(v_hat) + adam_eps)
        val_acc = accuracy(model, smap, x, y, val_mask)
        history.append({"epoch": epoch, "loss": loss, "val_acc": val_acc})
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_weights = [lay.w.copy() for lay in model.layers]
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    for lay, w in zip(model.layers, best_weights):
        lay.w = w
    return TrainResult(history, best_epoch, best_val, len(history))


# ---------------------------------------------------------------------------
# sequential selection and training
# ---------------------------------------------------------------------------

@dataclass
class MsdOResult:
    model: GnnModel
    selected: list[str]
    layer_reports: list[list[MsdReport]]
    phase_results: list[TrainResult]
    val_acc: float
    test_acc: float


def msd_o_select_and_train(b: GraphBundle, n_layers: int, kinds,
                           msd_cfg: MsdConfig, train_cfg: TrainConfig,
                           lib: GsoLibrary | None = None) -> MsdOResult:
    """Greedy depth-wise pipeline: rank candidates on the evolved features,
    train the winning layer with a temporary readout head, freeze, repeat.

    The returned model is the frozen stack plus the last phase's head; with
    n_layers=1 this is exactly "rank once, train a single layer".
    """
    if n_layers < 1:
        raise ValueError("need at least one layer")
    lib = lib or GsoLibrary(b)
    h = b.x
    frozen: list[Layer] = []
    selected, all_reports, phases = [], [], []
    head: Layer | None = None
    for i in range(n_layers):
        reports = rank_gsos(b, kinds, msd_cfg, lib=lib,
                            z_override=None if i == 0 else h)
        winner = reports[0].gso
        selected.append(winner)
        all_reports.append(reports)

        phase = make_phase_model(winner, h.shape[1], b.c, train_cfg.hidden,
                                 train_cfg.seed, layer_index=i,
                                 orthogonal=train_cfg.orthogonal,
                                 bjorck_iters=train_cfg.bjorck_iters)
        result = train(phase, lib, h, b.y, b.train_mask, b.val_mask, train_cfg)
        phases.append(result)

        gso_layer, head = phase.layers[0], phase.layers[1]
        frozen.append(gso_layer)
        w_tilde = bjorck_orthonormalize(gso_layer.w, train_cfg.bjorck_iters) \
            if gso_layer.orthonormal else gso_layer.w
        s = lib.get(winner)
        m = h if s is None else s.matmat(h)
        h = np.maximum(m @ w_tilde, 0.0)

    final = GnnModel(layers=frozen + [head], bjorck_iters=train_cfg.bjorck_iters,
                     seed=train_cfg.seed,
                     meta={"selected": selected, "hidden": train_cfg.hidden})
    return MsdOResult(
        model=final,
        selected=selected,
        layer_reports=all_reports,
        phase_results=phases,
        val_acc=accuracy(final, lib, b.x, b.y, b.val_mask),
        test_acc=accuracy(final, lib, b.x, b.y, b.test_mask),
    )


# ---------------------------------------------------------------------------
# checkpoints: JSON header + raw little-endian float64 weight blob
# ---------------------------------------------------------------------------

def save_model(model: GnnModel, path: str | Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    offset = 0
    header_layers = []
    with open(path / "weights.bin", "wb") as fh:
        for lay in model.layers:
            blob = np.ascontiguousarray(lay.w, dtype="<f8").tobytes()
            fh.write(blob)
            header_layers.append({
                "gso": lay.gso,
                "d_in": lay.w.shape[0],
                "d_out": lay.w.shape[1],
                "orthonormal": lay.orthonormal,
                "relu": lay.relu,
                "offset_bytes": offset,
            })
            offset += len(blob)
    header = {
        "format": "gsoselect-model-v1",
        "dtype": "<f8",
        "bjorck_iters": model.bjorck_iters,
        "seed": model.seed,
        "meta": model.meta,
        "layers": header_layers,
    }
    (path / "model.json").write_text(json.dumps(header, indent=2) + "\n")
    return path


def load_model(path: str | Path) -> GnnModel:
    path = Path(path)
    header = json.loads((path / "model.json").read_text())
    if header.get("format") != "gsoselect-model-v1":
        raise ValueError(f"unrecognized checkpoint format in {path}")
    blob = (path / "weights.bin").read_bytes()
    layers = []
    for spec in header["layers"]:
        count = spec["d_in"] * spec["d_out"]
        start = spec["offset_bytes"]
        w = np.frombuffer(blob, dtype="<f8", count=count,
                          offset=start).reshape(spec["d_in"], spec["d_out"])
        layers.append(Layer(spec["gso"], w.copy(), spec["orthonormal"],
                            spec["relu"]))
    return GnnModel(layers=layers, bjorck_iters=header["bjorck_iters"],
                    seed=header["seed"], meta=header.get("meta", {}))
