"""Command-line interface.

JSON on stdout is the machine interface; a small aligned table goes to
stderr when that stream is a terminal.  Every command echoes its effective
configuration so a run can be reproduced from the report alone, and every
command accepts ``--out FILE.json`` and ``--csv FILE.csv`` for file output
(CSV appends, writing the header only when the file is new).

Exit codes: 0 success, 1 user or configuration error, 2 numerical failure
inside a solver.
"""

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bundle import (BundleFormatError, SbmConfig, expected_sbm_edges,
                     generate_sbm, load_bundle, save_bundle, validate_bundle)
from .gnn import TrainConfig, accuracy, make_gcn, msd_o_select_and_train, train
from .gso import GSO_KINDS, GsoLibrary
from .manifold import ManifoldConfig
from .msd import (MsdConfig, minmax_normalize, msd_on_bundle, spearman,
                  stability_experiment)
from .sparselin import NumericalError


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; here that is a user error, code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(_fail(f"argument error: {message}"))


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------
# shared option groups
# ---------------------------------------------------------------------------

def _add_bundle_opts(p):
    p.add_argument("--bundle", required=True, help="bundle directory")


def _add_metric_opts(p):
    p.add_argument("--gsos", default=",".join(GSO_KINDS),
                   help="comma-separated candidate kinds")
    p.add_argument("--k", type=int, default=2, help="k-NN neighbours")
    p.add_argument("--subset", default="val",
                   choices=("all", "val", "test", "sample"))
    p.add_argument("--sample-size", type=int, default=2000)
    p.add_argument("--epsilon-rel", type=float, default=1e-3,
                   help="pencil shift relative to trace(L_Z)/m")
    p.add_argument("--manifold", default="knn", choices=("knn", "rbf"),
                   help="knn = unit edge weights, rbf = Gaussian weights")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="rbf scale; default is the median edge distance")
    p.add_argument("--dense-cap", type=int, default=2000,
                   help="largest subset solved by the dense eigensolver")
    p.add_argument("--ahat-plain", action="store_true",
                   help="normalized adjacency without the self-loop shift")
    p.add_argument("--seed", type=int, default=0)


def _add_train_opts(p):
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--seeds", type=int, default=5,
                   help="number of training seeds, counted up from --seed")


def _add_report_opts(p):
    p.add_argument("--out", default=None, help="also write the JSON here")
    p.add_argument("--csv", default=None, help="append CSV rows here")
    p.add_argument("--figures", default=None, metavar="DIR",
                   help="render PNG figures into this directory")
    p.add_argument("--workers", type=int, default=1,
                   help="thread count for independent sub-runs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gsoselect",
                     description="score, rank and train graph shift operators")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, validate and re-save a bundle")
    _add_bundle_opts(p)
    p.add_argument("--save-to", default=None, help="write canonical copy here")
    p.add_argument("--features-format", default="tsv", choices=("tsv", "f32"))
    _add_report_opts(p)
    p.set_defaults(run=cmd_ingest)

    p = sub.add_parser("synth-sbm", help="generate a stochastic block model")
    p.add_argument("--save-to", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--p-in", type=float, required=True)
    p.add_argument("--p-out", type=float, required=True)
    p.add_argument("--feature-dim", type=int, default=8)
    p.add_argument("--feature-mode", default="gaussian",
                   choices=("gaussian", "one-hot"))
    p.add_argument("--mu-sep", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--flip-prob", type=float, default=0.1)
    p.add_argument("--train-frac", type=float, default=0.6)
    p.add_argument("--val-frac", type=float, default=0.2)
    p.add_argument("--name", default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_report_opts(p)
    p.set_defaults(run=cmd_synth_sbm)

    p = sub.add_parser("msd", help="score one operator on one bundle")
    _add_bundle_opts(p)
    p.add_argument("--gso", required=True)
    _add_metric_opts(p)
    _add_report_opts(p)
    p.set_defaults(run=cmd_msd)

    p = sub.add_parser("rank", help="score all candidates, best first")
    _add_bundle_opts(p)
    _add_metric_opts(p)
    _add_report_opts(p)
    p.set_defaults(run=cmd_rank)

    p = sub.add_parser("correlate",
                       help="scores vs trained single-layer accuracy")
    _add_bundle_opts(p)
    _add_metric_opts(p)
    _add_train_opts(p)
    _add_report_opts(p)
    p.set_defaults(run=cmd_correlate)

    p = sub.add_parser("select", help="layer-wise selection plus training")
    _add_bundle_opts(p)
    p.add_argument("--layers", type=int, default=2)
    _add_metric_opts(p)
    _add_train_opts(p)
    _add_report_opts(p)
    p.set_defaults(run=cmd_select)

    p = sub.add_parser("perturb", help="score drift under edge-weight noise")
    _add_bundle_opts(p)
    p.add_argument("--gso", required=True)
    p.add_argument("--deltas", default="0,0.01,0.02,0.05,0.1",
                   help="comma-separated relative perturbation sizes")
    p.add_argument("--trials", type=int, default=20)
    _add_metric_opts(p)
    _add_report_opts(p)
    p.set_defaults(run=cmd_perturb, manifold="rbf")

    p = sub.add_parser("init-select",
                       help="operator with the best raw-feature alignment")
    _add_bundle_opts(p)
    _add_metric_opts(p)
    _add_report_opts(p)
    p.set_defaults(run=cmd_init_select)

    return parser


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _msd_config(args) -> MsdConfig:
    mode = "rbf" if args.manifold == "rbf" else "binary"
    manifold = ManifoldConfig(k=args.k, mode=mode, bandwidth=args.bandwidth,
                              subset=args.subset, sample_size=args.sample_size,
                              sample_seed=args.seed)
    return MsdConfig(manifold=manifold, epsilon_rel=args.epsilon_rel,
                     dense_cap=args.dense_cap, seed=args.seed)


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(lr=args.lr, weight_decay=args.weight_decay,
                       epochs=args.epochs, patience=args.patience,
                       seed=seed, hidden=args.hidden)


def _kinds(args) -> list[str]:
    kinds = [k for k in args.gsos.split(",") if k]
    for k in kinds:
        if k not in GSO_KINDS:
            raise ValueError(f"unknown GSO kind {k!r}")
    return kinds


def _library(bundle, args) -> GsoLibrary:
    return GsoLibrary(bundle, ahat_self_loops=not args.ahat_plain)


def _map_ordered(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _score_kinds(bundle, kinds, cfg, lib, workers):
    """Rank candidates, best first, with the identity-baseline gain filled in.

    Scoring is independent per kind, so it fans out over the worker pool;
    assembly and the final sort stay single-threaded.
    """
    base = msd_on_bundle(bundle, "identity", cfg, lib=lib)
    reports = _map_ordered(
        lambda kind: msd_on_bundle(bundle, kind, cfg, lib=lib), kinds, workers)
    for rep in reports:
        rep.alignment_gain = rep.lambda_max - base.lambda_max
    reports.sort(key=lambda r: (r.lambda_max, r.gso))
    return reports


def _normalized_inverse(reports) -> dict:
    """Min-max normalized 1/lambda per kind; degenerate entries map to None."""
    defined = [r for r in reports if r.inverse_msd is not None]
    norm = minmax_normalize([r.inverse_msd for r in defined])
    out = {r.gso: None for r in reports}
    out.update({r.gso: float(v) for r, v in zip(defined, norm)})
    return out


def _table(headers, rows):
    """Aligned text table on stderr, only when someone is watching."""
    if not sys.stderr.isatty():
        return
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    for r in cells:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)),
              file=sys.stderr)


def _write_csv(path, columns, rows):
    path = Path(path)
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(columns)
        writer.writerows(rows)


def _render_figures(args, figure_data) -> list[str]:
    if not args.figures or not figure_data:
        return []
    from .plots import render_report_figures
    return [str(p) for p in render_report_figures(figure_data, args.figures)]


def _fmt(x, nd=6):
    return "-" if x is None else f"{x:.{nd}g}"


METRIC_CSV = ["command", "bundle", "gso", "k", "mode", "subset", "m",
              "epsilon", "solver", "lambda_max", "inverse_msd", "degenerate",
              "alignment_gain", "complexity_term", "iters", "converged"]


def _metric_rows(command, args, reports):
    rows = []
    for rep in reports:
        rows.append([command, args.bundle, rep.gso, args.k,
                     args.manifold, args.subset, rep.m, rep.epsilon,
                     rep.solver, rep.lambda_max, rep.inverse_msd,
                     rep.degenerate, rep.alignment_gain, rep.complexity_term,
                     rep.iters, rep.converged])
    return rows


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_ingest(args):
    bundle = load_bundle(args.bundle)
    diag = validate_bundle(bundle)
    payload = {"bundle": args.bundle, "diagnostics": diag}
    if args.save_to:
        payload["saved_to"] = str(save_bundle(bundle, args.save_to,
                                              args.features_format))
    csv_rows = [["ingest", args.bundle, diag["n"], diag["d"], diag["c"],
                 diag["edges"], diag["isolated_nodes"]]]
    _table(["n", "d", "c", "edges", "isolated"],
           [[diag["n"], diag["d"], diag["c"], diag["edges"],
             diag["isolated_nodes"]]])
    return payload, (["command", "bundle", "n", "d", "c", "edges",
                      "isolated_nodes"], csv_rows), None


def cmd_synth_sbm(args):
    cfg = SbmConfig(n=args.n, c=args.classes, p_in=args.p_in, p_out=args.p_out,
                    seed=args.seed, d=args.feature_dim,
                    feature_mode=args.feature_mode, mu_sep=args.mu_sep,
                    sigma=args.sigma, flip_prob=args.flip_prob,
                    train_frac=args.train_frac, val_frac=args.val_frac,
                    name=args.name)
    bundle = generate_sbm(cfg)
    saved = save_bundle(bundle, args.save_to)
    diag = validate_bundle(bundle)
    mean_edges, _ = expected_sbm_edges(cfg)
    payload = {"saved_to": str(saved), "expected_edges": mean_edges,
               "diagnostics": diag}
    csv_rows = [["synth-sbm", str(saved), args.n, args.classes, args.p_in,
                 args.p_out, diag["edges"], mean_edges, args.seed]]
    _table(["n", "classes", "edges", "expected"],
           [[args.n, args.classes, diag["edges"], f"{mean_edges:.1f}"]])
    return payload, (["command", "saved_to", "n", "classes", "p_in", "p_out",
                      "edges", "expected_edges", "seed"], csv_rows), None


def cmd_msd(args):
    if args.gso not in GSO_KINDS:
        raise ValueError(f"unknown GSO kind {args.gso!r}")
    bundle = load_bundle(args.bundle)
    lib = _library(bundle, args)
    cfg = _msd_config(args)
    base = msd_on_bundle(bundle, "identity", cfg, lib=lib)
    rep = msd_on_bundle(bundle, args.gso, cfg, lib=lib)
    rep.alignment_gain = rep.lambda_max - base.lambda_max
    payload = {"report": rep.to_dict(), "baseline_lambda": base.lambda_max}
    _table(["gso", "lambda_max", "1/lambda", "m"],
           [[rep.gso, _fmt(rep.lambda_max), _fmt(rep.inverse_msd), rep.m]])
    figures = {"scores": {rep.gso: rep.lambda_max}}
    return payload, (METRIC_CSV, _metric_rows("msd", args, [rep])), figures


def cmd_rank(args):
    bundle = load_bundle(args.bundle)
    kinds = _kinds(args)
    lib = _library(bundle, args)
    reports = _score_kinds(bundle, kinds, _msd_config(args), lib, args.workers)
    norm = _normalized_inverse(reports)
    payload = {
        "reports": [r.to_dict() for r in reports],
        "inverse_normalized": norm,
        "best": reports[0].gso,
    }
    _table(["rank", "gso", "lambda_max", "1/lambda (0-1)"],
           [[i + 1, r.gso, _fmt(r.lambda_max), _fmt(norm[r.gso], 4)]
            for i, r in enumerate(reports)])
    figures = {"scores": {r.gso: (None if r.degenerate else r.lambda_max)
                          for r in reports}}
    return payload, (METRIC_CSV, _metric_rows("rank", args, reports)), figures


def cmd_correlate(args):
    bundle = load_bundle(args.bundle)
    kinds = _kinds(args)
    lib = _library(bundle, args)
    reports = _score_kinds(bundle, kinds, _msd_config(args), lib, args.workers)
    by_kind = {r.gso: r for r in reports}
    seeds = list(range(args.seed, args.seed + args.seeds))

    def run_one(task):
        kind, seed = task
        model = make_gcn([kind], bundle.d, bundle.c, args.hidden, seed)
        train(model, lib, bundle.x, bundle.y, bundle.train_mask,
              bundle.val_mask, _train_config(args, seed))
        return accuracy(model, lib, bundle.x, bundle.y, bundle.test_mask)

    tasks = [(kind, seed) for kind in kinds for seed in seeds]
    accs = _map_ordered(run_one, tasks, args.workers)
    acc_table = {}
    for i, kind in enumerate(kinds):
        per_seed = accs[i * len(seeds):(i + 1) * len(seeds)]
        acc_table[kind] = {
            "per_seed": per_seed,
            "mean": float(np.mean(per_seed)),
            "std": float(np.std(per_seed)),
        }

    usable = [k for k in kinds if by_kind[k].inverse_msd is not None]
    rho = spearman([by_kind[k].inverse_msd for k in usable],
                   [acc_table[k]["mean"] for k in usable]) \
        if len(usable) >= 2 else None
    inv_norm = _normalized_inverse([by_kind[k] for k in usable])
    acc_norm = minmax_normalize([acc_table[k]["mean"] for k in usable])

    payload = {
        "kinds": kinds,
        "seeds": seeds,
        "scores": {k: by_kind[k].to_dict() for k in kinds},
        "accuracy": acc_table,
        "inverse_normalized": inv_norm,
        "accuracy_normalized": {k: float(v)
                                for k, v in zip(usable, acc_norm)},
        "rho": rho,
        "rho_defined": rho is not None,
    }
    _table(["gso", "lambda_max", "acc mean", "acc std"],
           [[k, _fmt(by_kind[k].lambda_max), _fmt(acc_table[k]["mean"], 4),
             _fmt(acc_table[k]["std"], 3)] for k in kinds])
    columns = ["command", "bundle", "gso", "lambda_max", "inverse_msd",
               "acc_mean", "acc_std", "rho"]
    rows = [["correlate", args.bundle, k, by_kind[k].lambda_max,
             by_kind[k].inverse_msd, acc_table[k]["mean"],
             acc_table[k]["std"], rho] for k in kinds]
    figures = None
    if len(usable) >= 2 and rho is not None:
        figures = {"correlation": {
            "inv_scores": [inv_norm[k] for k in usable],
            "accuracies": [acc_table[k]["mean"] for k in usable],
            "labels": usable,
            "rho": rho,
        }}
    return payload, (columns, rows), figures


def cmd_select(args):
    bundle = load_bundle(args.bundle)
    kinds = _kinds(args)
    lib = _library(bundle, args)
    cfg = _msd_config(args)
    seeds = list(range(args.seed, args.seed + args.seeds))

    def run_one(seed):
        res = msd_o_select_and_train(bundle, args.layers, kinds, cfg,
                                     _train_config(args, seed), lib=lib)
        return {"seed": seed, "selected": res.selected,
                "val_acc": res.val_acc, "test_acc": res.test_acc}

    runs = _map_ordered(run_one, seeds, args.workers)
    test_accs = [r["test_acc"] for r in runs]
    payload = {
        "layers": args.layers,
        "per_seed": runs,
        "selected": runs[0]["selected"],
        "selection_consistent": all(r["selected"] == runs[0]["selected"]
                                    for r in runs),
        "test_acc_mean": float(np.mean(test_accs)),
        "test_acc_std": float(np.std(test_accs)),
    }
    _table(["seed", "selected", "test acc"],
           [[r["seed"], ",".join(r["selected"]), _fmt(r["test_acc"], 4)]
            for r in runs])
    columns = ["command", "bundle", "layers", "seed", "selected", "val_acc",
               "test_acc"]
    rows = [["select", args.bundle, args.layers, r["seed"],
             ";".join(r["selected"]), r["val_acc"], r["test_acc"]]
            for r in runs]
    return payload, (columns, rows), None


def cmd_perturb(args):
    if args.gso not in GSO_KINDS:
        raise ValueError(f"unknown GSO kind {args.gso!r}")
    bundle = load_bundle(args.bundle)
    deltas = [float(t) for t in args.deltas.split(",") if t]
    report = stability_experiment(bundle, args.gso, deltas, args.trials,
                                  _msd_config(args), seed=args.seed,
                                  lib=_library(bundle, args))
    payload = {"report": report.to_dict()}
    _table(["delta", "mean |change|", "std"],
           [[d, _fmt(m), _fmt(s)] for d, m, s in
            zip(report.deltas, report.mean_abs_change, report.std_abs_change)])
    columns = ["command", "bundle", "gso", "delta", "mean_abs_change",
               "std_abs_change", "trials"]
    rows = [["perturb", args.bundle, args.gso, d, m, s, report.trials]
            for d, m, s in zip(report.deltas, report.mean_abs_change,
                               report.std_abs_change)]
    figures = {"stability": {"deltas": report.deltas,
                             "mean_abs_change": report.mean_abs_change,
                             "std_abs_change": report.std_abs_change}}
    return payload, (columns, rows), figures


def cmd_init_select(args):
    bundle = load_bundle(args.bundle)
    kinds = _kinds(args)
    lib = _library(bundle, args)
    reports = _score_kinds(bundle, kinds, _msd_config(args), lib, args.workers)
    payload = {
        "selected": reports[0].gso,
        "reports": [r.to_dict() for r in reports],
    }
    _table(["selected"], [[reports[0].gso]])
    figures = {"scores": {r.gso: (None if r.degenerate else r.lambda_max)
                          for r in reports}}
    return payload, (METRIC_CSV,
                     _metric_rows("init-select", args, reports)), figures


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    started = time.perf_counter()
    try:
        payload, (columns, rows), figure_data = args.run(args)
    except (BundleFormatError, ValueError, KeyError, OSError) as e:
        return _fail(str(e))
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2

    report = {"command": args.command, "config": _echo_config(args)}
    report.update(payload)
    figures = _render_figures(args, figure_data)
    if figures:
        report["figures"] = figures
    report["timing"] = {"seconds": time.perf_counter() - started}

    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.csv and rows:
        _write_csv(args.csv, columns, rows)
    return 0


def _echo_config(args) -> dict:
    skip = {"run", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


if __name__ == "__main__":
    sys.exit(main())
