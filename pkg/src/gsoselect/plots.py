"""Figure rendering for selection reports.

Every function takes already-computed numbers, writes one PNG, and returns
the path it wrote.  Rendering always goes through the Agg backend so the
CLI works on headless machines.
"""

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def plot_scores(scores, out_path, title="Spectral distortion by shift operator"):
    """Bar chart of lambda_max per GSO, lowest (best) bar highlighted.

    ``scores`` maps operator name -> lambda_max, with None marking
    degenerate pencils; degenerate entries are drawn as hatched stubs.
    """
    names = list(scores)
    values = [scores[k] for k in names]
    finite = [v for v in values if v is not None]
    stub = 0.05 * max(finite) if finite else 1.0
    best = None
    if finite:
        best = min((v, k) for k, v in scores.items() if v is not None)[1]

    fig, ax = plt.subplots(figsize=(7, 4))
    for i, (name, v) in enumerate(zip(names, values)):
        if v is None:
            ax.bar(i, stub, color="none", edgecolor="grey", hatch="//")
        else:
            ax.bar(i, v, color="tab:green" if name == best else "tab:blue")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("lambda_max")
    ax.set_title(title)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_correlation(inv_scores, accuracies, labels, rho, out_path):
    """Scatter of inverse distortion against test accuracy, one dot per GSO."""
    inv_scores = np.asarray(inv_scores, dtype=float)
    accuracies = np.asarray(accuracies, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.scatter(inv_scores, accuracies, color="tab:blue", zorder=3)
    for x, y, name in zip(inv_scores, accuracies, labels):
        ax.annotate(name, (x, y), textcoords="offset points",
                    xytext=(4, 4), fontsize=8)
    ax.set_xlabel("1 / lambda_max (normalized)")
    ax.set_ylabel("test accuracy")
    ax.set_title(f"Alignment vs accuracy (Spearman rho = {rho:.3f})")
    ax.grid(True, alpha=0.3)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_stability(deltas, mean_changes, std_changes, out_path,
                   title="Score drift under edge-weight noise"):
    """Error-bar curve of |lambda(delta) - lambda(0)| over noise level."""
    deltas = np.asarray(deltas, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(deltas, mean_changes, yerr=std_changes, marker="o",
                capsize=3, color="tab:blue")
    ax.set_xlabel("relative perturbation delta")
    ax.set_ylabel("mean |lambda change|")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def render_report_figures(report, out_dir):
    """Render whichever figures the report dict has data for.

    Returns the list of written paths.  Recognized report keys:
    ``scores`` (name -> lambda or None), ``correlation`` (dict with
    ``inv_scores``/``accuracies``/``labels``/``rho``), and ``stability``
    (dict with ``deltas``/``mean_abs_change``/``std_abs_change``).
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if report.get("scores"):
        written.append(plot_scores(
            report["scores"], os.path.join(out_dir, "scores.png")))
    corr = report.get("correlation")
    if corr:
        written.append(plot_correlation(
            corr["inv_scores"], corr["accuracies"], corr["labels"],
            corr["rho"], os.path.join(out_dir, "correlation.png")))
    stab = report.get("stability")
    if stab:
        written.append(plot_stability(
            stab["deltas"], stab["mean_abs_change"], stab["std_abs_change"],
            os.path.join(out_dir, "stability.png")))
    return written
