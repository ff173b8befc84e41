"""Figure rendering for the report path (written next to the tabular output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_report_figure(report, path, title: str = "cross-validation accuracy") -> None:
    """Per-repeat fold accuracies as strip + box, with the overall mean line."""
    accs = report.fold_accuracies
    fig, ax = plt.subplots(figsize=(7, 4))
    for r in range(accs.shape[0]):
        jitter = (np.arange(accs.shape[1]) - accs.shape[1] / 2) * 0.004
        ax.plot(np.full(accs.shape[1], r + 1) + jitter, accs[r], ".",
                color="tab:blue", alpha=0.45, markersize=5)
    ax.boxplot([row for row in accs], positions=range(1, accs.shape[0] + 1),
               widths=0.5, showfliers=False, medianprops={"color": "black"})
    ax.axhline(report.mean_accuracy, color="tab:red", linewidth=1,
               label=f"mean = {report.mean_accuracy:.4f}")
    ax.set_xlabel("repeat")
    ax.set_ylabel("fold accuracy")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(values, means, stds, param: str, path,
                      title: str = "") -> None:
    """Mean accuracy with standard-deviation error bars over a swept parameter."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(values, means, yerr=stds, fmt="o-", capsize=3,
                color="tab:blue", ecolor="gray", markersize=4)
    best = int(np.argmax(means))
    ax.plot(values[best], means[best], "o", color="tab:red", markersize=7,
            label=f"best: {param}={values[best]:g} ({means[best]:.4f})")
    ax.set_xlabel(param)
    ax.set_ylabel("mean accuracy")
    if param == "dim":
        ax.set_xscale("log", base=2)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
