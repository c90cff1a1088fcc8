"""Report figures: accuracy and certificate-gap charts rendered to PNG files.

Only the report paths import matplotlib; dataset images come from the
hand-rolled rasterizer, never from a plotting library.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_eval_figures(report: dict, out_dir) -> list[str]:
    """Bar charts for per-task and per-stratum accuracy; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    acc = report["accuracy"]["per_task"]
    if acc:
        fig, ax = plt.subplots(figsize=(6, 3.2))
        tasks = list(acc)
        values = [acc[t] if acc[t] is not None else 0.0 for t in tasks]
        ax.bar(tasks, values, color="#4878a8")
        ax.set_ylim(0, 1.0)
        ax.set_ylabel("accuracy")
        ax.set_title("answer accuracy by task")
        ax.tick_params(axis="x", rotation=30)
        fig.tight_layout()
        path = out / "accuracy_by_task.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(str(path))

    strata = report["accuracy"]["per_stratum"]
    if strata:
        fig, ax = plt.subplots(figsize=(6, 0.42 * len(strata) + 1.2))
        keys = list(strata)[::-1]
        values = [strata[k] if strata[k] is not None else 0.0 for k in keys]
        ax.barh(keys, values, color="#6a9a58")
        ax.set_xlim(0, 1.0)
        ax.set_xlabel("accuracy")
        ax.set_title("accuracy by difficulty stratum")
        fig.tight_layout()
        path = out / "accuracy_by_stratum.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(str(path))

    if "fidelity" in report:
        f = report["fidelity"]
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.bar(["exact", "shape_only"],
               [f["exact"] or 0.0, f["shape_only"] or 0.0],
               color=["#a85048", "#c8a038"])
        ax.set_ylim(0, 1.0)
        ax.set_title(f"world-model fidelity ({f['steps']} steps)")
        fig.tight_layout()
        path = out / "fidelity.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(str(path))
    return paths


def save_theory_figure(sections: dict, out_dir) -> str:
    """Worst measured gap per certificate against its tolerance, log scale."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names, gaps, tols, colors = [], [], [], []
    floor = 1e-18
    for name, result in sections.items():
        worst = result.get("worst", {})
        gap = max(
            (abs(v) for v in worst.values() if isinstance(v, (int, float))),
            default=0.0,
        )
        names.append(name)
        gaps.append(max(gap, floor))
        tols.append(result.get("tolerance", 0.0))
        colors.append("#6a9a58" if result.get("passed") else "#a85048")
    fig, ax = plt.subplots(figsize=(6, 3.2))
    xs = range(len(names))
    ax.bar(xs, [math.log10(g) - math.log10(floor) for g in gaps],
           bottom=math.log10(floor), color=colors)
    for x, tol in zip(xs, tols):
        if tol:
            ax.hlines(math.log10(tol), x - 0.4, x + 0.4,
                      colors="#303030", linestyles="dashed")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=20)
    ax.set_ylabel("log10 worst |gap|")
    ax.set_title("certificate gaps vs tolerances")
    fig.tight_layout()
    path = out / "theory_gaps.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
