"""Quick-look matplotlib renderings of results and diagnostics.

These accompany the delimited output files; they are working plots, not
publication figures. All functions write PNGs into the given directory and
return the written paths.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import DiagnosticsReport
from .runner import ResultsGrid, _method_display


def render_results_figures(grid: ResultsGrid, outdir: str | Path) -> list[Path]:
    """Grouped bar chart per metric: one bar cluster per (group, outcome)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    cells = [(g, o) for g in grid.groups for o in grid.outcomes]
    x = np.arange(len(cells))
    width = 0.8 / max(len(grid.methods), 1)
    for metric in ("auroc", "auprc"):
        fig, ax = plt.subplots(figsize=(max(6.0, 1.8 * len(cells)), 4.0))
        for i, method in enumerate(grid.methods):
            heights = []
            for g, o in cells:
                c = grid.cells[(g, o, method)]
                v = c.auroc_mean if metric == "auroc" else c.auprc_mean
                heights.append(np.nan if c.skipped or v is None else v)
            ax.bar(x + i * width, heights, width, label=_method_display(method))
        ax.set_xticks(x + 0.4 - width / 2)
        ax.set_xticklabels([f"{g}\n{o}" for g, o in cells], fontsize=8)
        ax.set_ylabel(metric.upper())
        ax.set_ylim(0, 1)
        ax.legend(fontsize=8, ncol=2)
        fig.tight_layout()
        path = outdir / f"figure_results_{metric}.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def render_sweep_figures(
    grids: dict, outdir: str | Path, sweep_name: str, x_label: str
) -> list[Path]:
    """AUROC against the swept parameter, one line per (group, outcome, method)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    xs = sorted(grids)
    first = grids[xs[0]]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for group in first.groups:
        for outcome in first.outcomes:
            for method in first.methods:
                ys = []
                for v in xs:
                    c = grids[v].cells.get((group, outcome, method))
                    ys.append(
                        np.nan if c is None or c.skipped or c.auroc_mean is None else c.auroc_mean
                    )
                ax.plot(xs, ys, marker="o", label=f"{group}/{outcome}/{_method_display(method)}")
    ax.set_xlabel(x_label)
    ax.set_ylabel("AUROC")
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(outdir) / f"figure_{sweep_name}.png"
    fig.savefig(path)
    plt.close(fig)
    return [path]


def render_diagnostics_figures(report: DiagnosticsReport, outdir: str | Path) -> list[Path]:
    """Histograms, correlation heatmaps, KDE grids, and discriminator densities."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    if report.nn_distances:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for ref, distances in report.nn_distances.items():
            ax.hist(distances, bins=40, alpha=0.5, label=f"nearest {ref}", density=True)
        ax.set_xlabel("L1 distance to nearest real sample")
        ax.set_ylabel("density")
        ax.legend()
        fig.tight_layout()
        path = outdir / "figure_nn_distances.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    if report.correlation:
        sources = list(report.correlation)
        fig, axes = plt.subplots(1, len(sources), figsize=(4.0 * len(sources), 3.6))
        axes = np.atleast_1d(axes)
        for ax, source in zip(axes, sources):
            corr = report.correlation[source]
            im = ax.imshow(corr.matrix, vmin=-1, vmax=1, cmap="coolwarm")
            ax.set_title(str(source), fontsize=9)
            ax.set_xticks(range(len(corr.features)))
            ax.set_yticks(range(len(corr.features)))
            ax.set_xticklabels(corr.features, rotation=90, fontsize=7)
            ax.set_yticklabels(corr.features, fontsize=7)
            fig.colorbar(im, ax=ax, fraction=0.046)
        fig.tight_layout()
        path = outdir / "figure_correlation.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    for (xf, yf), kde in report.kde.items():
        fig, ax = plt.subplots(figsize=(5.0, 4.2))
        ax.pcolormesh(kde.x_grid, kde.y_grid, kde.density.T, shading="auto")
        ax.set_xlabel(xf)
        ax.set_ylabel(yf)
        ax.set_title(f"synthetic joint density: {xf} vs {yf}", fontsize=9)
        fig.tight_layout()
        path = outdir / f"figure_kde_{xf}_{yf}.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    if report.discriminator:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for source, probs in report.discriminator.items():
            ax.hist(probs, bins=25, range=(0, 1), alpha=0.5, label=source, density=True)
        ax.set_xlabel("predicted probability of minority membership")
        ax.set_ylabel("density")
        ax.legend()
        fig.tight_layout()
        path = outdir / "figure_discriminator.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    return written
