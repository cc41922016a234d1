"""Figure rendering for the CLI report paths. File output only (Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .bench import BenchmarkReport, DistributionStudy

__all__ = ["save_distribution_figure", "save_benchmark_figure"]


def save_distribution_figure(study: DistributionStudy, path) -> Path:
    """Bright and dark count pmfs on a log scale with the threshold marked."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    kb = np.arange(study.bright.pmf.size)
    kd = np.arange(study.dark.pmf.size)
    ax.plot(kd, study.dark.pmf, color="tab:red", label="dark level")
    ax.plot(kb, study.bright.pmf, color="tab:blue", linestyle="--", label="bright level")
    ax.axvline(study.k0, color="gray", linestyle=":", label=f"threshold k0 = {study.k0}")
    ax.set_yscale("log")
    floor = max(min(study.bright.pmf[study.bright.pmf > 0].min(initial=1.0),
                    study.dark.pmf[study.dark.pmf > 0].min(initial=1.0)), 1e-16)
    ax.set_ylim(floor / 10.0, 2.0)
    ax.set_xlabel("photon count k")
    ax.set_ylabel("probability")
    em = study.error_model
    ax.set_title(f"p10 = {em.p10:.4g}, p01 = {em.p01:.4g}")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_benchmark_figure(report: BenchmarkReport, path) -> Path:
    """Histograms of per-state infidelity for both reconstruction models."""
    inf_std = np.array([s.infidelity_standard for s in report.states])
    inf_fuz = np.array([s.infidelity_fuzzy for s in report.states])
    lo = max(min(inf_std.min(), inf_fuz.min()), 1e-12)
    hi = max(inf_std.max(), inf_fuz.max(), lo * 10.0)
    bins = np.logspace(np.log10(lo) - 0.25, np.log10(hi) + 0.25, 40)

    fig, axes = plt.subplots(1, 2, figsize=(9.5, 4.0), sharey=True)
    for ax, values, label, color in (
        (axes[0], inf_std, "standard model", "tab:orange"),
        (axes[1], inf_fuz, "fuzzy model", "tab:green"),
    ):
        ax.hist(values, bins=bins, color=color, alpha=0.8)
        ax.axvline(values.mean(), color="black", linestyle=":",
                   label=f"mean = {values.mean():.3g}")
        ax.set_xscale("log")
        ax.set_xlabel("infidelity 1 - F")
        ax.set_title(label)
        ax.legend()
    axes[0].set_ylabel("states")
    fig.suptitle(f"mean ratio standard/fuzzy = {report.summary['ratio']:.4g}")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
