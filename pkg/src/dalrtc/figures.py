"""Matplotlib renderings of benchmark outputs, written next to the CSVs."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["save_nmse_vs_ratio", "save_convergence", "save_trace"]


def save_nmse_vs_ratio(rows, path) -> None:
    """One NMSE-versus-observed-ratio line per method (median over reps)."""
    by_method: dict[str, dict[float, list[float]]] = {}
    for r in rows:
        by_method.setdefault(r.method, {}).setdefault(r.ratio, []).append(r.nmse)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method in sorted(by_method):
        ratios = sorted(by_method[method])
        med = [float(np.median(by_method[method][x])) for x in ratios]
        ax.semilogy(ratios, med, marker="o", label=method)
    ax.set_xlabel("observed ratio")
    ax.set_ylabel("NMSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_convergence(traces: dict, path) -> None:
    """Per-iteration NMSE curves, one line per method."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method in sorted(traces):
        records = traces[method].records
        pts = [(r.iteration, r.nmse) for r in records if r.nmse is not None]
        if pts:
            ax.semilogy([p[0] for p in pts], [p[1] for p in pts], label=method)
    ax.set_xlabel("iteration")
    ax.set_ylabel("NMSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_trace(trace, path) -> None:
    """Relative change (and NMSE when present) per iteration of one solve."""
    records = trace.records
    its = [r.iteration for r in records]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(its, [r.rel_change for r in records], label="relative change")
    nmse_pts = [(r.iteration, r.nmse) for r in records if r.nmse is not None]
    if nmse_pts:
        ax.semilogy([p[0] for p in nmse_pts], [p[1] for p in nmse_pts],
                    label="NMSE")
    ax.set_xlabel("iteration")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
