"""Figure rendering for sweep results and profiles (file output only)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# The Software chunk is the only metadata matplotlib writes into PNGs;
# stripping it keeps reruns byte-identical across installs.
_NO_METADATA = {"Software": None}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=150, metadata=_NO_METADATA)
    plt.close(fig)


def plot_schedulability(rows, out_dir, stem: str = "schedulability"):
    """Render one figure per edge probability from result rows.

    Each figure plots the schedulable fraction against taskset
    utilization with one line per mode. Returns the written paths.
    """
    cells: dict = {}
    for r in rows:
        cells.setdefault(r.p, {}).setdefault(r.mode, []).append(
            (r.utilization, r.fraction_schedulable))
    paths = []
    for p in sorted(cells):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for mode in sorted(cells[p]):
            pts = sorted(cells[p][mode])
            ax.plot([u for u, _ in pts], [f for _, f in pts],
                    marker="o", markersize=3, label=mode)
        ax.set_xlabel("taskset utilization")
        ax.set_ylabel("fraction schedulable")
        ax.set_ylim(-0.05, 1.05)
        ax.set_title(f"edge probability {p:g}")
        ax.grid(alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(str(out_dir), f"{stem}_p{p:g}.png")
        _save(fig, path)
        paths.append(path)
    return paths


def plot_profile_overlay(profiles, path, title: str | None = None):
    """Overlay cumulative instruction curves of several profiles.

    Labels carry the run id and budget so measured and synthetic runs
    of the same workload can be told apart.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for prof in profiles:
        t = np.arange(len(prof.samples)) * prof.interval
        cum = np.cumsum([s.instr for s in prof.samples])
        ax.plot(t, cum,
                label=f"{prof.run_id} ({prof.budget.cache},{prof.budget.bw})")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("instructions retired")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    if profiles:
        ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)
    return path
