"""Static line plots from a trace CSV."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .engine import ScenarioTrace

_GROUPS = {
    "tracking": [("x_l", "leader"), ("x", "follower"), ("tau", "target estimate")],
    "gains": [("l1", "L1"), ("l2", "L2")],
    "forces": [("u_l", "operator force"), ("u", "follower command"), ("f_env", "contact force")],
}


def plot_trace(trace: ScenarioTrace, out_dir: str) -> list:
    """One PNG per group plus the scalar error strip; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, series in _GROUPS.items():
        fig, axes = plt.subplots(3, 1, sharex=True, figsize=(9, 7))
        for ax_idx, axis_name in enumerate("xyz"):
            for col, label in series:
                axes[ax_idx].plot(trace.t, getattr(trace, col)[:, ax_idx], label=label, lw=0.8)
            axes[ax_idx].set_ylabel(axis_name)
            axes[ax_idx].grid(True, alpha=0.3)
        axes[0].legend(loc="upper right", fontsize=8)
        axes[-1].set_xlabel("t [s]")
        fig.suptitle(name)
        path = os.path.join(out_dir, f"{name}.png")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(9, 3))
    ax.plot(trace.t, trace.error, lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("tracking error [m]")
    ax.grid(True, alpha=0.3)
    path = os.path.join(out_dir, "error.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)
    return written
