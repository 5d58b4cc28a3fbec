"""SVG renderings of the pose diagnostics.

Uses the non-interactive backend and strips volatile metadata so that the
same report always produces the same bytes.
"""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "projpose"

import matplotlib.pyplot as plt
import numpy as np

# A fixed Date would do as well; None drops the field entirely.
_METADATA = {"Date": None}


def save_latent_circle(report, path) -> None:
    """Scatter the estimates on the unit circle, colored by true pose."""
    true = report.true_angles
    est = report.estimated_angles
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    ring = np.linspace(0.0, 2.0 * math.pi, 257)
    ax.plot(np.cos(ring), np.sin(ring), color="0.8", linewidth=0.8, zorder=1)
    points = ax.scatter(
        np.cos(est), np.sin(est), c=true, s=10, cmap="twilight", zorder=2
    )
    fig.colorbar(points, ax=ax, label="true pose (rad)")
    ax.set_xlabel("cos of estimated pose")
    ax.set_ylabel("sin of estimated pose")
    ax.set_aspect("equal")
    ax.set_xlim(-1.15, 1.15)
    ax.set_ylim(-1.15, 1.15)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_METADATA)
    plt.close(fig)


def save_pose_scatter(report, path) -> None:
    """Scatter estimated against true pose; folding shows up as a V."""
    true = report.true_angles
    est = report.estimated_angles
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    ax.scatter(true, est, s=10, color="tab:blue")
    ax.set_xlabel("true pose (rad)")
    ax.set_ylabel("estimated pose (rad)")
    ax.set_xlim(0.0, 2.0 * math.pi)
    ax.set_ylim(0.0, 2.0 * math.pi)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_METADATA)
    plt.close(fig)
