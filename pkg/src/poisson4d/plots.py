"""Figure rendering for the report paths (headless, file output only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

__all__ = ["render_trajectory_figure"]


def render_trajectory_figure(traj, path: str | Path, title: str = "") -> Path:
    """Render state components and invariant drift next to the CSV output."""
    path = Path(path)
    fig, (ax_state, ax_drift) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)

    t = traj.times
    for i in range(traj.states.shape[1]):
        ax_state.plot(t, traj.states[:, i], label=f"x{i + 1}")
    ax_state.set_ylabel("state")
    ax_state.legend(loc="best", fontsize=8)
    if title:
        ax_state.set_title(title)

    floor = 1e-17
    series = [("H", traj.hamiltonian)]
    if traj.casimir1 is not None:
        series += [("C1", traj.casimir1), ("C2", traj.casimir2)]
    for name, values in series:
        drift = np.abs(values - values[0]) / max(1.0, abs(values[0]))
        ax_drift.semilogy(t, np.maximum(drift, floor), label=f"|{name}(t) - {name}(0)| (rel)")
    ax_drift.set_xlabel("t")
    ax_drift.set_ylabel("invariant drift")
    ax_drift.legend(loc="best", fontsize=8)
    ax_drift.grid(True, which="both", alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
