"""Report figures rendered next to the delimited outputs.

All plots write straight to files through the Agg backend; nothing here
opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import RegretSeries  # noqa: E402


def regret_curves(
    online: list[RegretSeries],
    offline: list[RegretSeries],
    path: str | Path,
) -> Path:
    """Per-trial cumulative regret curves with per-method means."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, color, series_list in (
        ("online", "tab:blue", online),
        ("offline", "tab:orange", offline),
    ):
        for series in series_list:
            ts = [t for t, _ in series.per_t]
            vals = [v for _, v in series.per_t]
            ax.plot(ts, vals, color=color, alpha=0.25, linewidth=0.8)
        if series_list:
            length = len(series_list[0].per_t)
            ts = [t for t, _ in series_list[0].per_t]
            mean = [
                sum(s.per_t[i][1] for s in series_list) / len(series_list)
                for i in range(length)
            ]
            ax.plot(ts, mean, color=color, linewidth=2.0, label=f"{label} (mean)")
    ax.set_xlabel("timestep")
    ax.set_ylabel("cumulative regret vs oracle")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def sweep_box(
    parameter: str,
    values: list,
    revenues_per_value: list[list[float]],
    path: str | Path,
) -> Path:
    """Distribution of per-trial cumulative revenue at each swept value."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.boxplot(revenues_per_value, tick_labels=[str(v) for v in values])
    ax.set_xlabel(parameter)
    ax.set_ylabel("cumulative revenue")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def runtime_scaling(
    step_values: list,
    offline_solve: list[float],
    online_solve: list[float],
    path: str | Path,
) -> Path:
    """Solve-time comparison across timestep granularities (log scale)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(step_values, offline_solve, marker="o", label="offline solve")
    ax.plot(step_values, online_solve, marker="s", label="online solve (total)")
    ax.set_xlabel("step_days")
    ax.set_ylabel("solve seconds")
    ax.set_yscale("log")
    ax.invert_xaxis()  # finer steps to the right
    ax.legend()
    ax.grid(True, alpha=0.3, which="both")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
