"""Matplotlib renderers for the report paths; every figure lands on disk."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evolve import OBJECTIVE_NAMES

__all__ = [
    "save_pareto_figure",
    "save_generation_curves",
    "save_robustness_figure",
    "save_steady_state_figure",
    "save_transient_figure",
    "save_activity_figure",
    "save_comparison_figure",
]

_LABELS = {
    "time_to_land": "time to land (s)",
    "final_height": "final height (m)",
    "touchdown_speed": "touchdown speed (m/s)",
    "spike_rate": "spike rate (Hz)",
}


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_pareto_figure(entries, path) -> Path:
    """Archive members as time/touchdown points colored by spike rate."""
    values = np.asarray([e.objectives.as_tuple() for e in entries], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if len(values):
        sc = ax.scatter(values[:, 0], values[:, 2], c=values[:, 3],
                        cmap="viridis", s=18, alpha=0.85)
        fig.colorbar(sc, ax=ax, label=_LABELS["spike_rate"])
    ax.set_xlabel(_LABELS["time_to_land"])
    ax.set_ylabel(_LABELS["touchdown_speed"])
    ax.set_title(f"archive front ({len(values)} members)")
    return _finish(fig, path)


def save_generation_curves(stats_rows, path) -> Path:
    """Best and median of each objective across generations."""
    gens = [row["generation"] for row in stats_rows]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5), sharex=True)
    for ax, name in zip(axes.flat, OBJECTIVE_NAMES):
        ax.plot(gens, [row[f"best_{name}"] for row in stats_rows], label="best")
        ax.plot(gens, [row[f"median_{name}"] for row in stats_rows],
                label="median", linestyle="--")
        ax.set_ylabel(_LABELS[name])
        ax.legend(fontsize=8)
    for ax in axes[-1]:
        ax.set_xlabel("generation")
    fig.tight_layout()
    return _finish(fig, path)


def save_robustness_figure(report, path) -> Path:
    """Histogram each objective over the randomized landings."""
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5))
    for k, (ax, name) in enumerate(zip(axes.flat, OBJECTIVE_NAMES)):
        ax.hist(report.samples[:, k], bins=30, color="tab:blue", alpha=0.8)
        ax.axvline(report.medians[k], color="tab:red", label="median")
        ax.set_xlabel(_LABELS[name])
        ax.set_ylabel("landings")
        ax.legend(fontsize=8)
    fig.suptitle(
        f"{report.landings} landings from {report.h0} m, "
        f"success rate {report.success_rate:.2f}"
    )
    fig.tight_layout()
    return _finish(fig, path)


def save_steady_state_figure(d_values, dd_values, matrix, path) -> Path:
    """Setpoint surface over the constant-observation grid."""
    fig, ax = plt.subplots(figsize=(6, 4.8))
    mesh = ax.pcolormesh(
        np.asarray(d_values), np.asarray(dd_values),
        np.asarray(matrix).T, shading="nearest", cmap="coolwarm",
    )
    fig.colorbar(mesh, ax=ax, label="setpoint (g)")
    ax.set_xlabel("observed divergence (1/s)")
    ax.set_ylabel("observed divergence rate (1/s$^2$)")
    ax.set_title("steady-state response")
    return _finish(fig, path)


def save_transient_figure(curve, path) -> Path:
    """Raw closed-loop samples with the moving-average response on top."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(curve.d_obs, curve.t_sp, ".", markersize=2, alpha=0.25,
            color="tab:gray", label="samples")
    ax.plot(curve.smoothed_d, curve.smoothed_t, color="tab:red",
            label=f"moving average ({curve.window})")
    ax.set_xlabel("observed divergence (1/s)")
    ax.set_ylabel("applied setpoint (g)")
    ax.set_title("closed-loop response")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_activity_figure(activity, path) -> Path:
    """Layered network sketch: node color is firing rate, edge style is weight."""
    n_hidden = len(activity.w_out)
    fig, ax = plt.subplots(figsize=(7, 5))
    input_names = ("div+", "div-", "rate+", "rate-")
    in_y = np.linspace(0.15, 0.85, len(input_names))
    hid_y = np.linspace(0.1, 0.9, n_hidden) if n_hidden else []
    out_y = 0.5
    max_w = max(
        (abs(w) for row in activity.w_in for w in row),
        default=1.0,
    )
    max_w = max(max_w, max((abs(w) for w in activity.w_out), default=0.0), 1e-9)
    rate_hi = max(max(activity.rates), 1e-9)
    cmap = plt.get_cmap("inferno")

    def edge(x0, y0, x1, y1, w):
        ax.plot([x0, x1], [y0, y1],
                color="tab:red" if w >= 0 else "tab:blue",
                linewidth=0.4 + 2.2 * abs(w) / max_w, alpha=0.6, zorder=1)

    if n_hidden:
        for k in range(4):
            for j in range(n_hidden):
                edge(0.08, in_y[k], 0.5, hid_y[j], activity.w_in[k][j])
        for j in range(n_hidden):
            edge(0.5, hid_y[j], 0.92, out_y, activity.w_out[j])
        for j in range(n_hidden):
            ax.scatter(0.5, hid_y[j], s=260, zorder=2,
                       color=cmap(activity.rates[j] / rate_hi), edgecolors="black")
            ax.text(0.5, hid_y[j], f"{activity.rates[j]:.0f}", fontsize=6,
                    ha="center", va="center", zorder=3, color="white")
    else:
        for k in range(4):
            edge(0.08, in_y[k], 0.92, out_y, activity.w_in[k][0])
    for k, name in enumerate(input_names):
        ax.scatter(0.08, in_y[k], s=240, color="lightgray", edgecolors="black", zorder=2)
        ax.text(0.08, in_y[k], name, fontsize=6, ha="center", va="center", zorder=3)
    ax.scatter(0.92, out_y, s=280, color=cmap(activity.rates[-1] / rate_hi),
               edgecolors="black", zorder=2)
    ax.text(0.92, out_y, f"{activity.rates[-1]:.0f}", fontsize=6,
            ha="center", va="center", zorder=3, color="white")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.axis("off")
    ax.set_title(f"firing rates (Hz) over {activity.episodes} landings")
    return _finish(fig, path)


def save_comparison_figure(rows, path) -> Path:
    """Median time-to-land and touchdown speed per controller."""
    names = [row["controller"] for row in rows]
    x = np.arange(len(names))
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    axes[0].bar(x, [row["median_time_to_land"] for row in rows], color="tab:blue")
    axes[0].set_ylabel(_LABELS["time_to_land"])
    axes[1].bar(x, [row["median_touchdown_speed"] for row in rows], color="tab:orange")
    axes[1].set_ylabel(_LABELS["touchdown_speed"])
    for ax in axes:
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=20, ha="right")
    fig.tight_layout()
    return _finish(fig, path)
