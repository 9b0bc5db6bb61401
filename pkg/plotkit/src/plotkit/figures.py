"""Figure builders: parameter traces with set bounds, and FPS snapshots."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import colors as mcolors

from .io import events_from_run, load_run, load_snapshots, nearest_snapshot

PARAM_LABELS = [r"$\theta_l$ (left)", r"$\theta_r$ (right)", r"$\theta_b$ (bow)"]
SERIES_COLORS = ["tab:cyan", "tab:pink", "tab:olive", "tab:purple"]


@dataclass
class PlotSpec:
    """What to render: inputs, selection, labels, output file."""

    csv_paths: list
    out_path: str
    labels: list = field(default_factory=list)
    snapshot_steps: list = field(default_factory=list)
    fault_time: float | None = None
    title: str | None = None


def plot_parameter_traces(spec: PlotSpec) -> Path:
    """One panel per parameter: estimate line, shaded projection band and
    event markers; several runs overlay with matched band/line colors."""
    runs = [load_run(p) for p in spec.csv_paths]
    labels = list(spec.labels) or [Path(p).stem for p in spec.csv_paths]
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    for idx, (df, label) in enumerate(zip(runs, labels)):
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        band = mcolors.to_rgba(color, alpha=0.25)
        for i, ax in enumerate(axes):
            ax.fill_between(
                df["t"], df[f"proj_lo{i}"], df[f"proj_hi{i}"],
                color=band, linewidth=0.0,
                label=f"{label} set bounds" if i == 0 else None,
            )
            ax.plot(
                df["t"], df[f"theta_hat{i}"], color=color, lw=1.4,
                label=f"{label} estimate" if i == 0 else None,
            )
        for ev in events_from_run(df):
            if ev["type"] == "detect":
                for ax in axes:
                    ax.axvline(ev["t"], color=color, ls="--", lw=1.0)
            else:
                axes[ev["axis"]].axvline(ev["t"], color=color, ls=":", lw=1.2)
    if spec.fault_time is not None:
        for ax in axes:
            ax.axvline(spec.fault_time, color="red", ls="--", lw=1.2)
    for i, ax in enumerate(axes):
        ax.set_ylabel(PARAM_LABELS[i])
        ax.set_ylim(-0.05, 1.1)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("time [s]")
    axes[0].legend(loc="lower left", fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def _draw_hull_3d(ax, verts: np.ndarray, color: str):
    from mpl_toolkits.mplot3d.art3d import Poly3DCollection
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(verts)
        faces = [verts[s] for s in hull.simplices]
        ax.add_collection3d(
            Poly3DCollection(
                faces, alpha=0.35, facecolor=color, edgecolor="k", linewidths=0.3
            )
        )
    except QhullError:
        pass  # degenerate (flat) set: points alone
    ax.scatter(*verts.T, color=color, s=12)


def plot_fps_snapshots(spec: PlotSpec) -> Path:
    """Render the feasible-set polytope at the requested timesteps from the
    vertex snapshot sidecar of the (single) input run."""
    if len(spec.csv_paths) != 1:
        raise ValueError("FPS snapshots render one run at a time")
    snaps = load_snapshots(spec.csv_paths[0])
    steps = list(spec.snapshot_steps) or [s["k"] for s in snaps[:: max(1, len(snaps) // 6)]][:6]
    chosen = [nearest_snapshot(snaps, int(k)) for k in steps]
    n = len(chosen)
    ncols = min(3, n)
    nrows = int(np.ceil(n / ncols))
    dim = len(chosen[0]["vertices"][0])
    fig = plt.figure(figsize=(4.2 * ncols, 3.8 * nrows))
    for i, snap in enumerate(chosen):
        verts = np.asarray(snap["vertices"], dtype=float)
        if dim == 3:
            ax = fig.add_subplot(nrows, ncols, i + 1, projection="3d")
            _draw_hull_3d(ax, verts, SERIES_COLORS[0])
            ax.set_xlim(0, 1), ax.set_ylim(0, 1), ax.set_zlim(0, 1)
            ax.set_xlabel(r"$\theta_l$"), ax.set_ylabel(r"$\theta_r$")
            ax.set_zlabel(r"$\theta_b$")
        else:
            ax = fig.add_subplot(nrows, ncols, i + 1)
            order = np.argsort(
                np.arctan2(*(verts - verts.mean(axis=0)).T[::-1])
            )
            poly = plt.Polygon(
                verts[order], closed=True, alpha=0.35,
                facecolor=SERIES_COLORS[0], edgecolor="k",
            )
            ax.add_patch(poly)
            ax.scatter(*verts.T, color=SERIES_COLORS[0], s=12)
            ax.set_xlim(-0.05, 1.05), ax.set_ylim(-0.05, 1.05)
            ax.set_xlabel(r"$\theta_1$"), ax.set_ylabel(r"$\theta_2$")
        t = snap.get("t")
        ax.set_title(f"k = {snap['k']}" + (f"  (t = {t:g} s)" if t is not None else ""))
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out
