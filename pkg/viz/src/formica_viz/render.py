"""Figure panels for particle and finite-difference runs."""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fields import field_on_grid
from .io import (
    SnapshotBundle,
    read_density,
    read_field_1d,
    read_field_coefficients,
    read_particles,
)

FIELD_GRID = 256
ARROW = dict(angles="xy", scale_units="xy", scale=28.0, width=3.2e-3, color="darkorange")


def _frame_data(bundle: SnapshotBundle, step: int):
    t, xs, thetas = read_particles(bundle.path("particles_{step:06d}.csv", step))
    _, rows = read_field_coefficients(bundle.path("field_{step:06d}.txt", step))
    values = field_on_grid(rows, FIELD_GRID)
    return t, xs, thetas, values


def _draw_particle_frame(ax, t, xs, thetas, values, vmax):
    ax.imshow(values.T, origin="lower", extent=(0, 1, 0, 1), cmap="Blues",
              vmin=0.0, vmax=vmax, interpolation="bilinear")
    ax.quiver(xs[:, 0], xs[:, 1], np.cos(thetas), np.sin(thetas), **ARROW)
    ax.plot(xs[:, 0], xs[:, 1], ".", color="darkorange", markersize=2.5)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_title(f"t = {t:g}", fontsize=9)


def render_particles(bundle: SnapshotBundle, frames, out_dir: str,
                     montage: bool = False) -> list:
    """One image per requested frame, plus an optional montage figure.

    The color scale is shared across the requested frames (vmax is the
    global field maximum, vmin 0), so the deepening of the trails is
    visible across panels.
    """
    frames = list(frames)
    if not frames:
        return []
    os.makedirs(out_dir, exist_ok=True)
    data = [_frame_data(bundle, step) for step in frames]
    vmax = max(float(values.max()) for _, _, _, values in data)
    if vmax <= 0:
        vmax = 1.0
    written = []
    for step, (t, xs, thetas, values) in zip(frames, data):
        fig, ax = plt.subplots(figsize=(4, 4), dpi=110)
        _draw_particle_frame(ax, t, xs, thetas, values, vmax)
        name = os.path.join(out_dir, f"frame_{step:06d}.png")
        fig.savefig(name, bbox_inches="tight")
        plt.close(fig)
        written.append(name)
    if montage:
        cols = 4
        rows = math.ceil(len(frames) / cols)
        fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 3.2 * rows), dpi=110)
        axes = np.atleast_1d(axes).ravel()
        for ax in axes[len(frames):]:
            ax.axis("off")
        for ax, (t, xs, thetas, values) in zip(axes, data):
            _draw_particle_frame(ax, t, xs, thetas, values, vmax)
        name = os.path.join(out_dir, "montage.png")
        fig.savefig(name, bbox_inches="tight")
        plt.close(fig)
        written.append(name)
    return written


def _fd_series(bundle: SnapshotBundle, prefix: str):
    times, averages, finals = [], [], None
    fields = []
    for step in bundle.steps:
        t, xs, thetas, rho = read_density(bundle.path(prefix + "_{step:06d}.csv", step))
        tc, xc, c = read_field_1d(bundle.path(prefix.replace("density", "cfield")
                                              + "_{step:06d}.csv", step))
        times.append(t)
        averages.append(rho.sum(axis=1) * (2 * np.pi / rho.shape[1]))
        fields.append(c)
        finals = (xs, thetas, rho)
    return np.array(times), np.array(averages), np.array(fields), finals


def _draw_fd_row(axes, times, averages, fields, final, label=""):
    xs, thetas, rho = final
    im0 = axes[0].imshow(averages.T, origin="lower", aspect="auto",
                         extent=(times[0], times[-1] if len(times) > 1 else times[0] + 1e-9,
                                 0, 1), cmap="viridis")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("x")
    axes[0].set_title(f"{label}angle-integrated density over time", fontsize=9)
    plt.colorbar(im0, ax=axes[0], fraction=0.046)

    log_rho = np.log10(np.maximum(rho, 1e-12))
    im1 = axes[1].imshow(log_rho.T, origin="lower", aspect="auto",
                         extent=(0, 1, 0, 2 * np.pi), cmap="magma")
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("theta")
    axes[1].set_title(f"{label}log-density at terminal time", fontsize=9)
    plt.colorbar(im1, ax=axes[1], fraction=0.046)

    picks = np.unique(np.linspace(0, len(times) - 1, min(5, len(times))).astype(int))
    for rank, idx in enumerate(picks):
        style = ":" if idx == 0 else "-"
        fade = 0.35 + 0.65 * rank / max(len(picks) - 1, 1)
        axes[2].plot(xs, averages[idx], style, color="darkorange", alpha=fade)
        axes[2].plot(xs, fields[idx], style, color="steelblue", alpha=fade)
    axes[2].set_xlabel("x")
    axes[2].set_title(f"{label}density (orange) and field (blue)", fontsize=9)


def render_fd(bundle: SnapshotBundle, out_dir: str) -> list:
    """Three panels per state: density-over-time, terminal log-density,
    and density/field overlays at a few times (initial data dotted)."""
    os.makedirs(out_dir, exist_ok=True)
    prefixes = ["density"] if bundle.mode == "fd" else ["density_alpha", "density_beta"]
    labels = [""] if bundle.mode == "fd" else ["alpha: ", "beta: "]
    fig, axes = plt.subplots(len(prefixes), 3,
                             figsize=(12.5, 3.6 * len(prefixes)), dpi=110)
    axes = np.atleast_2d(axes)
    for row, (prefix, label) in enumerate(zip(prefixes, labels)):
        times, averages, fields, final = _fd_series(bundle, prefix)
        _draw_fd_row(axes[row], times, averages, fields, final, label)
    fig.tight_layout()
    name = os.path.join(out_dir, "fd_panels.png")
    fig.savefig(name)
    plt.close(fig)
    return [name]
