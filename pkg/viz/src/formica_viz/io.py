"""Readers for formica run directories.

Everything here is read-only: a bundle is discovered from the manifest
and the snapshot naming scheme, ordered by step index.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np


class MissingSnapshotError(FileNotFoundError):
    """A frame was requested for which no snapshot file exists."""


def read_manifest(path: str) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                out[key] = value
    return out


@dataclass
class SnapshotBundle:
    """A run directory with its mode and step-ordered snapshot index."""

    run_dir: str
    mode: str
    manifest: dict
    steps: list = field(default_factory=list)

    @classmethod
    def open(cls, run_dir: str) -> "SnapshotBundle":
        manifest_path = os.path.join(run_dir, "manifest.txt")
        if not os.path.isfile(manifest_path):
            raise MissingSnapshotError(manifest_path)
        manifest = read_manifest(manifest_path)
        mode = manifest.get("mode", "")
        pattern = {
            "particles": r"particles_(\d+)\.csv",
            "fd": r"density_(\d+)\.csv",
            "fd2state": r"density_alpha_(\d+)\.csv",
        }.get(mode)
        steps = []
        if pattern is not None:
            rx = re.compile(pattern)
            for name in os.listdir(run_dir):
                m = rx.fullmatch(name)
                if m:
                    steps.append(int(m.group(1)))
        return cls(run_dir=run_dir, mode=mode, manifest=manifest, steps=sorted(steps))

    def path(self, template: str, step: int) -> str:
        name = os.path.join(self.run_dir, template.format(step=step))
        if not os.path.isfile(name):
            raise MissingSnapshotError(name)
        return name


def read_particles(path: str):
    """Walker snapshot -> (t, xs (n,2), thetas (n,))."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return float(rows[0, 1]), rows[:, 3:5], rows[:, 5]


def read_field_coefficients(path: str):
    """Field snapshot -> (n_f, coefficient rows (xi, zeta, re, im))."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing field snapshot header")
        fields = dict(part.split("=", 1) for part in header[1:].split())
        rows = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return int(fields["n_f"]), rows


def read_density(path: str):
    """Density snapshot -> (t, x nodes, theta nodes, rho (n_x, n_theta))."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    xs = np.unique(rows[:, 1])
    thetas = np.unique(rows[:, 2])
    rho = rows[:, 3].reshape(len(xs), len(thetas))
    return float(rows[0, 0]), xs, thetas, rho


def read_field_1d(path: str):
    """1D field snapshot -> (t, x nodes, c values)."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return float(rows[0, 0]), rows[:, 1], rows[:, 2]
