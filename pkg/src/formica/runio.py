"""Run artifacts: manifests, diagnostics tables, output verification.

A run directory contains one ``manifest.txt`` (key=value lines, written
first and finalized last), the snapshot files the mode produces, and a
``diagnostics.csv`` written at the end.  Manifests are deterministic:
no timestamps, keys sorted, floats in shortest round-trip form.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_manifest(path, entries: dict) -> None:
    lines = [f"{key}={format_value(entries[key])}" for key in sorted(entries)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                out[key] = value
    return out


def write_table(path, columns: dict) -> None:
    """CSV with shortest round-trip floats; columns share one length."""
    names = list(columns)
    length = len(columns[names[0]]) if names else 0
    lines = [",".join(names)]
    for i in range(length):
        lines.append(",".join(format_value(_pyval(columns[name][i])) for name in names))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _pyval(value):
    if hasattr(value, "item"):
        return value.item()
    return value


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class RunOutput:
    """What a finished run left on disk."""

    out_dir: str
    manifest_path: str
    snapshot_files: list = field(default_factory=list)
    diagnostics_path: str | None = None
    extras: dict = field(default_factory=dict)

    def verify(self, expected_hash: str | None = None) -> None:
        """Every referenced file exists; the manifest hash matches the config."""
        if not os.path.isfile(self.manifest_path):
            raise FileNotFoundError(self.manifest_path)
        manifest = read_manifest(self.manifest_path)
        for name in self.snapshot_files:
            if not os.path.isfile(name):
                raise FileNotFoundError(name)
        if self.diagnostics_path and not os.path.isfile(self.diagnostics_path):
            raise FileNotFoundError(self.diagnostics_path)
        if expected_hash is not None and manifest.get("config_hash") != expected_hash:
            raise ValueError("manifest config hash does not match the configuration")
