"""Command line: ``formica-viz particles|fd --run DIR [--frames ...] [--montage]``.

Rendering is read-only with respect to the run directory's data files;
images go to ``--out`` (default: a ``figures`` subdirectory of the run).
"""

from __future__ import annotations

import argparse
import os
import sys

from .io import MissingSnapshotError, SnapshotBundle
from .render import render_fd, render_particles


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="formica-viz",
                                     description="Render formica run outputs")
    parser.add_argument("kind", choices=("particles", "fd"))
    parser.add_argument("--run", required=True, help="run directory with manifest.txt")
    parser.add_argument("--frames", type=int, nargs="*", default=None,
                        help="step indices to render (default: every snapshot)")
    parser.add_argument("--montage", action="store_true",
                        help="also write a single multi-panel figure")
    parser.add_argument("--out", default=None, help="image output directory")
    args = parser.parse_args(argv)

    try:
        bundle = SnapshotBundle.open(args.run)
    except MissingSnapshotError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    out_dir = args.out or os.path.join(args.run, "figures")

    try:
        if args.kind == "particles":
            if bundle.mode != "particles":
                print(f"error: run has mode {bundle.mode!r}, expected particles",
                      file=sys.stderr)
                return 1
            frames = args.frames if args.frames is not None else bundle.steps
            written = render_particles(bundle, frames, out_dir, montage=args.montage)
        else:
            if bundle.mode not in ("fd", "fd2state"):
                print(f"error: run has mode {bundle.mode!r}, expected fd or fd2state",
                      file=sys.stderr)
                return 1
            written = render_fd(bundle, out_dir)
    except MissingSnapshotError as err:
        print(f"error: missing snapshot {err}", file=sys.stderr)
        return 1
    for name in written:
        print(name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
