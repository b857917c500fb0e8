"""Field reconstruction from coefficient snapshots.

The documented contract of the field snapshot format: the value at
(x1, x2) is the sum over modes of

    re * cos(2*pi*(xi*x1 + zeta*x2)) + im * sin(2*pi*(xi*x1 + zeta*x2))

implemented here independently of the engine so the file format itself is
what ties the two sides together.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def field_at(rows: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate the reconstruction at each (x1, x2) row of ``points``."""
    phase = TWO_PI * (np.outer(points[:, 0], rows[:, 0]) + np.outer(points[:, 1], rows[:, 1]))
    return np.cos(phase) @ rows[:, 2] + np.sin(phase) @ rows[:, 3]


def field_on_grid(rows: np.ndarray, n: int) -> np.ndarray:
    """Values on the n x n lattice x_j = j/n (row index: x1, column: x2)."""
    nodes = np.arange(n) / n
    x1 = TWO_PI * np.outer(nodes, rows[:, 0])
    x2 = TWO_PI * np.outer(nodes, rows[:, 1])
    # cos(a+b) = cos a cos b - sin a sin b, applied columnwise per mode
    c1, s1 = np.cos(x1), np.sin(x1)
    c2, s2 = np.cos(x2), np.sin(x2)
    re, im = rows[:, 2], rows[:, 3]
    return ((c1 * re) @ c2.T - (s1 * re) @ s2.T
            + (s1 * im) @ c2.T + (c1 * im) @ s2.T)
