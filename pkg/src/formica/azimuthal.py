"""Analyzer for the autonomous orientation dynamics over a frozen terrain.

For a fixed gradient/Hessian pair the angle performs a potential diffusion
on the circle with unit noise; its stationary law is explicit, i.e.
proportional to exp(chi * H(theta)) with H the steering potential.  This
module evaluates that density, classifies the terrain regime by the shape
of H (uniform exploration, single uphill direction, or the two antipodal
directions of a crest), and validates the density against long-run
Euler-Maruyama occupation statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TWO_PI, HessianSym, drift_B, potential_H, wrap_angle

UNIFORM = "uniform"
UNIMODAL = "unimodal"
BIMODAL = "bimodal"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class TerrainProfile:
    """Frozen terrain data (gradient, Hessian) with the reaction weights."""

    p: np.ndarray
    a: HessianSym
    chi: float
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.p.shape != (2,):
            raise ValueError("gradient must have two components")
        entries = np.array([self.p[0], self.p[1], self.a.a11, self.a.a12, self.a.a22])
        if not np.all(np.isfinite(entries)):
            raise ValueError("terrain entries must be finite")

    def potential(self, thetas):
        return potential_H(thetas, self.p, self.a, self.tau)

    def drift(self, thetas):
        return drift_B(thetas, self.p, self.a, self.tau)


@dataclass
class AngularDensity:
    """Nonnegative density samples on circle nodes, unit trapezoidal mass."""

    thetas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.thetas.shape != self.values.shape:
            raise ValueError("node and value arrays differ in shape")
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")
        if abs(self.mass() - 1.0) > 1e-10:
            raise ValueError(f"density mass {self.mass()} is not 1")

    @property
    def n_grid(self) -> int:
        return len(self.values)

    def mass(self) -> float:
        # periodic trapezoidal rule on equispaced nodes
        return float(np.sum(self.values) * (TWO_PI / len(self.values)))


def grid_nodes(n_grid: int, offset: float = 0.0) -> np.ndarray:
    return offset + TWO_PI * np.arange(n_grid) / n_grid


def stationary_values(profile: TerrainProfile, thetas: np.ndarray) -> np.ndarray:
    """exp(chi*H) on the given equispaced nodes, trapezoid-normalized.

    The exponent is shifted by its maximum before exponentiation so large
    chi*H cannot overflow.
    """
    h = profile.chi * profile.potential(thetas)
    weights = np.exp(h - h.max())
    return weights / (weights.sum() * TWO_PI / len(thetas))


def stationary_density(profile: TerrainProfile, n_grid: int) -> AngularDensity:
    """Explicit stationary density of the autonomous angle dynamics."""
    if n_grid < 16:
        raise ValueError("n_grid must be >= 16")
    thetas = grid_nodes(n_grid)
    return AngularDensity(thetas, stationary_values(profile, thetas))


def _count_strict_maxima(values: np.ndarray) -> int:
    """Strict local maxima on a periodic grid, runs of equal values merged."""
    change = np.flatnonzero(values != np.roll(values, -1))
    if len(change) == 0:
        return 0  # constant profile: no strict maximum
    runs = values[change]  # one representative per plateau, circular order
    peaks = (runs > np.roll(runs, 1)) & (runs > np.roll(runs, -1))
    return int(np.count_nonzero(peaks))


def classify(profile: TerrainProfile, n_grid: int = 1024) -> str:
    """Regime of the stationary density: uniform, unimodal or bimodal.

    The potential is a degree-2 trigonometric polynomial, so any count of
    strict maxima above two signals a numerical artifact and is reported
    as ``degenerate`` rather than silently folded into a regime.
    """
    if n_grid < 256:
        raise ValueError("n_grid must be >= 256")
    h = profile.potential(grid_nodes(n_grid))
    if h.max() - h.min() < 1e-12:
        return UNIFORM
    peaks = _count_strict_maxima(h)
    if peaks == 1:
        return UNIMODAL
    if peaks == 2:
        return BIMODAL
    return DEGENERATE


def simulate_autonomous(profile: TerrainProfile, dt: float, n_steps: int,
                        n_samples: int, rng: np.random.Generator,
                        n_bins: int = 64) -> AngularDensity:
    """Euler-Maruyama occupation histogram of the autonomous angle SDE.

    Unit angular diffusion (noise sqrt(2*dt) per step) as in the explicit
    stationary law.  Samples start uniform on the circle; the first half
    of the run is discarded as burn-in and the second half is pooled over
    all paths into an ``n_bins`` occupation histogram, returned as a
    density on the bin left edges.
    """
    if dt > 1e-2:
        raise ValueError("dt must be <= 1e-2")
    if n_steps * dt < 10.0:
        raise ValueError("n_steps*dt must be >= 10 (burn-in plus mixing)")
    phis = rng.uniform(0.0, TWO_PI, size=n_samples)
    counts = np.zeros(n_bins, dtype=np.int64)
    burn = n_steps // 2
    root = math.sqrt(2.0 * dt)
    bin_scale = n_bins / TWO_PI
    # the drift is a degree-2 trigonometric polynomial, so the hot loop
    # gets by with a single sin/cos pair and the double-angle identities
    k_sin = -profile.chi * dt * profile.p[0]
    k_cos = profile.chi * dt * profile.p[1]
    k_sin2 = 0.5 * profile.chi * dt * profile.tau * (profile.a.a22 - profile.a.a11)
    k_cos2 = profile.chi * dt * profile.tau * profile.a.a12
    for step in range(n_steps):
        sin, cos = np.sin(phis), np.cos(phis)
        move = k_sin * sin + k_cos * cos + k_sin2 * (2.0 * sin * cos) \
            + k_cos2 * (1.0 - 2.0 * sin * sin)
        phis = wrap_angle(phis + move + root * rng.standard_normal(n_samples))
        if step >= burn:
            idx = np.minimum((phis * bin_scale).astype(np.int64), n_bins - 1)
            counts += np.bincount(idx, minlength=n_bins)
    total = counts.sum()
    values = counts * (bin_scale / total)
    return AngularDensity(grid_nodes(n_bins), values)


def l1_distance(density: AngularDensity, other: AngularDensity) -> float:
    """Integral of |f - g| over the circle for densities on matching grids."""
    if density.n_grid != other.n_grid:
        raise ValueError("densities live on different grids")
    return float(np.sum(np.abs(density.values - other.values)) * TWO_PI / density.n_grid)


def empirical_vs_stationary_l1(histogram: AngularDensity, profile: TerrainProfile) -> float:
    """L1 distance between an occupation histogram and the explicit law.

    The explicit density is evaluated at the histogram's bin centers and
    renormalized on those nodes, so both sides discretize the circle the
    same way.
    """
    centers = histogram.thetas + math.pi / histogram.n_grid
    exact = stationary_values(profile, centers)
    return float(np.sum(np.abs(histogram.values - exact)) * TWO_PI / histogram.n_grid)
