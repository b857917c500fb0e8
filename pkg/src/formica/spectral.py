"""Chemical fields on the unit torus as truncated Fourier series.

A field is stored as the complex coefficient grid c[xi, zeta] for integer
frequencies |xi|, |zeta| <= n_f.  Point sources enter through the
coefficients of a heat-regularized point mass, the evaporation/diffusion
dynamics reduce to one implicit-Euler recurrence per mode, and the field
with its first and second derivatives is evaluated at arbitrary points by
summing the series once.

Conventions.  A point mass at x has coefficients exp(+2i*pi*(xi*x1 +
zeta*x2)) times the regularizing decay; evaluation pairs this with the
inverse kernel exp(-2i*pi*(xi*x1 + zeta*x2)), so a deposited bump
reconstructs centered at the depositing point.  For real (Hermitian)
coefficient grids this evaluation coincides with the familiar
Re(c)*cos - Im(c)*sin form up to the sign convention of Im.  The decay
rate per mode is gamma + sigma_c * kappa(xi, zeta), where kappa is the
(positive) Laplacian eigenvalue.  Two rate conventions are supported:

* ``physical``: kappa = 4*pi^2*(xi^2 + zeta^2), the eigenvalue matching
  the exp(2i*pi*k.x) basis on the unit torus (default);
* ``paper``: kappa = xi^2 + zeta^2, reproducing formulas written without
  the 4*pi^2 factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FieldProbe, HessianSym, TorusPoint

RATE_CONVENTIONS = ("physical", "paper")

_FOUR_PI_SQ = 4.0 * math.pi**2


def mode_range(n_f: int) -> np.ndarray:
    """Integer frequencies -n_f..n_f, the index order of coefficient grids."""
    return np.arange(-n_f, n_f + 1)


def laplacian_rates(n_f: int, convention: str = "physical") -> np.ndarray:
    """Per-mode nonnegative decay eigenvalues kappa(xi, zeta), shape (M, M)."""
    if convention not in RATE_CONVENTIONS:
        raise ValueError(f"unknown rate convention {convention!r}")
    k2 = mode_range(n_f) ** 2
    rates = (k2[:, None] + k2[None, :]).astype(float)
    if convention == "physical":
        rates *= _FOUR_PI_SQ
    return rates


@dataclass
class CoefficientGrid:
    """Complex Fourier coefficients c[xi, zeta], |xi|, |zeta| <= n_f.

    Index [xi + n_f, zeta + n_f] holds mode (xi, zeta).  Real fields
    satisfy the Hermitian symmetry c[-xi, -zeta] = conj(c[xi, zeta]); the
    operations in this module preserve it and :meth:`hermitian_defect`
    measures violations.
    """

    n_f: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.n_f < 1:
            raise ValueError("n_f must be >= 1")
        m = 2 * self.n_f + 1
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (m, m):
            raise ValueError(f"expected coefficient shape {(m, m)}, got {self.coeffs.shape}")

    @classmethod
    def zeros(cls, n_f: int) -> "CoefficientGrid":
        return cls(n_f, np.zeros((2 * n_f + 1, 2 * n_f + 1), dtype=complex))

    def copy(self) -> "CoefficientGrid":
        return CoefficientGrid(self.n_f, self.coeffs.copy())

    def mode(self, xi: int, zeta: int) -> complex:
        return complex(self.coeffs[xi + self.n_f, zeta + self.n_f])

    def hermitian_defect(self) -> float:
        """Max absolute mismatch between c[-xi,-zeta] and conj(c[xi,zeta])."""
        flipped = np.conj(self.coeffs[::-1, ::-1])
        return float(np.max(np.abs(self.coeffs - flipped)))


def _point(x) -> np.ndarray:
    if isinstance(x, TorusPoint):
        return x.as_array()
    arr = np.asarray(x, dtype=float)
    if arr.shape != (2,):
        raise ValueError("expected a torus point (x1, x2)")
    return arr


def dirac_coefficients(x, eps: float, sigma_c: float, n_f: int,
                       convention: str = "physical") -> CoefficientGrid:
    """Coefficients of a point mass at x smoothed by the heat flow for time
    sigma_c * eps.

    Mode (xi, zeta) holds exp(2i*pi*(xi*x1 + zeta*x2)) *
    exp(-sigma_c*eps*kappa(xi, zeta)).  Hermitian by construction; the
    reconstructed field has unit mass for any eps >= 0 because only mode
    (0, 0) contributes to the integral.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    x1, x2 = _point(x)
    u, w = _dirac_factors(np.array([[x1, x2]]), eps, sigma_c, n_f, convention)
    return CoefficientGrid(n_f, np.outer(u[0], w[0]))


def _dirac_factors(xs: np.ndarray, eps: float, sigma_c: float, n_f: int,
                   convention: str) -> tuple[np.ndarray, np.ndarray]:
    """Rank-1 factors of point-mass coefficient grids for each row of xs.

    Returns (u, w), each (n, M) complex, with the grid of point i equal to
    outer(u[i], w[i]); the quadratic decay splits exactly across axes.
    """
    if convention not in RATE_CONVENTIONS:
        raise ValueError(f"unknown rate convention {convention!r}")
    k = mode_range(n_f)
    scale = _FOUR_PI_SQ if convention == "physical" else 1.0
    axis_decay = np.exp(-sigma_c * eps * scale * k.astype(float) ** 2)
    u = np.exp(2j * math.pi * np.outer(xs[:, 0], k)) * axis_decay
    w = np.exp(2j * math.pi * np.outer(xs[:, 1], k)) * axis_decay
    return u, w


def decay_step(grid: CoefficientGrid, source: CoefficientGrid, dt: float,
               gamma: float, sigma_c: float,
               convention: str = "physical") -> CoefficientGrid:
    """One implicit-Euler step of evaporation/diffusion with a frozen source.

    Mode-wise c' = (c + dt*s) / (1 + dt*(gamma + sigma_c*kappa)).
    Unconditionally stable; contracts every mode when the source is zero
    and gamma >= 0; preserves Hermitian symmetry of Hermitian inputs.
    """
    if grid.n_f != source.n_f:
        raise ValueError("grid and source truncation orders differ")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    denom = 1.0 + dt * (gamma + sigma_c * laplacian_rates(grid.n_f, convention))
    return CoefficientGrid(grid.n_f, (grid.coeffs + dt * source.coeffs) / denom)


def axpy(dst: CoefficientGrid, scale: float, src: CoefficientGrid) -> CoefficientGrid:
    """Mode-wise dst + scale * src as a new grid."""
    if dst.n_f != src.n_f:
        raise ValueError("grid truncation orders differ")
    return CoefficientGrid(dst.n_f, dst.coeffs + scale * src.coeffs)


def _eval_factors(xs: np.ndarray, n_f: int):
    """Evaluation phase rows and per-axis derivative multipliers.

    E[i, k] = exp(-2i*pi*k*x_i) per axis; multiplying a row by d = -2i*pi*k
    once (twice) turns the summed series into its first (second) derivative
    along that axis.
    """
    k = mode_range(n_f)
    d = -2j * math.pi * k
    e1 = np.exp(-2j * math.pi * np.outer(xs[:, 0], k))
    e2 = np.exp(-2j * math.pi * np.outer(xs[:, 1], k))
    return e1, e2, d


def eval_probe(grid: CoefficientGrid, x) -> FieldProbe:
    """Field value, gradient and Hessian of the truncated series at x.

    One pass over the modes produces all six outputs; the result is real
    for Hermitian grids (the imaginary residue is discarded).
    """
    x1, x2 = _point(x)
    c, g1, g2, h11, h12, h22 = eval_many(grid.coeffs, np.array([[x1, x2]]))
    return FieldProbe(
        c=float(c[0]),
        grad=np.array([g1[0], g2[0]]),
        hess=HessianSym(float(h11[0]), float(h12[0]), float(h22[0])),
    )


def eval_many(coeffs: np.ndarray, xs: np.ndarray):
    """Evaluate one coefficient grid at every row of xs.

    Returns (c, dx1, dx2, dx1x1, dx1x2, dx2x2), each a float array of
    length len(xs).  This is the hot path of the particle loop: three
    mat-vec sweeps over the mode grid and six cheap reductions.
    """
    n_f = (coeffs.shape[0] - 1) // 2
    e1, e2, d = _eval_factors(xs, n_f)
    t = e1 @ coeffs
    tx = (e1 * d) @ coeffs
    txx = (e1 * d * d) @ coeffs
    return (
        np.einsum("nk,nk->n", t, e2).real,
        np.einsum("nk,nk->n", tx, e2).real,
        np.einsum("nk,nk->n", t, e2 * d).real,
        np.einsum("nk,nk->n", txx, e2).real,
        np.einsum("nk,nk->n", tx, e2 * d).real,
        np.einsum("nk,nk->n", t, e2 * d * d).real,
    )


def eval_many_excluding(total: np.ndarray, own: np.ndarray, xs: np.ndarray):
    """Probe (total - own[i]) at xs[i] for every i, without forming the
    difference grids.

    ``own`` has shape (n, M, M); evaluation is linear in the coefficients
    so the per-particle exclusion costs one extra sweep over the modes.
    """
    n_f = (total.shape[0] - 1) // 2
    e1, e2, d = _eval_factors(xs, n_f)
    e1d, e1dd = e1 * d, e1 * d * d
    t = e1 @ total - np.einsum("nm,nmk->nk", e1, own)
    tx = e1d @ total - np.einsum("nm,nmk->nk", e1d, own)
    txx = e1dd @ total - np.einsum("nm,nmk->nk", e1dd, own)
    return (
        np.einsum("nk,nk->n", t, e2).real,
        np.einsum("nk,nk->n", tx, e2).real,
        np.einsum("nk,nk->n", t, e2 * d).real,
        np.einsum("nk,nk->n", txx, e2).real,
        np.einsum("nk,nk->n", tx, e2 * d).real,
        np.einsum("nk,nk->n", t, e2 * d * d).real,
    )


def reconstruct_on_grid(grid: CoefficientGrid, n: int) -> np.ndarray:
    """Field values on the n x n lattice x_j = j/n (row: x1, column: x2)."""
    xs = np.arange(n) / n
    k = mode_range(grid.n_f)
    e = np.exp(-2j * math.pi * np.outer(xs, k))
    return (e @ grid.coeffs @ e.T).real


def write_field_snapshot(path, grid: CoefficientGrid, convention: str) -> None:
    """One row per mode: xi, zeta, Re, Im in plain decimal text.

    The leading header line records the truncation order and the rate
    convention; floats are written in shortest round-trip form so repeated
    runs produce byte-identical files.
    """
    n_f = grid.n_f
    lines = [f"# n_f={n_f} convention={convention}", "xi,zeta,re,im"]
    for xi in range(-n_f, n_f + 1):
        for zeta in range(-n_f, n_f + 1):
            cv = grid.coeffs[xi + n_f, zeta + n_f]
            lines.append(f"{xi},{zeta},{float(cv.real)!r},{float(cv.imag)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field_snapshot(path) -> tuple[CoefficientGrid, str]:
    """Inverse of :func:`write_field_snapshot`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing field snapshot header")
        fields = dict(part.split("=", 1) for part in header[1:].split())
        n_f = int(fields["n_f"])
        convention = fields["convention"]
        fh.readline()  # column names
        grid = CoefficientGrid.zeros(n_f)
        for line in fh:
            if not line.strip():
                continue
            xi_s, zeta_s, re_s, im_s = line.strip().split(",")
            grid.coeffs[int(xi_s) + n_f, int(zeta_s) + n_f] = complex(float(re_s), float(im_s))
    return grid, convention
