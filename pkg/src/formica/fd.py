"""Semi-implicit finite differences for the reduced kinetic system.

Solutions constant in the second spatial coordinate live on the periodic
strip (x, theta) in [0,1) x [0,2*pi).  The density obeys angular and
spatial diffusion, angular advection by the steering drift evaluated on
the 1D chemical field, and transport at the walking speed projected on
the remaining axis; the field obeys evaporation/diffusion with the
angle-integrated density as source.

One step freezes the drift: the field advances implicitly (periodic
tridiagonal solve), the drift is rebuilt from the new field by centered
differences, and the density advances implicitly with the full linearized
operator (sparse solve by iterative refinement against a cached LU
factorization, residual verified at 1e-12).  Advection is written in
conservative flux form, so the discrete operator has vanishing column
sums and mass is conserved to solver precision.  A two-state extension
couples two such densities through position-dependent exchange rates and
an orientation transition operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import TWO_PI, ModelParams

NEGATIVE_TOLERANCE = 1e-10  # fraction of max density treated as rounding


class FDSolverError(RuntimeError):
    """Linear solver failed to reach the requested residual."""


class NegativeDensityError(RuntimeError):
    """Density went negative beyond the rounding tolerance."""


def solve_cyclic_tridiagonal(lower, diag, upper, rhs):
    """Solve a periodic tridiagonal system.

    Row i reads lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i]
    with periodic index wrap, so lower[0] couples to x[n-1] and
    upper[n-1] to x[0].  The corner entries are removed by a rank-one
    (Sherman-Morrison) correction of the plain Thomas solve; no pivoting,
    which is safe for the diagonally dominant systems produced here.
    """
    lower = np.asarray(lower, dtype=float)
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = len(diag)
    if n < 3:
        raise ValueError("cyclic tridiagonal systems need n >= 3")
    alpha = upper[n - 1]  # A[n-1, 0]
    beta = lower[0]  # A[0, n-1]
    gamma = -diag[0]
    b = diag.copy()
    b[0] -= gamma
    b[n - 1] -= alpha * beta / gamma
    u = np.zeros(n)
    u[0] = gamma
    u[n - 1] = alpha
    x = _thomas(lower, b, upper, rhs)
    z = _thomas(lower, b, upper, u)
    factor = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma)
    return x - factor * z


def _thomas(lower, diag, upper, rhs):
    n = len(diag)
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


@dataclass(frozen=True)
class SolverOptions:
    """Discretization switches recorded in run manifests."""

    theta_upwind: bool = False
    verbatim: bool = False
    negative_policy: str = "abort"  # or "clip"
    residual_tol: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self):
        if self.negative_policy not in ("abort", "clip"):
            raise ValueError("negative_policy must be 'abort' or 'clip'")


@dataclass
class DensityGrid:
    """Density samples rho(x_j, theta_k) with the companion 1D field c(x_j)."""

    rho: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.rho.ndim != 2 or self.c.shape != (self.rho.shape[0],):
            raise ValueError("rho must be (n_x, n_theta) with c of length n_x")
        if not (np.all(np.isfinite(self.rho)) and np.all(np.isfinite(self.c))):
            raise ValueError("non-finite grid data")

    @property
    def n_x(self) -> int:
        return self.rho.shape[0]

    @property
    def n_theta(self) -> int:
        return self.rho.shape[1]

    @property
    def dx(self) -> float:
        return 1.0 / self.n_x

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.n_theta

    def mass(self) -> float:
        return float(self.rho.sum() * self.dx * self.dtheta)

    def theta_average(self) -> np.ndarray:
        """Angle-integrated density, one value per x node."""
        return self.rho.sum(axis=1) * self.dtheta

    def copy(self) -> "DensityGrid":
        return DensityGrid(self.rho.copy(), self.c.copy())


def x_nodes(n_x: int) -> np.ndarray:
    return np.arange(n_x) / n_x

def theta_nodes(n_theta: int) -> np.ndarray:
    return TWO_PI * np.arange(n_theta) / n_theta


def uniform_grid(n_x: int, n_theta: int, params: ModelParams, mass: float = 1.0,
                 balanced_field: bool = True) -> DensityGrid:
    """Constant density of the given total mass with its equilibrium field.

    The balancing constant mu * mass / gamma makes the pair an exact
    steady state of :func:`step`.
    """
    rho = np.full((n_x, n_theta), mass / TWO_PI)
    c_star = params.mu * mass / params.gamma if balanced_field and params.gamma > 0 else 0.0
    return DensityGrid(rho, np.full(n_x, c_star))


def _solve_field(c, source, dt, diffusion, gamma, dx):
    """(1 + dt*gamma - dt*diffusion*Dxx) c' = c + dt*source, periodic."""
    n = len(c)
    k = dt * diffusion / dx**2
    lower = np.full(n, -k)
    upper = np.full(n, -k)
    diag = np.full(n, 1.0 + dt * gamma + 2.0 * k)
    return solve_cyclic_tridiagonal(lower, diag, upper, c + dt * source)


def _centered_dx(values, dx):
    return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * dx)


def _centered_dxx(values, dx):
    return (np.roll(values, -1) - 2.0 * values + np.roll(values, 1)) / dx**2


def drift_on_field(c, dx, n_theta, params: ModelParams, verbatim: bool = False,
                   extra_ddx=None, extra_weight: float = 0.0) -> np.ndarray:
    """Steering drift at the half-offset angle nodes from a 1D field.

    Rows are x nodes, columns the angles theta_k + dtheta/2 where the
    advective fluxes live.  The default couples the field gradient with
    weight 1 and the curvature with weight tau, times chi and the carrier
    speed on the transport term elsewhere; ``verbatim`` instead puts the
    speed on both field terms and drops tau, reproducing the reduced
    system exactly as printed.  ``extra_ddx`` adds a preferred-direction
    term extra_weight * (-sin theta) * extra_ddx(x).
    """
    dc = _centered_dx(c, dx)
    d2c = _centered_dxx(c, dx)
    th = theta_nodes(n_theta) + math.pi / n_theta
    sin, cos = np.sin(th), np.cos(th)
    if verbatim:
        grad_w, curv_w = params.lam, params.lam
    else:
        grad_w, curv_w = 1.0, params.tau
    drift = params.chi * (
        -np.outer(dc, sin) * grad_w - np.outer(d2c, sin * cos) * curv_w
    )
    if extra_ddx is not None:
        drift = drift + extra_weight * np.outer(extra_ddx, -sin)
    return drift


@lru_cache(maxsize=8)
def _stencil_indices(n_x: int, n_theta: int):
    """COO index pattern of the five-point periodic stencil, cached."""
    n = n_x * n_theta
    m = np.arange(n)
    j, k = divmod(m, n_theta)
    center = m
    theta_plus = j * n_theta + (k + 1) % n_theta
    theta_minus = j * n_theta + (k - 1) % n_theta
    x_plus = ((j + 1) % n_x) * n_theta + k
    x_minus = ((j - 1) % n_x) * n_theta + k
    rows = np.concatenate([m] * 5)
    cols = np.concatenate([center, theta_plus, theta_minus, x_plus, x_minus])
    return rows, cols


_factor_cache: dict = {}


def _solve_implicit(matrix, rhs, options: SolverOptions, slot: str):
    """Solve the implicit system, reusing a frozen factorization.

    The operator changes only through the slowly varying drift, so the LU
    factorization of a recent step's matrix is an excellent
    preconditioner: iterative refinement against it usually converges in
    a few sweeps.  On a miss or a stall the current matrix is refactored
    (slots keep single-state and the two exchange states apart).  The
    returned solution always satisfies the residual tolerance or
    :class:`FDSolverError` is raised.
    """
    tol = options.residual_tol * max(float(np.linalg.norm(rhs)), 1e-300)
    budget = max(8, min(64, options.max_iter))
    entry = _factor_cache.get(slot)
    if entry is not None and entry.shape == matrix.shape:
        x = entry.solve(rhs)
        for _ in range(budget):
            r = rhs - matrix @ x
            if np.linalg.norm(r) <= tol:
                return x
            x = x + entry.solve(r)
    # symmetric-pattern ordering roughly halves fill for this stencil
    lu = spla.splu(matrix.tocsc(), permc_spec="MMD_AT_PLUS_A")
    _factor_cache[slot] = lu
    x = lu.solve(rhs)
    for _ in range(4):
        r = rhs - matrix @ x
        residual = np.linalg.norm(r)
        if residual <= tol:
            return x
        x = x + lu.solve(r)
    raise FDSolverError(
        f"density solve did not converge: residual {residual:.3e}, allowed {tol:.3e}"
    )


def _implicit_density_step(rho, b_half, params: ModelParams, dt,
                           options: SolverOptions, transport_speed: float,
                           slot: str = "single"):
    """Solve (I - dt*L) rho' = rho for the frozen-drift linear operator L.

    L collects angular/spatial diffusion, conservative angular advection
    by ``b_half`` (values at the half-offset angle nodes) and x-transport
    at transport_speed * cos(theta).  Column sums of L vanish, so the
    solve conserves mass up to the linear-solver residual.
    """
    n_x, n_theta = rho.shape
    dx = 1.0 / n_x
    dtheta = TWO_PI / n_theta
    cos_nodes = np.cos(theta_nodes(n_theta))

    s_theta = params.sigma_theta / dtheta**2
    s_x = params.sigma_x / dx**2
    b_plus_half = b_half  # B at theta_{k+1/2}
    b_minus_half = np.roll(b_half, 1, axis=1)  # B at theta_{k-1/2}

    if options.theta_upwind:
        bp_p, bm_p = np.maximum(b_plus_half, 0.0), np.minimum(b_plus_half, 0.0)
        bp_m, bm_m = np.maximum(b_minus_half, 0.0), np.minimum(b_minus_half, 0.0)
        adv_center = (-bp_p + bm_m) / dtheta
        adv_tplus = -bm_p / dtheta
        adv_tminus = bp_m / dtheta
    else:
        adv_center = (-b_plus_half + b_minus_half) / (2.0 * dtheta)
        adv_tplus = -b_plus_half / (2.0 * dtheta)
        adv_tminus = b_minus_half / (2.0 * dtheta)

    transport = transport_speed * cos_nodes / (2.0 * dx)
    ones = np.ones((n_x, n_theta))

    l_center = (-2.0 * s_theta - 2.0 * s_x) * ones + adv_center
    l_tplus = s_theta * ones + adv_tplus
    l_tminus = s_theta * ones + adv_tminus
    l_xplus = s_x * ones - transport * ones
    l_xminus = s_x * ones + transport * ones

    data = np.concatenate([
        (1.0 - dt * l_center).ravel(),
        (-dt * l_tplus).ravel(),
        (-dt * l_tminus).ravel(),
        (-dt * l_xplus).ravel(),
        (-dt * l_xminus).ravel(),
    ])
    rows, cols = _stencil_indices(n_x, n_theta)
    matrix = sp.csr_matrix((data, (rows, cols)), shape=(rho.size, rho.size))
    solution = _solve_implicit(matrix, rho.ravel(), options, slot)
    return solution.reshape(n_x, n_theta)


def _apply_negative_policy(rho, policy: str):
    """Enforce nonnegativity up to rounding; clip (mass-preserving) or abort."""
    floor = rho.min()
    if floor >= 0.0:
        return rho
    peak = max(rho.max(), 0.0)
    if floor < -NEGATIVE_TOLERANCE * max(peak, 1e-300):
        if policy == "abort":
            raise NegativeDensityError(
                f"density reached {floor:.3e} (max {peak:.3e}); "
                "rerun with the clip policy or upwind advection"
            )
        clipped = np.maximum(rho, 0.0)
        scale = rho.sum() / clipped.sum()
        return clipped * scale
    return np.maximum(rho, 0.0) * (rho.sum() / np.maximum(rho, 0.0).sum())


def step(grid: DensityGrid, params: ModelParams, dt: float,
         options: SolverOptions = SolverOptions()) -> DensityGrid:
    """One splitting step: implicit field, frozen drift, implicit density."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if dt > 0.1:
        raise ValueError("dt must be <= 0.1 for splitting accuracy")
    c_new = _solve_field(grid.c, params.mu * grid.theta_average(), dt,
                         params.sigma_c, params.gamma, grid.dx)
    b_half = drift_on_field(c_new, grid.dx, grid.n_theta, params, options.verbatim)
    speed = 1.0 if options.verbatim else params.lam
    rho_new = _implicit_density_step(grid.rho, b_half, params, dt, options, speed)
    rho_new = _apply_negative_policy(rho_new, options.negative_policy)
    return DensityGrid(rho_new, c_new)


@dataclass
class FdRunResult:
    grid: DensityGrid
    converged: bool
    t_stop: float
    diagnostics: dict


def run_to_steady(grid: DensityGrid, params: ModelParams, dt: float, t_max: float,
                  tol: float, options: SolverOptions = SolverOptions(),
                  snapshot_hook=None, min_steps: int = 0) -> FdRunResult:
    """Step until the max-norm increment per unit time drops below tol.

    Records mass, density floor and the L2/L4/Linf norms of the
    angle-integrated density every step.  ``snapshot_hook(step, t, grid)``
    is called after every step; the caller decides which steps to keep.
    ``min_steps`` forces at least that many steps even if the increment
    test would stop earlier.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    diagnostics = {key: [] for key in ("t", "mass", "min_rho", "increment",
                                       "avg_l2", "avg_l4", "avg_linf")}
    converged = False
    t = 0.0
    step_index = 0
    current = grid
    while t < t_max - 1e-12 * max(t_max, 1.0):
        new = step(current, params, dt, options)
        t = (step_index + 1) * dt
        increment = float(np.max(np.abs(new.rho - current.rho)) / dt)
        avg = new.theta_average()
        diagnostics["t"].append(t)
        diagnostics["mass"].append(new.mass())
        diagnostics["min_rho"].append(float(new.rho.min()))
        diagnostics["increment"].append(increment)
        diagnostics["avg_l2"].append(_lp_norm(avg, 2.0, new.dx))
        diagnostics["avg_l4"].append(_lp_norm(avg, 4.0, new.dx))
        diagnostics["avg_linf"].append(float(np.max(np.abs(avg))))
        current = new
        step_index += 1
        if snapshot_hook is not None:
            snapshot_hook(step_index, t, current)
        if increment < tol and step_index >= min_steps:
            converged = True
            break
    diagnostics = {key: np.asarray(val) for key, val in diagnostics.items()}
    return FdRunResult(grid=current, converged=converged, t_stop=t, diagnostics=diagnostics)


def _lp_norm(values, p, weight):
    if p == math.inf:
        return float(np.max(np.abs(values)))
    return float((np.sum(np.abs(values) ** p) * weight) ** (1.0 / p))


def averaging_diagnostic(grids, p) -> np.ndarray:
    """Discrete Lp norms of the angle-integrated density over a history.

    p is 2, 4 or inf.  The interesting output is the envelope: the series
    must stay bounded along a run regardless of the drift.
    """
    if p not in (2, 4, math.inf):
        raise ValueError("p must be 2, 4 or inf")
    out = []
    for grid in grids:
        avg = grid.theta_average()
        out.append(_lp_norm(avg, float(p), grid.dx))
    return np.asarray(out)


# -- two-state extension ----------------------------------------------------


@dataclass(frozen=True)
class TransitionOp:
    """Orientation transition applied to densities when switching state.

    identity leaves the angle alone, u_turn rotates by pi (exact on even
    grids), convolution smears by a normalized angular kernel.  All three
    are positive and preserve the angular mass.
    """

    tag: str
    kernel: np.ndarray | None = None

    def __post_init__(self):
        if self.tag not in ("identity", "u_turn", "convolution"):
            raise ValueError(f"unknown transition {self.tag!r}")
        if self.tag == "convolution":
            if self.kernel is None or np.any(np.asarray(self.kernel) < 0):
                raise ValueError("convolution needs a nonnegative kernel")
            kernel = np.asarray(self.kernel, dtype=float)
            dtheta = TWO_PI / len(kernel)
            object.__setattr__(self, "kernel", kernel / (kernel.sum() * dtheta))

    @classmethod
    def identity(cls) -> "TransitionOp":
        return cls("identity")

    @classmethod
    def u_turn(cls) -> "TransitionOp":
        return cls("u_turn")

    @classmethod
    def convolution(cls, kernel) -> "TransitionOp":
        return cls("convolution", np.asarray(kernel, dtype=float))

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply along the last (angle) axis."""
        n = values.shape[-1]
        if self.tag == "identity":
            return values.copy()
        if self.tag == "u_turn":
            if n % 2:
                raise ValueError("u_turn needs an even angle grid")
            return np.roll(values, n // 2, axis=-1)
        if len(self.kernel) != n:
            raise ValueError("kernel grid does not match the angle grid")
        dtheta = TWO_PI / n
        spec = np.fft.rfft(values, axis=-1) * np.fft.rfft(self.kernel) * dtheta
        return np.fft.irfft(spec, n, axis=-1)


@dataclass(frozen=True)
class ProductionSpec:
    """Field sources as nonnegative linear maps of the two state densities.

    State alpha's field source is a_own * avg_alpha + a_other * avg_beta
    and symmetrically for beta; linear with zero at zero, which is what
    the well-posedness assumptions ask of the production operators.
    """

    a_own: float = 1.0
    a_other: float = 0.0
    b_own: float = 1.0
    b_other: float = 0.0

    def __post_init__(self):
        if min(self.a_own, self.a_other, self.b_own, self.b_other) < 0:
            raise ValueError("production coefficients must be >= 0")


@dataclass(frozen=True)
class SmellField:
    """Stationary guidance field and its x-derivative on the grid."""

    d: np.ndarray
    ddx: np.ndarray


def smell_field(rate_samples, gamma_a: float, sigma_a: float) -> SmellField:
    """Equilibrium smell field for a source profile: (gamma_a - sigma_a*Dxx) d = rate.

    Solved by the same periodic tridiagonal machinery as the chemical
    field; the returned x-derivative (centered differences) is what the
    preferred-direction drift consumes.
    """
    if gamma_a <= 0:
        raise ValueError("gamma_a must be > 0")
    rate = np.asarray(rate_samples, dtype=float)
    n = len(rate)
    dx = 1.0 / n
    k = sigma_a / dx**2
    d = solve_cyclic_tridiagonal(
        np.full(n, -k), np.full(n, gamma_a + 2.0 * k), np.full(n, -k), rate
    )
    return SmellField(d=d, ddx=_centered_dx(d, dx))


@dataclass
class TwoStateGrid:
    """Two coupled densities with their chemical fields."""

    rho_alpha: np.ndarray
    rho_beta: np.ndarray
    c_alpha: np.ndarray
    c_beta: np.ndarray

    def __post_init__(self):
        self.rho_alpha = np.asarray(self.rho_alpha, dtype=float)
        self.rho_beta = np.asarray(self.rho_beta, dtype=float)
        self.c_alpha = np.asarray(self.c_alpha, dtype=float)
        self.c_beta = np.asarray(self.c_beta, dtype=float)
        if self.rho_alpha.shape != self.rho_beta.shape:
            raise ValueError("state densities must share a grid")

    @property
    def n_x(self) -> int:
        return self.rho_alpha.shape[0]

    @property
    def n_theta(self) -> int:
        return self.rho_alpha.shape[1]

    @property
    def dx(self) -> float:
        return 1.0 / self.n_x

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.n_theta

    def total_mass(self) -> float:
        return float((self.rho_alpha + self.rho_beta).sum() * self.dx * self.dtheta)

    def component(self, name: str) -> DensityGrid:
        if name == "alpha":
            return DensityGrid(self.rho_alpha.copy(), self.c_alpha.copy())
        return DensityGrid(self.rho_beta.copy(), self.c_beta.copy())


@dataclass(frozen=True)
class TwoStateProblem:
    """Exchange rates, transition operator, production and guidance data."""

    alpha: np.ndarray  # switch rate alpha(x) out of state alpha
    beta: np.ndarray  # switch rate beta(x) out of state beta
    j_op: TransitionOp
    production: ProductionSpec = ProductionSpec()
    smell_alpha: SmellField | None = None
    smell_beta: SmellField | None = None
    chi_a: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if np.any(self.alpha < 0) or np.any(self.beta < 0):
            raise ValueError("exchange rates must be >= 0")


def step_two_state(grid: TwoStateGrid, params: ModelParams, problem: TwoStateProblem,
                   dt: float, options: SolverOptions = SolverOptions()) -> TwoStateGrid:
    """One step of the two-state system.

    Both densities advance exactly as in :func:`step` under their own
    drifts (chemical field plus preferred-direction term); the exchange
    -alpha*rho_a + beta*J[rho_b] and its mirror are then applied as one
    explicit substep at the post-transport time level, so the two
    discrete exchange terms cancel exactly in the total-mass balance.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if dt > 0.1:
        raise ValueError("dt must be <= 0.1 for splitting accuracy")
    dtheta = grid.dtheta
    avg_a = grid.rho_alpha.sum(axis=1) * dtheta
    avg_b = grid.rho_beta.sum(axis=1) * dtheta
    prod = problem.production
    source_a = prod.a_own * avg_a + prod.a_other * avg_b
    source_b = prod.b_own * avg_b + prod.b_other * avg_a
    dx = grid.dx
    c_a = _solve_field(grid.c_alpha, source_a, dt, params.sigma_c, params.gamma, dx)
    c_b = _solve_field(grid.c_beta, source_b, dt, params.sigma_c, params.gamma, dx)

    ddx_a = problem.smell_alpha.ddx if problem.smell_alpha is not None else None
    ddx_b = problem.smell_beta.ddx if problem.smell_beta is not None else None
    b_half_a = drift_on_field(c_a, dx, grid.n_theta, params, options.verbatim,
                              extra_ddx=ddx_a, extra_weight=problem.chi_a)
    b_half_b = drift_on_field(c_b, dx, grid.n_theta, params, options.verbatim,
                              extra_ddx=ddx_b, extra_weight=problem.chi_a)
    speed = 1.0 if options.verbatim else params.lam
    rho_a = _implicit_density_step(grid.rho_alpha, b_half_a, params, dt, options, speed, "alpha")
    rho_b = _implicit_density_step(grid.rho_beta, b_half_b, params, dt, options, speed, "beta")

    alpha = problem.alpha[:, None]
    beta = problem.beta[:, None]
    j_a = problem.j_op.apply(rho_a)
    j_b = problem.j_op.apply(rho_b)
    rho_a_new = rho_a + dt * (-alpha * rho_a + beta * j_b)
    rho_b_new = rho_b + dt * (-beta * rho_b + alpha * j_a)
    rho_a_new = _apply_negative_policy(rho_a_new, options.negative_policy)
    rho_b_new = _apply_negative_policy(rho_b_new, options.negative_policy)
    return TwoStateGrid(rho_a_new, rho_b_new, c_a, c_b)
