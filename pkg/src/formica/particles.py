"""Interacting-walker Monte-Carlo simulator with spectral chemical fields.

N walkers carry positions and orientations on the torus; each one is
steered by the aggregate chemical field minus its own deposited
contribution.  Per step the walkers move by Euler-Maruyama with the field
frozen, then deposit a regularized point mass (weight 1/(N-1)) at their
new positions while every per-walker coefficient grid advances by the
implicit decay recurrence.  The exclusion field is never summed per
walker: the total grid is maintained incrementally and one subtraction
recovers total-minus-own, keeping the step linear in N.

Determinism: one seeded generator drives the whole run, drawing the
orientation noise block before the position noise block each step, with
rows indexed by walker; summations over walkers use fixed-order
reductions, so outputs are reproducible regardless of threading.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import TWO_PI, HessianSym, ModelParams, drift_B, wrap_angle, wrap_position
from .spectral import (
    CoefficientGrid,
    _dirac_factors,
    axpy,
    eval_many_excluding,
    laplacian_rates,
    write_field_snapshot,
)

INITIAL_LAWS = ("uniform", "dirac", "gaussian_wrapped", "near_trail")
FIELD_INITS = ("zero", "constant", "ridge")


class SimulationInvariantError(RuntimeError):
    """An internal consistency check of the particle system failed."""


@dataclass(frozen=True)
class SimClock:
    """Step counter with its fixed step size; t is always step_index*dt."""

    step_index: int
    dt: float

    def __post_init__(self):
        if self.step_index < 0 or self.dt <= 0:
            raise ValueError("need step_index >= 0 and dt > 0")

    @property
    def t(self) -> float:
        return self.step_index * self.dt

    def advanced(self) -> "SimClock":
        return SimClock(self.step_index + 1, self.dt)


@dataclass
class RngState:
    """Seeded noise source with a documented, thread-independent draw order.

    Per step: one block of orientation normals (walker-indexed), then one
    block of position normals.  Identical seeds reproduce identical
    trajectories bit for bit.
    """

    seed: int
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.generator = np.random.Generator(np.random.PCG64(self.seed))


@dataclass(frozen=True)
class InitialLaw:
    """Named initial distribution of walker states.

    uniform          positions and orientations uniform on their tori
    dirac            every walker at (x0, theta0)
    gaussian_wrapped positions wrapped-normal around x0 with std spread,
                     orientations uniform
    near_trail       positions along the line x2 = x0[1] with transverse
                     std spread, orientations near the two directions
                     tangent to the line
    """

    tag: str
    x0: tuple = (0.5, 0.5)
    theta0: float = 0.0
    spread: float = 0.05

    def __post_init__(self):
        if self.tag not in INITIAL_LAWS:
            raise ValueError(f"unknown initial law {self.tag!r}")


@dataclass(frozen=True)
class FieldInit:
    """Initial chemical field: zero, constant, or a smooth ridge.

    The ridge runs along x1 at x2 = center with Gaussian cross-section of
    std width, built directly in coefficient space.
    """

    tag: str = "zero"
    amplitude: float = 0.0
    center: float = 0.5
    width: float = 0.05

    def __post_init__(self):
        if self.tag not in FIELD_INITS:
            raise ValueError(f"unknown field init {self.tag!r}")

    def build(self, n_f: int) -> CoefficientGrid:
        grid = CoefficientGrid.zeros(n_f)
        if self.tag == "constant":
            grid.coeffs[n_f, n_f] = self.amplitude
        elif self.tag == "ridge":
            zetas = np.arange(-n_f, n_f + 1)
            profile = self.amplitude * np.exp(
                2j * math.pi * zetas * self.center
                - 2.0 * math.pi**2 * (self.width * zetas) ** 2
            )
            grid.coeffs[n_f, :] = profile
        return grid


@dataclass
class ParticleState:
    """Walker positions/orientations plus per-walker and total field grids.

    ``own_fields`` stacks one coefficient grid per walker, shape
    (n, M, M); the total field equals their fixed-order sum up to the
    resynchronization tolerance and is refreshed periodically.
    """

    xs: np.ndarray
    thetas: np.ndarray
    own_fields: np.ndarray
    total_field: CoefficientGrid

    def __post_init__(self):
        if not (len(self.xs) == len(self.thetas) == len(self.own_fields)):
            raise ValueError("state arrays disagree on walker count")

    @property
    def n(self) -> int:
        return len(self.thetas)

    @property
    def n_f(self) -> int:
        return self.total_field.n_f

    def own_field(self, i: int) -> CoefficientGrid:
        return CoefficientGrid(self.n_f, self.own_fields[i].copy())


def init_state(n: int, n_f: int, law: InitialLaw, field_init: FieldInit,
               rng: RngState) -> ParticleState:
    """Draw n i.i.d. walker states and split the initial field evenly.

    Each walker starts owning c0/n, so the total matches c0 exactly and
    every exclusion field equals (1 - 1/n) c0.
    """
    if n < 2:
        raise ValueError("need at least two walkers")
    gen = rng.generator
    if law.tag == "uniform":
        xs = gen.random((n, 2))
        thetas = gen.uniform(0.0, TWO_PI, n)
    elif law.tag == "dirac":
        xs = np.tile(np.asarray(law.x0, dtype=float) % 1.0, (n, 1))
        thetas = np.full(n, wrap_angle(law.theta0))
    elif law.tag == "gaussian_wrapped":
        xs = wrap_position(np.asarray(law.x0) + law.spread * gen.standard_normal((n, 2)))
        thetas = gen.uniform(0.0, TWO_PI, n)
    else:  # near_trail
        xs = np.empty((n, 2))
        xs[:, 0] = gen.random(n)
        xs[:, 1] = wrap_position(law.x0[1] + law.spread * gen.standard_normal(n))
        forward = gen.random(n) < 0.5
        thetas = wrap_angle(np.where(forward, 0.0, math.pi) + 0.3 * gen.standard_normal(n))
    c0 = field_init.build(n_f)
    own = np.tile(c0.coeffs / n, (n, 1, 1))
    total = CoefficientGrid(n_f, own.sum(axis=0))
    return ParticleState(xs=xs, thetas=thetas, own_fields=own, total_field=total)


def exclusion_field(state: ParticleState, i: int) -> CoefficientGrid:
    """Total field minus walker i's own contribution, one axpy."""
    if state.n < 2:
        raise ValueError("exclusion field needs at least two walkers")
    if not 0 <= i < state.n:
        raise IndexError(f"walker index {i} out of range")
    return axpy(state.total_field, -1.0, state.own_field(i))


def em_step(state: ParticleState, params: ModelParams, clock: SimClock,
            rng: RngState, eps: float | None = None,
            convention: str = "physical", resync_every: int = 100) -> ParticleState:
    """Advance every walker and both field layers by one step (in place).

    Movement uses the field frozen at the step start; deposition happens
    at the new positions with per-walker weight 1/(n-1) and regularization
    eps (default dt).  The zero-mode recurrence of the total field is
    checked against its scalar closed form every step, and every
    ``resync_every`` steps the total grid is re-summed from the per-walker
    grids (relative drift above 1e-9 aborts).
    """
    n = state.n
    dt = clock.dt
    if eps is None:
        eps = dt
    gen = rng.generator

    c, g1, g2, h11, h12, h22 = eval_many_excluding(
        state.total_field.coeffs, state.own_fields, state.xs
    )
    grad = np.stack([g1, g2], axis=-1)
    hess = HessianSym(h11, h12, h22)
    drift = drift_B(state.thetas, grad, hess, params.tau)

    theta_noise = gen.standard_normal(n)
    x_noise = gen.standard_normal((n, 2))
    old_thetas = state.thetas
    step_vec = np.stack([np.cos(old_thetas), np.sin(old_thetas)], axis=-1)
    state.thetas = wrap_angle(
        old_thetas + params.chi * drift * dt + math.sqrt(2.0 * params.sigma_theta * dt) * theta_noise
    )
    state.xs = wrap_position(
        state.xs + params.lam * dt * step_vec + math.sqrt(2.0 * params.sigma_x * dt) * x_noise
    )

    weight = 1.0 / (n - 1)
    u, w = _dirac_factors(state.xs, eps, params.sigma_c, state.n_f, convention)
    denom = 1.0 + dt * (params.gamma + params.sigma_c * laplacian_rates(state.n_f, convention))
    old_zero_mode = state.total_field.coeffs[state.n_f, state.n_f]
    state.own_fields += (dt * weight) * (u[:, :, None] * w[:, None, :])
    state.own_fields /= denom[None, :, :]
    source_sum = u.T @ w
    state.total_field = CoefficientGrid(
        state.n_f, (state.total_field.coeffs + dt * weight * source_sum) / denom
    )

    expected = (old_zero_mode.real + dt * n * weight) / (1.0 + dt * params.gamma)
    actual = state.total_field.coeffs[state.n_f, state.n_f]
    if abs(actual - expected) > 1e-12 * max(1.0, abs(expected)):
        raise SimulationInvariantError(
            f"zero-mode recurrence violated: {actual} vs {expected}"
        )

    if resync_every > 0 and (clock.step_index + 1) % resync_every == 0:
        resync_total_field(state)
    return state


def resync_total_field(state: ParticleState, tolerance: float = 1e-9) -> float:
    """Re-sum the per-walker grids into the total, returning the drift.

    The fixed-order reduction keeps the result thread-independent; drift
    beyond the tolerance means the incremental total went bad and aborts.
    """
    summed = np.add.reduce(state.own_fields, axis=0)
    scale = max(float(np.max(np.abs(summed))), 1e-300)
    drift = float(np.max(np.abs(summed - state.total_field.coeffs))) / scale
    if drift > tolerance:
        raise SimulationInvariantError(
            f"total field drifted {drift:.3e} from the per-walker sum"
        )
    state.total_field = CoefficientGrid(state.n_f, summed)
    return drift


@dataclass(frozen=True)
class ParticleSimSpec:
    """Everything a particle run needs besides the output location."""

    params: ModelParams
    n: int
    n_f: int
    dt: float
    n_steps: int
    law: InitialLaw = InitialLaw("uniform")
    field_init: FieldInit = FieldInit("zero")
    eps: float | None = None
    convention: str = "physical"
    resync_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n_f < 1 or self.dt <= 0 or self.n_steps < 0:
            raise ValueError("invalid particle simulation sizes")


@dataclass
class ParticleRunResult:
    state: ParticleState
    snapshot_steps: list
    particle_files: list
    field_files: list
    diagnostics: dict


def write_particle_snapshot(path, step: int, t: float, state: ParticleState) -> None:
    """CSV rows step,t,i,x1,x2,theta in shortest round-trip decimal form."""
    lines = ["step,t,i,x1,x2,theta"]
    for i in range(state.n):
        lines.append(
            f"{step},{float(t)!r},{i},{float(state.xs[i, 0])!r},"
            f"{float(state.xs[i, 1])!r},{float(state.thetas[i])!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def run(spec: ParticleSimSpec, out_dir=None, snapshot_steps=None) -> ParticleRunResult:
    """Advance n_steps, emitting snapshots on the given step schedule.

    The initial state is always snapshot 0.  Wall time per step is
    recorded for the cost-scaling diagnostic.  With ``out_dir`` set, each
    snapshot writes a walker table and the total-field coefficients.
    """
    rng = RngState(spec.seed)
    state = init_state(spec.n, spec.n_f, spec.law, spec.field_init, rng)
    if snapshot_steps is None:
        snapshot_steps = [spec.n_steps] if spec.n_steps else []
    wanted = {int(s) for s in snapshot_steps if 0 < s <= spec.n_steps}

    particle_files, field_files, taken = [], [], []

    def emit(step_index: int, current: ParticleState):
        taken.append(step_index)
        if out_dir is None:
            return
        pfile = f"{out_dir}/particles_{step_index:06d}.csv"
        ffile = f"{out_dir}/field_{step_index:06d}.txt"
        write_particle_snapshot(pfile, step_index, step_index * spec.dt, current)
        write_field_snapshot(ffile, current.total_field, spec.convention)
        particle_files.append(pfile)
        field_files.append(ffile)

    emit(0, state)
    clock = SimClock(0, spec.dt)
    wall_ms = np.empty(spec.n_steps)
    for k in range(spec.n_steps):
        began = time.perf_counter()
        state = em_step(state, spec.params, clock, rng, spec.eps,
                        spec.convention, spec.resync_every)
        wall_ms[k] = (time.perf_counter() - began) * 1e3
        clock = clock.advanced()
        if clock.step_index in wanted:
            emit(clock.step_index, state)

    diagnostics = {"wall_ms": wall_ms}
    return ParticleRunResult(
        state=state,
        snapshot_steps=taken,
        particle_files=particle_files,
        field_files=field_files,
        diagnostics=diagnostics,
    )
