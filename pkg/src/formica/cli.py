"""Command-line experiment runner.

Usage: ``formica <mode> --config <path> [--seed S] [--out DIR]
[--preset NAME] [--jobs K]``.  Runs write a manifest first, snapshots
incrementally and diagnostics last; a failed run leaves the manifest with
status=failed and the reason.  Exit codes: 0 success, 2 configuration
error, 3 invariant abort, 4 I/O error.  The environment variable
FORMICA_OUT overrides the output root directory.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys

import numpy as np

from . import __version__
from .azimuthal import (
    TerrainProfile,
    classify,
    empirical_vs_stationary_l1,
    simulate_autonomous,
    stationary_density,
)
from .config import ConfigError, RunConfig, parse_config, serialize
from .core import TWO_PI, HessianSym
from .fd import (
    DensityGrid,
    FDSolverError,
    NegativeDensityError,
    ProductionSpec,
    TransitionOp,
    TwoStateGrid,
    TwoStateProblem,
    run_to_steady,
    smell_field,
    step_two_state,
    theta_nodes,
    uniform_grid,
    x_nodes,
)
from .kernels import QuadratureError, fit_exponent, kernel_norms, theoretical_exponents
from .particles import RngState, SimulationInvariantError, run as run_particles
from .presets import PRESETS
from .runio import RunOutput, config_hash, write_manifest, write_table

ABORT_ERRORS = (SimulationInvariantError, FDSolverError, NegativeDensityError, QuadratureError)


def execute(config: RunConfig) -> RunOutput:
    """Dispatch a validated configuration and collect its artifacts."""
    out_root = os.environ.get("FORMICA_OUT", ".")
    rel = config.out or os.path.join("runs", config.mode)
    out_dir = os.path.join(out_root, rel)
    os.makedirs(out_dir, exist_ok=True)

    text = serialize(config)
    with open(os.path.join(out_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    manifest_path = os.path.join(out_dir, "manifest.txt")
    manifest = {
        "mode": config.mode,
        "seed": config.seed,
        "config_hash": config_hash(text),
        "code_version": __version__,
        "status": "running",
    }
    write_manifest(manifest_path, manifest)

    output = RunOutput(out_dir=out_dir, manifest_path=manifest_path)
    runner = {
        "particles": _run_particles_mode,
        "fd": _run_fd_mode,
        "fd2state": _run_two_state_mode,
        "azimuthal": _run_azimuthal_mode,
        "kernels": _run_kernels_mode,
    }[config.mode]
    try:
        runner(config, out_dir, manifest, output)
    except Exception as err:
        manifest["status"] = "failed"
        manifest["failure_reason"] = f"{type(err).__name__}: {err}"
        write_manifest(manifest_path, manifest)
        raise
    manifest["status"] = "done"
    for i, name in enumerate(output.snapshot_files):
        manifest[f"file_{i:04d}"] = os.path.basename(name)
    write_manifest(manifest_path, manifest)
    output.verify(expected_hash=manifest["config_hash"])
    return output


def _run_particles_mode(config, out_dir, manifest, output):
    spec = config.particles
    steps = config.snapshots.steps(spec.n_steps)
    manifest.update(
        rate_convention=spec.convention,
        n=spec.n,
        n_f=spec.n_f,
        dt=spec.dt,
        n_steps=spec.n_steps,
        eps=spec.eps if spec.eps is not None else spec.dt,
    )
    result = run_particles(spec, out_dir=out_dir, snapshot_steps=steps)
    output.snapshot_files = result.particle_files + result.field_files
    diag = os.path.join(out_dir, "diagnostics.csv")
    write_table(diag, {
        "step": np.arange(1, spec.n_steps + 1),
        "wall_ms": result.diagnostics["wall_ms"],
    })
    output.diagnostics_path = diag
    manifest["snapshot_steps"] = ";".join(str(s) for s in result.snapshot_steps)


def _build_fd_grid(config) -> DensityGrid:
    spec = config.fd or config.fd2.base
    grid = uniform_grid(spec.n_x, spec.n_theta, config.params, mass=spec.mass,
                        balanced_field=(spec.c0 == "balanced"))
    if spec.c0 == "cosine":
        grid.c = grid.c + spec.c0_amp * np.cos(TWO_PI * spec.c0_mode * x_nodes(spec.n_x))
    return grid


def _write_density_snapshot(path, t, rho):
    n_x, n_theta = rho.shape
    xs = np.repeat(x_nodes(n_x), n_theta)
    ths = np.tile(theta_nodes(n_theta), n_x)
    write_table(path, {
        "t": np.full(rho.size, t),
        "x": xs,
        "theta": ths,
        "rho": rho.ravel(),
    })


def _write_field_snapshot_1d(path, t, c):
    write_table(path, {"t": np.full(len(c), t), "x": x_nodes(len(c)), "c": c})


def _run_fd_mode(config, out_dir, manifest, output):
    spec = config.fd
    grid = _build_fd_grid(config)
    n_steps = int(round(spec.t_max / spec.dt))
    wanted = set(config.snapshots.steps(n_steps))
    manifest.update(
        n_x=spec.n_x, n_theta=spec.n_theta, dt=spec.dt, t_max=spec.t_max, tol=spec.tol,
        theta_upwind=spec.options.theta_upwind, verbatim=spec.options.verbatim,
        negative_policy=spec.options.negative_policy,
        residual_tol=spec.options.residual_tol,
    )
    files = []

    def snap(step_index, t, current):
        name = os.path.join(out_dir, f"density_{step_index:06d}.csv")
        _write_density_snapshot(name, t, current.rho)
        cname = os.path.join(out_dir, f"cfield_{step_index:06d}.csv")
        _write_field_snapshot_1d(cname, t, current.c)
        files.extend([name, cname])

    snap(0, 0.0, grid)
    taken = {0}

    def hook(step_index, t, current):
        if step_index in wanted:
            snap(step_index, t, current)
            taken.add(step_index)

    result = run_to_steady(grid, config.params, spec.dt, spec.t_max, spec.tol,
                           spec.options, snapshot_hook=hook)
    final_step = int(round(result.t_stop / spec.dt))
    if final_step not in taken:  # early convergence: keep the terminal state
        snap(final_step, result.t_stop, result.grid)
    output.snapshot_files = files
    diag = os.path.join(out_dir, "diagnostics.csv")
    write_table(diag, result.diagnostics)
    output.diagnostics_path = diag
    manifest["converged"] = result.converged
    manifest["t_stop"] = result.t_stop
    output.extras["result"] = result


def _run_two_state_mode(config, out_dir, manifest, output):
    spec = config.fd2
    base = spec.base
    grid0 = _build_fd_grid(config)
    xs = x_nodes(base.n_x)

    def bump(center, width, peak):
        if width <= 0:
            return np.full(base.n_x, peak)
        dist = np.minimum(np.abs(xs - center), 1.0 - np.abs(xs - center))
        return peak * np.exp(-((dist / width) ** 2))

    alpha = bump(spec.alpha_center, spec.alpha_width, spec.alpha_peak)
    beta = bump(spec.beta_center, spec.beta_width, spec.beta_peak)
    if spec.transition == "convolution":
        kernel = np.exp(-0.5 * ((np.minimum(theta_nodes(base.n_theta),
                                            TWO_PI - theta_nodes(base.n_theta)))
                                / max(spec.kernel_width, 1e-6)) ** 2)
        j_op = TransitionOp.convolution(kernel)
    else:
        j_op = TransitionOp(spec.transition)
    problem = TwoStateProblem(
        alpha=alpha, beta=beta, j_op=j_op,
        production=ProductionSpec(spec.prod_own, spec.prod_other,
                                  spec.prod_own, spec.prod_other),
        smell_alpha=smell_field(alpha, spec.gamma_a, spec.sigma_a),
        smell_beta=smell_field(beta, spec.gamma_a, spec.sigma_a),
        chi_a=spec.chi_a,
    )
    half = grid0.rho / 2.0
    grid = TwoStateGrid(half.copy(), half.copy(), grid0.c.copy(), grid0.c.copy())

    n_steps = int(round(base.t_max / base.dt))
    wanted = set(config.snapshots.steps(n_steps))
    manifest.update(
        n_x=base.n_x, n_theta=base.n_theta, dt=base.dt, t_max=base.t_max,
        transition=spec.transition, chi_a=spec.chi_a,
        theta_upwind=base.options.theta_upwind, verbatim=base.options.verbatim,
        negative_policy=base.options.negative_policy,
    )
    files = []

    def snap(step_index, t, current):
        for state in ("alpha", "beta"):
            rho = current.rho_alpha if state == "alpha" else current.rho_beta
            c = current.c_alpha if state == "alpha" else current.c_beta
            name = os.path.join(out_dir, f"density_{state}_{step_index:06d}.csv")
            _write_density_snapshot(name, t, rho)
            cname = os.path.join(out_dir, f"cfield_{state}_{step_index:06d}.csv")
            _write_field_snapshot_1d(cname, t, c)
            files.extend([name, cname])

    snap(0, 0.0, grid)
    taken = {0}
    diagnostics = {key: [] for key in ("t", "mass_total", "mass_alpha", "mass_beta",
                                       "min_rho", "increment", "avg_l2", "avg_l4",
                                       "avg_linf")}
    converged = False
    t = 0.0
    step_index = 0
    cell = grid.dx * grid.dtheta
    for step_index in range(1, n_steps + 1):
        new = step_two_state(grid, config.params, problem, base.dt, base.options)
        t = step_index * base.dt
        increment = max(
            float(np.max(np.abs(new.rho_alpha - grid.rho_alpha))),
            float(np.max(np.abs(new.rho_beta - grid.rho_beta))),
        ) / base.dt
        total = new.rho_alpha + new.rho_beta
        avg = total.sum(axis=1) * new.dtheta
        diagnostics["t"].append(t)
        diagnostics["mass_total"].append(new.total_mass())
        diagnostics["mass_alpha"].append(float(new.rho_alpha.sum() * cell))
        diagnostics["mass_beta"].append(float(new.rho_beta.sum() * cell))
        diagnostics["min_rho"].append(float(min(new.rho_alpha.min(), new.rho_beta.min())))
        diagnostics["increment"].append(increment)
        diagnostics["avg_l2"].append(float((np.sum(avg**2) * new.dx) ** 0.5))
        diagnostics["avg_l4"].append(float((np.sum(avg**4) * new.dx) ** 0.25))
        diagnostics["avg_linf"].append(float(np.max(np.abs(avg))))
        grid = new
        if step_index in wanted:
            snap(step_index, t, grid)
            taken.add(step_index)
        if increment < base.tol:
            converged = True
            break
    if step_index not in taken:
        snap(step_index, t, grid)
    output.snapshot_files = files
    diag = os.path.join(out_dir, "diagnostics.csv")
    write_table(diag, {key: np.asarray(val) for key, val in diagnostics.items()})
    output.diagnostics_path = diag
    manifest["converged"] = converged
    manifest["t_stop"] = t
    output.extras["grid"] = grid


def _run_azimuthal_mode(config, out_dir, manifest, output):
    spec = config.azimuthal
    profile = TerrainProfile(
        p=np.array([spec.p1, spec.p2]),
        a=HessianSym(spec.a11, spec.a12, spec.a22),
        chi=config.params.chi,
        tau=config.params.tau,
    )
    label = classify(profile, spec.n_grid)
    density = stationary_density(profile, spec.n_grid)
    rng = RngState(config.seed)
    n_steps = int(round(spec.t_final / spec.dt))
    histogram = simulate_autonomous(profile, spec.dt, n_steps, spec.n_samples,
                                    rng.generator, spec.n_bins)
    gap = empirical_vs_stationary_l1(histogram, profile)

    density_path = os.path.join(out_dir, "stationary.csv")
    write_table(density_path, {"theta": density.thetas, "value": density.values})
    hist_path = os.path.join(out_dir, "histogram.csv")
    write_table(hist_path, {"theta": histogram.thetas, "value": histogram.values})
    output.snapshot_files = [density_path, hist_path]
    manifest.update(classification=label, l1_distance=gap,
                    n_samples=spec.n_samples, dt=spec.dt, t_final=spec.t_final)
    output.extras.update(classification=label, l1_distance=gap,
                         density=density, histogram=histogram)


def _run_kernels_mode(config, out_dir, manifest, output):
    spec = config.kernels
    ts = spec.t_values()
    rows = {"quantity": [], "p": [], "t": [], "value": []}
    summary_lines = []
    worst_gap = 0.0
    for p in spec.p_values:
        norms = [kernel_norms(t, p) for t in ts]
        theory = theoretical_exponents(p)
        for name in ("f0", "fx", "ftheta"):
            values = [getattr(row, name) for row in norms]
            for t, value in zip(ts, values):
                rows["quantity"].append(name)
                rows["p"].append(p)
                rows["t"].append(t)
                rows["value"].append(value)
            fitted = fit_exponent(ts, values)
            expected = theory[name]
            gap = abs(fitted - expected) / max(abs(expected), 0.1)
            worst_gap = max(worst_gap, gap)
            summary_lines.append(
                f"{name} p={p:g}: fitted exponent {fitted:+.4f}, theory {expected:+.4f}"
            )
    report = os.path.join(out_dir, "report.csv")
    write_table(report, rows)
    summary = os.path.join(out_dir, "summary.txt")
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    output.snapshot_files = [report, summary]
    manifest["worst_exponent_gap"] = worst_gap
    output.extras["worst_exponent_gap"] = worst_gap


def _strip_keys(text: str, names) -> str:
    kept = []
    for line in text.splitlines():
        key = line.split("#", 1)[0].split("=", 1)[0].strip()
        if key in names:
            continue
        kept.append(line)
    return "\n".join(kept)


def load_config_text(config_path: str | None, preset: str | None,
                     seed: int | None, out: str | None) -> str:
    parts = []
    if preset is not None:
        parts.append(f'preset = "{preset}"')
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as fh:
            body = fh.read()
        if preset is not None:
            body = _strip_keys(body, {"preset"})
        parts.append(body)
    text = "\n".join(parts)
    overrides = []
    if seed is not None:
        text = _strip_keys(text, {"seed"})
        overrides.append(f"seed = {seed}")
    if out is not None:
        text = _strip_keys(text, {"out"})
        overrides.append(f'out = "{out}"')
    return text + ("\n" + "\n".join(overrides) if overrides else "")


def _execute_text(text: str) -> int:
    config = parse_config(text)
    execute(config)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="formica",
        description="Curvature-chemotaxis simulation engine",
    )
    parser.add_argument("mode", choices=("particles", "fd", "fd2state", "azimuthal", "kernels"))
    parser.add_argument("--config", action="append", default=None,
                        help="config file (repeatable for sweeps)")
    parser.add_argument("--preset", default=None, help="named preset from the catalog")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--jobs", type=int, default=1,
                        help="run multiple --config files concurrently")
    args = parser.parse_args(argv)

    if args.config is None and args.preset is None:
        print("error: need --config and/or --preset", file=sys.stderr)
        return 2
    if args.preset is not None and args.preset not in PRESETS:
        print(f"error: unknown preset {args.preset!r}; available: {', '.join(sorted(PRESETS))}",
              file=sys.stderr)
        return 2

    config_paths = args.config if args.config else [None]
    texts = []
    try:
        for path in config_paths:
            text = load_config_text(path, args.preset, args.seed, args.out)
            config = parse_config(text)
            if config.mode != args.mode:
                print(f"error: config is for mode {config.mode}, command says {args.mode}",
                      file=sys.stderr)
                return 2
            texts.append(text)
    except ConfigError as err:
        for violation in err.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 4

    try:
        if len(texts) == 1:
            _execute_text(texts[0])
        elif args.jobs <= 1:
            for text in texts:
                _execute_text(text)
        else:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
                list(pool.map(_execute_text, texts))
        return 0
    except ConfigError as err:
        for violation in err.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 2
    except ABORT_ERRORS as err:
        print(f"invariant abort: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
