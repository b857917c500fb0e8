import hashlib
import os
import subprocess
import sys

import numpy as np
import pytest

from formica_viz.cli import main as viz_main
from formica_viz.fields import field_at, field_on_grid
from formica_viz.io import MissingSnapshotError, SnapshotBundle, read_field_coefficients
from formica_viz.render import render_fd, render_particles

PARTICLES_CFG = """
mode = particles
params.lambda = 0.2
params.chi = 0.4
params.tau = 0.02
params.sigma_x = 1e-4
params.sigma_theta = 0.3
params.sigma_c = 0.03
params.gamma = 2.0
params.mu = 2.0
particles.n = 24
particles.n_f = 4
particles.dt = 5e-3
particles.n_t = 400
init.law = "gaussian_wrapped"
init.spread = 0.1
snapshots.schedule = "geometric"
snapshots.count = 8
seed = 5
"""

FD_CFG = """
mode = fd
params.lambda = 1.0
params.chi = 10.0
params.tau = 0.1
params.sigma_x = 0.05
params.sigma_theta = 0.5
params.sigma_c = 0.3
params.gamma = 1.0
params.mu = 1.0
fd.n_x = 32
fd.n_theta = 16
fd.dt = 5e-3
fd.t_max = 0.25
fd.tol = 1e-9
fd.c0 = "cosine"
fd.c0_amp = 0.1
snapshots.schedule = "stride"
snapshots.stride = 20
"""

FD2_CFG = FD_CFG.replace("mode = fd", "mode = fd2state") + """
fd2.alpha_peak = 1.0
fd2.beta_peak = 1.0
fd2.transition = "u_turn"
fd2.chi_a = 0.5
"""


def run_engine(tmp_path, name, text, mode):
    cfg = tmp_path / f"{name}.cfg"
    cfg.write_text(text + f'\nout = "{name}"\n')
    proc = subprocess.run(
        [sys.executable, "-m", "formica.cli", mode, "--config", str(cfg)],
        cwd=tmp_path, capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return str(tmp_path / name)


@pytest.fixture(scope="module")
def particle_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("engine")
    return run_engine(tmp, "particles_run", PARTICLES_CFG, "particles")


@pytest.fixture(scope="module")
def fd_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("engine_fd")
    return run_engine(tmp, "fd_run", FD_CFG, "fd")


@pytest.fixture(scope="module")
def fd2_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("engine_fd2")
    return run_engine(tmp, "fd2_run", FD2_CFG, "fd2state")


def dir_hashes(run_dir):
    out = {}
    for name in sorted(os.listdir(run_dir)):
        path = os.path.join(run_dir, name)
        if os.path.isfile(path):
            with open(path, "rb") as fh:
                out[name] = hashlib.sha256(fh.read()).hexdigest()
    return out


def test_bundle_discovers_ordered_steps(particle_run):
    bundle = SnapshotBundle.open(particle_run)
    assert bundle.mode == "particles"
    assert bundle.steps[0] == 0
    assert bundle.steps == sorted(bundle.steps)
    assert len(bundle.steps) >= 8


def test_render_particles_all_frames_and_montage(particle_run, tmp_path):
    bundle = SnapshotBundle.open(particle_run)
    frames = bundle.steps[-8:]
    written = render_particles(bundle, frames, str(tmp_path / "imgs"), montage=True)
    assert len(written) == 9  # 8 frames + montage
    for name in written:
        assert os.path.getsize(name) > 0


def test_render_zero_field_initial_frame(particle_run, tmp_path):
    bundle = SnapshotBundle.open(particle_run)
    written = render_particles(bundle, [0], str(tmp_path / "imgs"))
    assert len(written) == 1


def test_render_empty_frame_list_is_noop(particle_run, tmp_path):
    bundle = SnapshotBundle.open(particle_run)
    assert render_particles(bundle, [], str(tmp_path / "imgs")) == []


def test_missing_snapshot_is_named(particle_run):
    bundle = SnapshotBundle.open(particle_run)
    with pytest.raises(MissingSnapshotError) as err:
        render_particles(bundle, [123456], "/tmp/unused")
    assert "123456" in str(err.value)


def test_rendering_is_read_only(particle_run, tmp_path):
    before = dir_hashes(particle_run)
    bundle = SnapshotBundle.open(particle_run)
    render_particles(bundle, bundle.steps[-2:], str(tmp_path / "imgs"))
    assert dir_hashes(particle_run) == before


def test_render_fd_three_panels(fd_run, tmp_path):
    bundle = SnapshotBundle.open(fd_run)
    written = render_fd(bundle, str(tmp_path / "imgs"))
    assert len(written) == 1
    assert os.path.getsize(written[0]) > 0


def test_render_fd_two_state_rows(fd2_run, tmp_path):
    bundle = SnapshotBundle.open(fd2_run)
    written = render_fd(bundle, str(tmp_path / "imgs2"))
    assert len(written) == 1


def test_render_fd_single_snapshot_degenerates(fd_run, tmp_path):
    # a bundle truncated to its initial snapshot still renders
    bundle = SnapshotBundle.open(fd_run)
    bundle.steps = bundle.steps[:1]
    written = render_fd(bundle, str(tmp_path / "one"))
    assert len(written) == 1


def test_field_reconstruction_matches_engine(particle_run):
    from formica.spectral import CoefficientGrid, eval_probe

    bundle = SnapshotBundle.open(particle_run)
    step = bundle.steps[-1]
    n_f, rows = read_field_coefficients(bundle.path("field_{step:06d}.txt", step))
    m = 2 * n_f + 1
    coeffs = np.zeros((m, m), dtype=complex)
    for xi, zeta, re, im in rows:
        coeffs[int(xi) + n_f, int(zeta) + n_f] = complex(re, im)
    grid = CoefficientGrid(n_f, coeffs)
    rng = np.random.default_rng(0)
    points = rng.random((10, 2))
    mine = field_at(rows, points)
    for point, value in zip(points, mine):
        assert value == pytest.approx(eval_probe(grid, point).c, abs=1e-8)
    # grid evaluation agrees with pointwise evaluation
    dense = field_on_grid(rows, 16)
    nodes = np.arange(16) / 16
    pts = np.array([[nodes[3], nodes[11]]])
    assert field_at(rows, pts)[0] == pytest.approx(dense[3, 11], abs=1e-10)


def test_cli_particles_and_fd(particle_run, fd_run, tmp_path):
    out = str(tmp_path / "cli_imgs")
    assert viz_main(["particles", "--run", particle_run, "--montage", "--out", out]) == 0
    assert os.path.isfile(os.path.join(out, "montage.png"))
    assert viz_main(["fd", "--run", fd_run, "--out", out]) == 0
    assert os.path.isfile(os.path.join(out, "fd_panels.png"))
    assert viz_main(["particles", "--run", fd_run, "--out", out]) == 1
    assert viz_main(["fd", "--run", str(tmp_path / "nowhere"), "--out", out]) == 1
