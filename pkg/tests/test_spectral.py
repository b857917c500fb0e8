import math

import numpy as np
import pytest

from formica.core import TorusPoint
from formica.spectral import (
    CoefficientGrid,
    axpy,
    decay_step,
    dirac_coefficients,
    eval_many_excluding,
    eval_probe,
    laplacian_rates,
    mode_range,
    read_field_snapshot,
    reconstruct_on_grid,
    write_field_snapshot,
)

TWO_PI = 2.0 * math.pi


def random_hermitian(n_f, rng, decay=0.5):
    """Random real-field coefficient grid with smooth spectral decay."""
    k = mode_range(n_f)
    weight = np.exp(-decay * (k[:, None] ** 2 + k[None, :] ** 2))
    raw = (rng.standard_normal((2 * n_f + 1,) * 2) + 1j * rng.standard_normal((2 * n_f + 1,) * 2)) * weight
    coeffs = 0.5 * (raw + np.conj(raw[::-1, ::-1]))
    peak = np.abs(coeffs).max()
    if peak > 1.0:
        coeffs /= peak
    return CoefficientGrid(n_f, coeffs)


def single_mode_cosine(n_f=3):
    """Coefficients of the field cos(2*pi*x1)."""
    grid = CoefficientGrid.zeros(n_f)
    grid.coeffs[1 + n_f, 0 + n_f] = 0.5
    grid.coeffs[-1 + n_f, 0 + n_f] = 0.5
    return grid


def test_dirac_at_origin_is_all_ones():
    grid = dirac_coefficients(TorusPoint(0.0, 0.0), 0.0, 1.0, 4)
    np.testing.assert_allclose(grid.coeffs, np.ones((9, 9)), atol=0)


def test_dirac_zero_mode_always_one():
    for x, eps in [((0.3, 0.9), 0.0), ((0.123, 0.456), 0.5), ((0.0, 0.5), 3.0)]:
        grid = dirac_coefficients(x, eps, 2.0, 3)
        assert grid.mode(0, 0) == 1.0


def test_dirac_quarter_point_mode_is_imaginary_unit():
    grid = dirac_coefficients((0.25, 0.0), 0.0, 1.0, 2)
    assert grid.mode(1, 0) == pytest.approx(1j, abs=1e-15)


def test_dirac_hermitian_and_regularizer():
    grid = dirac_coefficients((0.37, 0.81), 0.02, 1.5, 5, "physical")
    assert grid.hermitian_defect() < 1e-14
    rate = laplacian_rates(5, "physical")[5 + 2, 5 - 3]
    expected = np.exp(2j * math.pi * (2 * 0.37 - 3 * 0.81)) * math.exp(-1.5 * 0.02 * rate)
    assert grid.mode(2, -3) == pytest.approx(expected, abs=1e-14)
    paper = dirac_coefficients((0.37, 0.81), 0.02, 1.5, 5, "paper")
    rate_p = laplacian_rates(5, "paper")[5 + 2, 5 - 3]
    assert rate_p == 13.0
    assert abs(paper.mode(2, -3)) == pytest.approx(math.exp(-1.5 * 0.02 * 13.0), abs=1e-14)


def test_dirac_reconstruction_peaks_at_source():
    # the bump a walker deposits must be centered at the walker itself
    x0 = (0.3, 0.7)
    grid = dirac_coefficients(x0, 0.002, 1.0, 8)
    values = reconstruct_on_grid(grid, 64)
    j, l = np.unravel_index(np.argmax(values), values.shape)
    assert j / 64 == pytest.approx(x0[0], abs=1.5 / 64)
    assert l / 64 == pytest.approx(x0[1], abs=1.5 / 64)


def test_decay_zero_stays_zero():
    z = CoefficientGrid.zeros(3)
    out = decay_step(z, z, 0.1, 0.7, 1.0)
    assert np.all(out.coeffs == 0)


def test_decay_uniform_factor_without_diffusion():
    rng = np.random.default_rng(0)
    grid = random_hermitian(4, rng)
    out = decay_step(grid, CoefficientGrid.zeros(4), 0.25, 1.0, 0.0)
    np.testing.assert_allclose(out.coeffs, grid.coeffs / 1.25, rtol=1e-15)


def test_decay_fixed_point_is_source_over_gamma():
    gamma, dt, s = 0.8, 0.05, 2.5
    source = CoefficientGrid.zeros(2)
    source.coeffs[2, 2] = s
    grid = CoefficientGrid.zeros(2)
    for _ in range(4000):
        grid = decay_step(grid, source, dt, gamma, 1.0)
    assert grid.mode(0, 0) == pytest.approx(s / gamma, abs=1e-10)


def test_decay_contracts_every_mode():
    rng = np.random.default_rng(1)
    grid = random_hermitian(5, rng)
    out = decay_step(grid, CoefficientGrid.zeros(5), 0.3, 0.0, 0.7)
    assert np.all(np.abs(out.coeffs) <= np.abs(grid.coeffs) + 1e-18)
    assert out.hermitian_defect() < 1e-14


def test_eval_zero_grid():
    probe = eval_probe(CoefficientGrid.zeros(2), (0.3, 0.4))
    assert probe.c == 0.0
    assert np.all(probe.grad == 0.0)
    assert (probe.hess.a11, probe.hess.a12, probe.hess.a22) == (0.0, 0.0, 0.0)


def test_eval_single_cosine_mode_at_origin():
    probe = eval_probe(single_mode_cosine(), (0.0, 0.0))
    assert probe.c == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(probe.grad, [0.0, 0.0], atol=1e-12)
    assert probe.hess.a11 == pytest.approx(-4.0 * math.pi**2, abs=1e-12)
    assert probe.hess.a12 == pytest.approx(0.0, abs=1e-12)
    assert probe.hess.a22 == pytest.approx(0.0, abs=1e-12)


def test_eval_single_cosine_mode_at_quarter():
    probe = eval_probe(single_mode_cosine(), (0.25, 0.0))
    assert probe.c == pytest.approx(0.0, abs=1e-12)
    assert probe.grad[0] == pytest.approx(-2.0 * math.pi, abs=1e-12)
    assert probe.grad[1] == pytest.approx(0.0, abs=1e-12)


def test_eval_imaginary_residue_small():
    rng = np.random.default_rng(2)
    grid = random_hermitian(6, rng)
    k = mode_range(6)
    for x in rng.random((5, 2)):
        phases = np.exp(-2j * math.pi * (np.outer(x[0] * k, np.ones(13)) + np.outer(np.ones(13), x[1] * k)))
        full = np.sum(grid.coeffs * phases)
        assert abs(full.imag) < 1e-12
        assert eval_probe(grid, x).c == pytest.approx(full.real, abs=1e-12)


def test_eval_derivatives_match_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-5
    for trial in range(20):
        n_f = int(rng.integers(1, 9))
        grid = random_hermitian(n_f, rng)
        x = rng.random(2)
        probe = eval_probe(grid, x)

        def value(p):
            return eval_probe(grid, p).c

        fd_x1 = (value(x + [h, 0]) - value(x - [h, 0])) / (2 * h)
        fd_x2 = (value(x + [0, h]) - value(x - [0, h])) / (2 * h)
        assert fd_x1 == pytest.approx(probe.grad[0], abs=1e-6)
        assert fd_x2 == pytest.approx(probe.grad[1], abs=1e-6)

        def grad(p):
            return eval_probe(grid, p).grad

        gxx = (grad(x + [h, 0])[0] - grad(x - [h, 0])[0]) / (2 * h)
        gxy = (grad(x + [0, h])[0] - grad(x - [0, h])[0]) / (2 * h)
        gyy = (grad(x + [0, h])[1] - grad(x - [0, h])[1]) / (2 * h)
        assert gxx == pytest.approx(probe.hess.a11, abs=1e-6)
        assert gxy == pytest.approx(probe.hess.a12, abs=1e-6)
        assert gyy == pytest.approx(probe.hess.a22, abs=1e-6)


def test_axpy_examples_and_roundtrip():
    rng = np.random.default_rng(4)
    total = random_hermitian(4, rng)
    own = random_hermitian(4, rng)
    unchanged = axpy(total, 0.0, own)
    np.testing.assert_array_equal(unchanged.coeffs, total.coeffs)
    copy = axpy(CoefficientGrid.zeros(4), 1.0, own)
    np.testing.assert_array_equal(copy.coeffs, own.coeffs)
    roundtrip = axpy(axpy(total, -1.0, own), 1.0, own)
    np.testing.assert_allclose(roundtrip.coeffs, total.coeffs, atol=1e-15)
    assert roundtrip.hermitian_defect() < 1e-14


def test_eval_many_excluding_matches_manual_difference():
    rng = np.random.default_rng(5)
    total = random_hermitian(5, rng)
    own = np.stack([random_hermitian(5, rng).coeffs for _ in range(7)])
    xs = rng.random((7, 2))
    c, g1, g2, h11, h12, h22 = eval_many_excluding(total.coeffs, own, xs)
    for i in range(7):
        probe = eval_probe(CoefficientGrid(5, total.coeffs - own[i]), xs[i])
        assert c[i] == pytest.approx(probe.c, abs=1e-12)
        assert g1[i] == pytest.approx(probe.grad[0], abs=1e-10)
        assert g2[i] == pytest.approx(probe.grad[1], abs=1e-10)
        assert h11[i] == pytest.approx(probe.hess.a11, abs=1e-9)
        assert h12[i] == pytest.approx(probe.hess.a12, abs=1e-9)
        assert h22[i] == pytest.approx(probe.hess.a22, abs=1e-9)


def test_dirac_field_has_unit_mass():
    grid = dirac_coefficients((0.3, 0.6), 0.01, 2.0, 8)
    values = reconstruct_on_grid(grid, 64)
    assert values.mean() == pytest.approx(1.0, abs=1e-10)


def test_snapshot_roundtrip_bitwise():
    rng = np.random.default_rng(6)
    grid = random_hermitian(3, rng)
    import tempfile, os

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "field.txt")
        write_field_snapshot(path, grid, "physical")
        back, convention = read_field_snapshot(path)
        assert convention == "physical"
        assert back.n_f == 3
        np.testing.assert_array_equal(back.coeffs, grid.coeffs)
        write_field_snapshot(path + "2", back, convention)
        with open(path, "rb") as a, open(path + "2", "rb") as b:
            assert a.read() == b.read()


def test_rate_convention_rejects_unknown():
    with pytest.raises(ValueError):
        laplacian_rates(2, "half-physical")
    with pytest.raises(ValueError):
        dirac_coefficients((0.1, 0.1), 0.0, 1.0, 2, "nope")
