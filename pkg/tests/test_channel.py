"""Geometry, correlation, channel statistics, and seed discipline."""

import math

import numpy as np
import pytest

from riszf.channel import (
    apply_estimation_error,
    complex_normal,
    correlation_matrix,
    default_grid_cols,
    derive_seed,
    element_positions,
    matrix_sqrt_psd,
    sample_channels,
    spawn_rng,
)
from riszf.sysconfig import build_configs, default_configs

SINC_HALF = 2.0 / math.pi  # sin(pi/2) / (pi/2)


def test_default_grid_cols_squarest_divisor():
    assert default_grid_cols(1) == 1
    assert default_grid_cols(4) == 2
    assert default_grid_cols(8) == 2
    assert default_grid_cols(9) == 3
    assert default_grid_cols(12) == 3
    assert default_grid_cols(7) == 1  # prime: falls back to a line


def test_element_positions_row_major():
    d = 0.25
    pos = element_positions(4, d, grid_cols=2)
    expected = d * np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
    np.testing.assert_allclose(pos, expected)
    with pytest.raises(ValueError):
        element_positions(6, d, grid_cols=4)


def test_sinc_correlation_quarter_wavelength_neighbors():
    lam = 0.1666
    C = correlation_matrix(4, lam / 4, lam, model="sinc", grid_cols=2)
    assert C.shape == (4, 4)
    np.testing.assert_allclose(np.diag(C), 1.0)
    np.testing.assert_allclose(C, C.T)
    # horizontal and vertical neighbors sit at x = 2*(lam/4)/lam = 1/2
    assert C[0, 1] == pytest.approx(SINC_HALF, rel=1e-15)
    assert C[0, 2] == pytest.approx(SINC_HALF, rel=1e-15)
    # diagonal pair: x = sqrt(2)/2
    assert C[0, 3] == pytest.approx(np.sinc(math.sqrt(2) / 2), rel=1e-15)


def test_sinc_correlation_identity_only_on_a_line():
    lam = 0.1666
    # collinear elements one wavelength apart: all arguments are even integers
    C_line = correlation_matrix(4, lam, lam, model="sinc", grid_cols=1)
    np.testing.assert_allclose(C_line, np.eye(4), atol=1e-15)
    # a 2x2 grid at the same spacing is NOT uncorrelated: the diagonal
    # pair sits at x = 2*sqrt(2), which is not a zero of the sinc
    C_grid = correlation_matrix(4, lam, lam, model="sinc", grid_cols=2)
    assert abs(C_grid[0, 3]) > 1e-3
    # the explicit iid switch ignores geometry entirely
    C_iid = correlation_matrix(4, lam, lam, model="iid", grid_cols=2)
    np.testing.assert_allclose(C_iid, np.eye(4))


def test_matrix_sqrt_psd_squares_back():
    lam = 0.1666
    C = correlation_matrix(9, lam / 4, lam, model="sinc")
    S = matrix_sqrt_psd(C)
    np.testing.assert_allclose(S @ S, C, atol=1e-12)
    np.testing.assert_allclose(S, S.T, atol=1e-12)
    # eigenvalue clipping keeps the result finite for a singular input
    ones = np.ones((3, 3))
    S1 = matrix_sqrt_psd(ones)
    np.testing.assert_allclose(S1 @ S1, ones, atol=1e-12)


def test_complex_normal_moments():
    rng = spawn_rng(123)
    x = complex_normal(rng, (20000,), variance=3.0)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(3.0, rel=0.05)
    assert abs(np.mean(x)) < 0.05
    # circular symmetry: pseudo-variance vanishes (3 sigma at this sample size)
    assert abs(np.mean(x**2)) < 0.09


def test_spawn_rng_reproducible_and_streams_independent():
    a1 = spawn_rng(7, 1, 2).standard_normal(4)
    a2 = spawn_rng(7, 1, 2).standard_normal(4)
    b = spawn_rng(7, 1, 3).standard_normal(4)
    np.testing.assert_array_equal(a1, a2)
    assert not np.allclose(a1, b)
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    assert derive_seed(7, 1, 2) != derive_seed(7, 2, 1)


def _mean_gram(seed: int, trials: int, cfg, ch):
    """Monte Carlo E{H_1^H H_1}, E{h h^H}, E{|h_d|^2}."""
    N = cfg.N
    gram = np.zeros((N, N), dtype=np.complex128)
    outer = np.zeros((N, N), dtype=np.complex128)
    d_power = 0.0
    n_b = 0
    for t in range(trials):
        chs = sample_channels(cfg, ch, spawn_rng(seed, t))
        gram += chs.H[0].conj().T @ chs.H[0]
        for i in range(cfg.U_b):
            outer += np.outer(chs.h_b[i], chs.h_b[i].conj())
            n_b += 1
        d_power += np.mean(np.abs(chs.h_d) ** 2)
    return gram / trials, outer / n_b, d_power / trials


def test_sample_channels_second_order_statistics():
    cfg, ch, _ = build_configs({"m": "32", "n": "4", "k": "2", "u_d": "2"})
    gram, outer, d_power = _mean_gram(seed=11, trials=400, cfg=cfg, ch=ch)
    C = correlation_matrix(
        cfg.N, ch.element_spacing, ch.wavelength, ch.correlation_model, ch.grid_cols
    )
    target_gram = cfg.M * ch.ris_element_scale * C
    err = np.linalg.norm(gram - target_gram) / np.linalg.norm(target_gram)
    assert err < 0.05, f"relative Gram error {err:.3f}"

    target_outer = ch.ris_ue_variance * C
    err_b = np.linalg.norm(outer - target_outer) / np.linalg.norm(target_outer)
    assert err_b < 0.10, f"relative blocked-link error {err_b:.3f}"

    assert d_power == pytest.approx(ch.direct_link_variance, rel=0.05)


def test_sample_channels_iid_switch_gives_flat_variance():
    cfg, ch, _ = build_configs(
        {"m": "16", "n": "4", "k": "1", "u_d": "1", "correlation_model": "iid"}
    )
    gram, _, _ = _mean_gram(seed=3, trials=400, cfg=cfg, ch=ch)
    target = cfg.M * ch.ris_element_scale * np.eye(cfg.N)
    err = np.linalg.norm(gram - target) / np.linalg.norm(target)
    assert err < 0.05


def test_sample_channels_shapes_and_determinism():
    cfg, ch, _ = default_configs()
    chs1 = sample_channels(cfg, ch, spawn_rng(42, 0))
    chs2 = sample_channels(cfg, ch, spawn_rng(42, 0))
    assert chs1.H.shape == (cfg.K, cfg.M, cfg.N)
    assert chs1.h_b.shape == (cfg.U_b, cfg.N)
    assert chs1.h_d.shape == (cfg.U_d, cfg.M)
    np.testing.assert_array_equal(chs1.H, chs2.H)
    np.testing.assert_array_equal(chs1.h_b, chs2.h_b)
    np.testing.assert_array_equal(chs1.h_d, chs2.h_d)
    assert chs1.h_block(1, 0) is not None
    np.testing.assert_array_equal(chs1.h_block(1), chs1.h_b[1])


def test_estimation_error_zero_tau_is_identity():
    cfg, ch, _ = default_configs()
    chs = sample_channels(cfg, ch, spawn_rng(5, 0))
    assert apply_estimation_error(chs, 0.0, seed=99) is chs


def test_estimation_error_energy_and_statistics():
    cfg, ch, _ = build_configs({"m": "24", "n": "4", "k": "2", "u_d": "2"})
    tau = 0.36
    expected_ratio = 2.0 * (1.0 - math.sqrt(1.0 - tau))
    num = 0.0
    den = 0.0
    outer = np.zeros((cfg.N, cfg.N), dtype=np.complex128)
    trials = 300
    for t in range(trials):
        chs = sample_channels(cfg, ch, spawn_rng(21, t))
        noisy = apply_estimation_error(chs, tau, seed=derive_seed(22, t))
        num += np.sum(np.abs(noisy.H - chs.H) ** 2)
        num += np.sum(np.abs(noisy.h_b - chs.h_b) ** 2)
        num += np.sum(np.abs(noisy.h_d - chs.h_d) ** 2)
        den += np.sum(np.abs(chs.H) ** 2)
        den += np.sum(np.abs(chs.h_b) ** 2)
        den += np.sum(np.abs(chs.h_d) ** 2)
        for i in range(cfg.U_b):
            outer += np.outer(noisy.h_b[i], noisy.h_b[i].conj())
    assert num / den == pytest.approx(expected_ratio, rel=0.05)
    # the perturbed links keep the nominal second-order statistics
    C = correlation_matrix(
        cfg.N, ch.element_spacing, ch.wavelength, ch.correlation_model, ch.grid_cols
    )
    target = ch.ris_ue_variance * C
    mean_outer = outer / (trials * cfg.U_b)
    err = np.linalg.norm(mean_outer - target) / np.linalg.norm(target)
    assert err < 0.10


def test_estimation_error_deterministic_in_seed():
    cfg, ch, _ = default_configs()
    chs = sample_channels(cfg, ch, spawn_rng(8, 0))
    a = apply_estimation_error(chs, 0.2, seed=1234)
    b = apply_estimation_error(chs, 0.2, seed=1234)
    c = apply_estimation_error(chs, 0.2, seed=1235)
    np.testing.assert_array_equal(a.H, b.H)
    np.testing.assert_array_equal(a.h_d, b.h_d)
    assert not np.allclose(a.H, c.H)
