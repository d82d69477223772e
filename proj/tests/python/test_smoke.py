import math

import numpy as np
import pytest

import lrukit


def test_gain_formula_values():
    assert lrukit.gain_formula(0.0, 0.0) == pytest.approx(1.0)
    assert lrukit.gain_formula(0.9, 0.99) == pytest.approx(math.log(0.19 / 0.0199) / (0.9801 - 0.81))
    with pytest.raises(ValueError):
        lrukit.gain_formula(0.5, 1.0)


def test_gain_monte_carlo_small():
    r = lrukit.gain_monte_carlo(0.5, 0.9, n=64, length=500, trials=4, seed=1)
    assert len(r["trials"]) == 4
    assert r["monte_carlo"] == pytest.approx(r["closed_form"], rel=0.25)


def test_ring_samples_stay_in_annulus():
    lam = lrukit.sample_ring(0.4, 0.9, 2000, seed=3)
    assert lam.dtype == np.complex128
    assert np.all(np.abs(lam) >= 0.4 - 1e-12)
    assert np.all(np.abs(lam) <= 0.9 + 1e-12)


def test_dft_matches_numpy():
    x = np.random.default_rng(0).normal(size=37)
    np.testing.assert_allclose(lrukit.dft(x.tolist()), np.fft.fft(x), atol=1e-10)


def test_spectral_radius_of_scaled_identity():
    assert lrukit.spectral_radius(0.5 * np.eye(4), 32) == pytest.approx(0.5 * 2 ** (1 / 32), rel=1e-12)


def test_lru_layer_parallel_matches_sequential():
    layer = lrukit.LruLayer(2, 16, 3, r_min=0.5, r_max=0.99, seed=4)
    u = np.random.default_rng(1).normal(size=(2, 300, 2))
    y_par = layer.forward(u, parallel=True)
    y_seq = layer.forward(u, parallel=False)
    assert y_par.shape == (2, 300, 3)
    np.testing.assert_allclose(y_par, y_seq, rtol=0, atol=1e-10 * np.abs(y_seq).max())
    assert np.all(np.abs(layer.eigenvalues()) < 1.0)
    with pytest.raises(ValueError):
        layer.forward(np.zeros((1, 5, 4)))


def test_cli_entry_point(tmp_path):
    code, out, err = lrukit.run_cli(["scan-check", "--len", "17", "--output-dir", str(tmp_path)])
    assert code == 0, err
    assert (tmp_path / "scan-check-0.json").exists()
    code, _, err = lrukit.run_cli(["bogus"])
    assert code == 1
    assert err
