import numpy as np
import pytest

import sdagan


def test_fft_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (8, 16))
    np.testing.assert_allclose(sdagan.fft2d(x), np.fft.fft2(x), atol=1e-10)
    np.testing.assert_allclose(sdagan.ifft2d(sdagan.fft2d(x)).real, x, atol=1e-12)


def test_fft_rejects_non_power_of_two():
    with pytest.raises(sdagan.Error):
        sdagan.fft2d(np.zeros((6, 8)))


def test_spectral_profile_of_constant_and_checkerboard():
    assert sdagan.spectral_profile(np.ones((8, 8)))["high_freq_ratio"] == 0.0
    checker = np.indices((8, 8)).sum(axis=0) % 2 * 2.0 - 1.0
    assert sdagan.spectral_profile(checker)["high_freq_ratio"] == pytest.approx(1.0)


def test_metric_closed_forms():
    rng = np.random.default_rng(1)
    feats = rng.normal(size=(10, 4))
    assert abs(sdagan.fid(feats, feats)) < 1e-9
    assert sdagan.inception_score(np.full((5, 4), 0.25)) == pytest.approx(1.0)
    assert sdagan.inception_score(np.eye(4)) == pytest.approx(4.0)
    a = rng.normal(size=(5, 5))
    m = a @ a.T
    r = sdagan.matrix_sqrt(m)
    np.testing.assert_allclose(r @ r, m, atol=1e-8)


def test_ppm_round_trip(tmp_path):
    img = np.random.default_rng(2).integers(0, 256, (5, 7, 3), dtype=np.uint8)
    sdagan.write_ppm(tmp_path / "x.ppm", img)
    np.testing.assert_array_equal(sdagan.read_ppm(tmp_path / "x.ppm"), img)


def test_bad_checkpoint_raises(tmp_path):
    path = tmp_path / "bad.sdag"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(sdagan.CheckpointError):
        sdagan.Translator(path)


def test_evaluate_reports_backend():
    rng = np.random.default_rng(3)
    real = [rng.integers(0, 256, (32, 32, 3), dtype=np.uint8) for _ in range(3)]
    fake = [rng.integers(0, 256, (32, 32, 3), dtype=np.uint8) for _ in range(3)]
    report = sdagan.evaluate(real, fake, size=32)
    assert report["backend"] == sdagan.metrics_backend == "handcrafted-v1"
    assert report["fid"] >= 0
    assert 1.0 <= report["inception_score"] <= 8.0
