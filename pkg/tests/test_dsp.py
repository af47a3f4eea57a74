from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aedlab.audio_io import AudioClip
from aedlab.dsp import (
    ComplexSpectrum,
    Spectrogram,
    StftConfig,
    clip_to_model_input,
    export_csv,
    export_pgm,
    featurize,
    fit_frames,
    hz_to_mel,
    istft,
    mel_filterbank,
    mel_to_hz,
    stft,
    to_db,
    to_mel,
)

RATE = 22050


def tone(freq, n=66150, amp=0.5, rate=RATE):
    return AudioClip(amp * np.sin(2 * np.pi * freq * np.arange(n) / rate), rate)


def test_config_validation():
    with pytest.raises(ValueError):
        StftConfig(fft_size=1000)
    with pytest.raises(ValueError):
        StftConfig(hop=0)
    with pytest.raises(ValueError):
        StftConfig(hop=2048)
    with pytest.raises(ValueError):
        StftConfig(window="hamming")


def test_frame_count_for_three_seconds():
    spec = stft(AudioClip(np.zeros(66150), RATE))
    assert spec.frames.shape == (513, 128)
    assert np.all(spec.frames == 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 10), st.integers(0, 5000), st.integers(1, 4))
def test_frame_count_formula(log_n, extra, hop_div):
    n_fft = 2 ** log_n
    hop = max(1, n_fft // hop_div)
    length = n_fft + extra
    cfg = StftConfig(n_fft, hop)
    spec = stft(AudioClip(np.ones(length), RATE), cfg)
    assert spec.n_frames == 1 + (length - n_fft) // hop
    assert spec.frames.shape[0] == n_fft // 2 + 1


def test_short_clip_rejected():
    with pytest.raises(ValueError):
        stft(AudioClip(np.zeros(1000), RATE))


def test_tone_peak_bin():
    spec = stft(tone(1000.0))
    mag = np.abs(spec.frames).mean(axis=1)
    assert int(np.argmax(mag)) == round(1000 * 1024 / 22050) == 46


def test_window_is_periodic_hann():
    w = StftConfig().analysis_window()
    n = np.arange(1024)
    np.testing.assert_allclose(w, np.sin(np.pi * n / 1024) ** 2, atol=1e-12)


def test_stft_matches_direct_dft():
    rng = np.random.default_rng(0)
    cfg = StftConfig(16, 8)
    x = rng.standard_normal(40)
    spec = stft(AudioClip(x, RATE), cfg)
    w = cfg.analysis_window()
    k = np.arange(9)[:, None]
    m = np.arange(16)[None, :]
    dft = np.exp(-2j * np.pi * k * m / 16)
    for t in range(spec.n_frames):
        np.testing.assert_allclose(spec.frames[:, t], dft @ (x[8 * t:8 * t + 16] * w), atol=1e-10)


def interior_rel_rms(x, y, n_fft):
    a, b = x[n_fft:-n_fft], y[n_fft:-n_fft]
    return np.sqrt(np.mean((a - b) ** 2)) / np.sqrt(np.mean(a ** 2))


def test_white_noise_round_trip():
    x = np.random.default_rng(1).standard_normal(66150) * 0.1
    y = istft(stft(AudioClip(x, RATE)), length=x.size).samples
    assert interior_rel_rms(x, y, 1024) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(7, 11), st.integers(0, 2 ** 31 - 1))
def test_round_trip_property(log_n, seed):
    n_fft = 2 ** log_n
    x = np.random.default_rng(seed).uniform(-1, 1, 4 * n_fft + 37)
    y = istft(stft(AudioClip(x, RATE), StftConfig(n_fft, n_fft // 2)), length=x.size).samples
    assert interior_rel_rms(x, y, n_fft) < 1e-6


def test_zero_spectrum_inverts_to_zero():
    cfg = StftConfig()
    spec = ComplexSpectrum(np.zeros((513, 10), complex), cfg, RATE)
    assert np.all(istft(spec).samples == 0.0)


def test_istft_shape_check():
    spec = ComplexSpectrum(np.zeros((100, 10), complex), StftConfig(), RATE)
    with pytest.raises(ValueError):
        istft(spec)


def test_tone_round_trip_keeps_peak():
    y = istft(stft(tone(2000.0)), length=66150)
    assert int(np.argmax(np.abs(stft(y).frames).mean(axis=1))) == round(2000 * 1024 / 22050)


def test_to_db_rules():
    cfg = StftConfig()
    zero = ComplexSpectrum(np.zeros((4, 3), complex), cfg, RATE)
    assert np.all(to_db(zero, -80).values == -80)
    frames = np.array([[1.0, 0.1], [0.0, 1e-9]], dtype=complex)
    db = to_db(ComplexSpectrum(frames, cfg, RATE), -80).values
    assert db[0, 0] == 0.0
    assert db[0, 1] == pytest.approx(-20.0)
    assert db[1, 0] == -80.0 and db[1, 1] == -80.0
    with pytest.raises(ValueError):
        to_db(zero, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 1000))
def test_to_db_scale_invariant(alpha, seed):
    x = np.random.default_rng(seed).standard_normal(4096)
    a = to_db(stft(AudioClip(x, RATE))).values
    b = to_db(stft(AudioClip(alpha * x, RATE))).values
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_to_db_monotone():
    mags = np.linspace(0, 1, 50)
    db = to_db(ComplexSpectrum(mags[:, None].astype(complex), StftConfig(), RATE)).values[:, 0]
    assert np.all(np.diff(db) >= 0)


def test_mel_scale_inverse():
    f = np.array([0.0, 100.0, 1000.0, 11025.0])
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(f)), f, atol=1e-9)
    assert hz_to_mel(1000.0) == pytest.approx(1000.0, abs=0.1)


def test_filterbank_rows_sum_to_one():
    fb = mel_filterbank(64, 513, RATE)
    np.testing.assert_allclose(fb.sum(axis=1), 1.0)
    assert np.all(fb >= 0)


def test_constant_spectrogram_maps_to_constant():
    spec = Spectrogram(np.zeros((513, 7)), "linear", -80.0)
    out = to_mel(spec, 64)
    assert out.shape == (64, 7)
    np.testing.assert_allclose(out.values, 0.0, atol=1e-9)


def test_single_bin_lands_in_covering_bands():
    fb = mel_filterbank(64, 513, RATE)
    for b in (20, 100, 300, 500):
        v = np.full((513, 1), -80.0)
        v[b] = 0.0
        out = to_mel(Spectrogram(v, "linear", -80.0), 64).values[:, 0]
        # oracle: with the floor's own power removed, only covering bands rise
        base = to_mel(Spectrogram(np.full((513, 1), -80.0), "linear", -80.0), 64).values[:, 0]
        raised = np.flatnonzero(out > base + 1e-9)
        covering = np.flatnonzero(fb[:, b] > 0)
        assert set(raised) <= set(covering)
        assert 1 <= covering.size <= 2


def test_to_mel_rejects_bad_input():
    with pytest.raises(ValueError):
        to_mel(Spectrogram(np.zeros((64, 3)), "mel", -80.0))
    with pytest.raises(ValueError):
        to_mel(Spectrogram(np.zeros((32, 3)), "linear", -80.0), 64)


def test_fit_frames():
    v = np.arange(12.0).reshape(2, 6)
    assert fit_frames(v, 4, -80).shape == (2, 4)
    padded = fit_frames(v, 8, -80)
    assert padded.shape == (2, 8) and np.all(padded[:, 6:] == -80)


def test_model_input_shape_range_determinism():
    rng = np.random.default_rng(5)
    clip = AudioClip(rng.uniform(-1, 1, 66150), RATE)
    a = clip_to_model_input(clip)
    b = clip_to_model_input(clip)
    assert a.shape == (64, 128)
    assert a.min() >= 0.0 and a.max() <= 1.0
    assert a.tobytes() == b.tobytes()
    assert np.all(clip_to_model_input(AudioClip(np.zeros(66150), RATE)) == 0.0)


def test_featurize_stacks():
    clips = [tone(500.0), tone(3000.0)]
    X = featurize(clips)
    assert X.shape == (2, 64, 128) and X.dtype == np.float32
    assert featurize([]).shape == (0, 64, 128)


def test_exports(tmp_path):
    spec = Spectrogram(np.array([[0.0, -40.0], [-80.0, -20.0]]), "mel", -80.0)
    export_csv(spec, tmp_path / "s.csv")
    np.testing.assert_allclose(np.loadtxt(tmp_path / "s.csv", delimiter=","), spec.values)
    export_pgm(spec, tmp_path / "s.pgm")
    raw = (tmp_path / "s.pgm").read_bytes()
    assert raw.startswith(b"P5\n2 2\n255\n")
    # high band on top: row 0 of the image is band 1
    assert list(raw[-4:]) == [0, 191, 255, 128]
