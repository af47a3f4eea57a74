from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aedlab.attack import (
    WHITE_NOISE_LADDER,
    InfusionPlan,
    NoiseSpec,
    add_background_noise,
    add_white_noise,
    background_term,
    derive_seed,
    fit_noise,
    infuse_testset,
    load_noise_source,
    perturb,
    select_subset,
    snr_db,
    stock_noise,
    white_term,
    write_manifest,
)
from aedlab.audio_io import AudioClip, write_wav

RATE = 22050
N = 66150


def tone(freq, amp=0.5, n=N):
    return AudioClip(amp * np.sin(2 * np.pi * freq * np.arange(n) / RATE), RATE)


def test_ladder_values():
    assert WHITE_NOISE_LADDER == (0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05,
                                  0.1, 0.2, 0.3, 0.4, 0.5)


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("pink", 0.1)
    with pytest.raises(ValueError):
        NoiseSpec("white", 1.5)
    with pytest.raises(ValueError):
        NoiseSpec("white", 0.1, target_snr_db=10)
    with pytest.raises(ValueError):
        NoiseSpec("background", noise_source="babble")
    with pytest.raises(ValueError):
        NoiseSpec("background", 0.5, 10.0, noise_source="babble")
    with pytest.raises(ValueError):
        NoiseSpec("background", 0.5)
    with pytest.raises(ValueError):
        InfusionPlan(1.5, NoiseSpec("white", 0.1))
    spec = NoiseSpec("background", target_snr_db=10.0, noise_source="traffic", seed=3)
    assert NoiseSpec.from_dict(spec.to_dict()) == spec
    assert spec.level == 10.0


def test_zero_gain_background_is_identity():
    s = tone(440)
    out = add_background_noise(s, tone(1000), NoiseSpec("background", 0.0, noise_source="x"))
    np.testing.assert_array_equal(out.samples, s.samples)


def test_background_snr_target_two_tones():
    sample, noise = tone(440), tone(1300)
    spec = NoiseSpec("background", target_snr_db=10.0, noise_source="tone")
    term = background_term(sample, noise, spec)
    assert abs(snr_db(sample, term) - 10.0) <= 0.1
    # oracle: equal-power tones need gain sqrt(1/10)
    peak = np.max(np.abs(term))
    assert peak == pytest.approx(0.5 / math.sqrt(10), rel=1e-3)


def test_silent_sample_gets_scaled_noise():
    noise = tone(700, n=N)
    out = add_background_noise(AudioClip(np.zeros(N), RATE), noise,
                               NoiseSpec("background", 0.3, noise_source="tone"))
    np.testing.assert_allclose(out.samples, 0.3 * noise.samples)


def test_silent_noise_source_with_snr_fails():
    with pytest.raises(ValueError):
        add_background_noise(tone(440), AudioClip(np.zeros(N), RATE),
                             NoiseSpec("background", target_snr_db=10, noise_source="z"))


def test_background_output_clamped():
    out = add_background_noise(tone(440, amp=0.9), tone(441, amp=0.9),
                               NoiseSpec("background", 1.0, noise_source="t"))
    assert np.max(np.abs(out.samples)) <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 30), st.integers(0, 10_000))
def test_background_snr_property(target, seed):
    rng = np.random.default_rng(seed)
    sample = AudioClip(rng.uniform(-0.5, 0.5, 4000), RATE)
    noise = AudioClip(rng.standard_normal(int(rng.integers(500, 9000))), RATE)
    term = background_term(sample, noise,
                           NoiseSpec("background", target_snr_db=target, noise_source="r",
                                     seed=seed))
    assert abs(snr_db(sample, term) - target) <= 0.1


def test_fit_noise_loops_and_crops():
    rng = np.random.default_rng(0)
    short = np.arange(5.0)
    np.testing.assert_array_equal(fit_noise(short, 12, rng), np.tile(short, 3)[:12])
    long = np.arange(100.0)
    w = fit_noise(long, 10, rng)
    assert w.size == 10 and np.all(np.diff(w) == 1)


def test_white_factor_zero_identity():
    s = tone(440)
    assert add_white_noise(s, NoiseSpec("white", 0.0, seed=1)).samples is s.samples


def test_white_std_matches_factor_times_max():
    s = AudioClip(np.full(N, 0.2), RATE)
    s.samples[100] = 0.8
    term = white_term(s, NoiseSpec("white", 0.5, seed=11))
    assert abs(np.std(term) - 0.4) <= 0.05 * 0.4
    assert abs(np.mean(term)) < 0.01


def test_white_zero_sample():
    out = add_white_noise(AudioClip(np.zeros(N), RATE), NoiseSpec("white", 0.3, seed=2))
    assert np.all(out.samples == 0.0)


def test_white_deterministic_and_seeded():
    s = tone(440)
    a = add_white_noise(s, NoiseSpec("white", 0.1, seed=5)).samples
    b = add_white_noise(s, NoiseSpec("white", 0.1, seed=5)).samples
    c = add_white_noise(s, NoiseSpec("white", 0.1, seed=6)).samples
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)
    assert np.max(np.abs(a)) <= 1.0


def test_white_snr_closed_form():
    s = tone(440, amp=0.5)
    f = 0.05
    A = f * np.max(s.samples)
    expected = 10 * math.log10(0.125 / A ** 2)
    got = [snr_db(s, white_term(s, NoiseSpec("white", f, seed=k))) for k in range(10)]
    assert abs(np.mean(got) - expected) < 0.2


def test_snr_identities():
    x = np.random.default_rng(0).standard_normal(1000)
    assert snr_db(x, x) == pytest.approx(0.0)
    assert snr_db(x, x / math.sqrt(10)) == pytest.approx(10.0)
    assert snr_db(x, np.zeros(1000)) == math.inf
    assert snr_db(np.zeros(1000), x) == -math.inf
    with pytest.raises(ValueError):
        snr_db(x, x[:10])


def test_stock_noises():
    for name in ("traffic", "babble"):
        clip = stock_noise(name)
        assert clip.sample_rate == RATE
        assert np.max(np.abs(clip.samples)) == pytest.approx(0.5)
        assert stock_noise(name).samples.tobytes() == clip.samples.tobytes()
    with pytest.raises(ValueError):
        stock_noise("rain")
    # traffic is low-frequency, babble sits in the speech band
    spec = lambda c: np.abs(np.fft.rfft(c.samples)) ** 2
    f = np.fft.rfftfreq(stock_noise("traffic").samples.size, 1 / RATE)
    t, b = spec(stock_noise("traffic")), spec(stock_noise("babble"))
    assert t[f < 300].sum() > t[f >= 300].sum()
    assert b[(f > 300) & (f < 3400)].sum() > 0.99 * b.sum()


def test_noise_source_from_wav(tmp_path):
    p = tmp_path / "n.wav"
    write_wav(AudioClip(np.full(4410, 0.25), 44100), p)
    clip = load_noise_source(str(p))
    assert clip.sample_rate == RATE and clip.samples.size == 2205


def test_perturb_dispatch():
    s = tone(440)
    w = perturb(s, NoiseSpec("white", 0.1, seed=1))
    np.testing.assert_array_equal(w.samples, add_white_noise(s, NoiseSpec("white", 0.1, seed=1)).samples)
    b = perturb(s, NoiseSpec("background", target_snr_db=10, noise_source="babble", seed=4))
    term = b.samples - s.samples
    assert abs(snr_db(s, term) - 10.0) < 0.2


def test_derive_seed_and_subset():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    sub = select_subset(150, 37, 9)
    assert sub.size == 37 and np.all(np.diff(sub) > 0)
    np.testing.assert_array_equal(sub, select_subset(150, 37, 9))


def labelled_set(n_pos=150, n_neg=150):
    rng = np.random.default_rng(0)
    clips = [AudioClip(rng.uniform(-0.5, 0.5, 2048), RATE, "pos" if i < n_pos else "neg",
                       f"c{i}") for i in range(n_pos + n_neg)]
    return clips


def test_infuse_fraction_zero():
    clips = labelled_set()
    out, manifest = infuse_testset(clips, InfusionPlan(0.0, NoiseSpec("white", 0.1)), "pos")
    assert manifest == []
    assert all(a is b for a, b in zip(out, clips))


def test_infuse_full_lists_all_positives():
    clips = labelled_set()
    plan = InfusionPlan(1.0, NoiseSpec("white", 0.1, seed=3), selection_seed=4)
    out, manifest = infuse_testset(clips, plan, "pos")
    assert len(manifest) == 150
    assert {r["clip_id"] for r in manifest} == {f"c{i}" for i in range(150)}
    for a, b in zip(out[150:], clips[150:]):
        assert a is b
    assert [c.label for c in out] == [c.label for c in clips]
    again, manifest2 = infuse_testset(clips, plan, "pos")
    assert manifest == manifest2
    assert all(np.array_equal(a.samples, b.samples) for a, b in zip(out, again))


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.integers(0, 1000))
def test_infuse_counts_property(fraction, seed):
    clips = labelled_set(20, 20)
    plan = InfusionPlan(fraction, NoiseSpec("white", 0.05, seed=seed), selection_seed=seed)
    out, manifest = infuse_testset(clips, plan, "pos")
    assert len(manifest) == round(fraction * 20)
    changed = {c.source_id for c, o in zip(clips, out) if o is not c}
    assert changed == {r["clip_id"] for r in manifest}
    assert all(o is c for o, c in zip(out[20:], clips[20:]))


def test_infuse_needs_positives():
    with pytest.raises(ValueError):
        infuse_testset(labelled_set(0, 5), InfusionPlan(1.0, NoiseSpec("white", 0.1)), "pos")


def test_write_manifest(tmp_path):
    recs = [{"clip_id": "a", "kind": "white", "factor_or_snr": 0.1, "seed": 1}]
    write_manifest(recs, tmp_path / "m.json")
    assert json.loads((tmp_path / "m.json").read_text()) == recs
