"""Seeded synthetic sound families standing in for the real event databases.

Positive (event) families: ``burst`` (gunshot-like), ``shatter``
(glass-break-like), ``tone-sweep`` (siren-like), ``yelp`` (bark-like).
Negative (background) families: ``hum``, ``chatter``, ``rumble``, ``fan``
(stationary broadband machine noise).
Every generator returns ``n`` samples at 22 050 Hz before peak scaling.
"""

from __future__ import annotations

import numpy as np

from ..audio_io import CANONICAL_RATE

RATE = CANONICAL_RATE


def _shaped_noise(rng, n, lo_hz=None, hi_hz=None):
    """White noise band-limited in the frequency domain (brick-wall)."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / RATE)
    keep = np.ones_like(f, dtype=bool)
    if lo_hz is not None:
        keep &= f >= lo_hz
    if hi_hz is not None:
        keep &= f <= hi_hz
    return np.fft.irfft(spec * keep, n)


def _one_pole_lowpass(x, cutoff_hz):
    # frequency-domain equivalent of a first-order lowpass, avoids a Python loop
    n = x.size
    f = np.fft.rfftfreq(n, 1.0 / RATE)
    return np.fft.irfft(np.fft.rfft(x) / (1.0 + 1j * f / cutoff_hz), n)


def burst(rng, n):
    t = np.arange(n) / RATE
    x = np.zeros(n)
    onset = rng.uniform(0.05, 2.0)
    n_shots = 1 if rng.random() < 0.7 else 2
    # distance 0 is a close shot; far shots lose treble and gain a reverberant tail
    distance = rng.uniform(0.0, 1.0) if rng.random() < 0.6 else 0.0
    cutoff = 9000.0 * (1.0 - distance) + 1500.0 * distance
    for k in range(n_shots):
        on = onset + k * rng.uniform(0.25, 0.7)
        tau = rng.uniform(0.02, 0.12)
        gate = t >= on
        env = np.where(gate, np.exp(-(t - on) / tau), 0.0)
        crack = rng.standard_normal(n)
        tilt = rng.uniform(0.0, 0.7)
        crack = (1 - tilt) * crack + tilt * _one_pole_lowpass(crack, rng.uniform(1500, 6000)) * 3
        boom_f = rng.uniform(50, 160)
        boom = np.sin(2 * np.pi * boom_f * (t - on)) * np.where(gate, np.exp(-(t - on) / (3 * tau)), 0.0)
        shot = crack * env + rng.uniform(0.2, 1.0) * boom
        if distance > 0:
            tail_s = rng.uniform(0.3, 1.2) * distance
            tail = rng.standard_normal(n) * np.where(gate, np.exp(-(t - on) / max(tail_s, 0.02)), 0.0)
            shot += 10.0 ** (-(20.0 - 12.0 * distance) / 20.0) * tail
            shot = _one_pole_lowpass(_one_pole_lowpass(shot, cutoff), cutoff)
        x += (1.0 if k == 0 else rng.uniform(0.3, 0.8)) * shot
    return x


def shatter(rng, n):
    t = np.arange(n) / RATE
    x = np.zeros(n)
    onset = rng.uniform(0.05, 1.6)
    span = rng.uniform(0.25, 0.9)
    hp = rng.uniform(2500, 5000)
    for _ in range(int(rng.integers(20, 60))):
        at = onset + span * rng.beta(1.2, 3.0)
        i0 = int(at * RATE)
        length = int(rng.uniform(0.002, 0.008) * RATE)
        if i0 >= n:
            continue
        seg = rng.standard_normal(length) * np.exp(-np.arange(length) / (0.3 * length))
        x[i0:i0 + length] += rng.uniform(0.2, 1.0) * seg[:n - i0]
    x = _shaped_noise_apply(x, hp)
    for _ in range(int(rng.integers(3, 9))):
        at = onset + span * rng.random()
        f = rng.uniform(3000, 9000)
        env = np.where(t >= at, np.exp(-(t - at) / rng.uniform(0.02, 0.08)), 0.0)
        x += rng.uniform(0.05, 0.3) * env * np.sin(2 * np.pi * f * (t - at))
    return x


def _shaped_noise_apply(x, hp_hz):
    n = x.size
    f = np.fft.rfftfreq(n, 1.0 / RATE)
    return np.fft.irfft(np.fft.rfft(x) * (f >= hp_hz), n)


def tone_sweep(rng, n):
    t = np.arange(n) / RATE
    fc = rng.uniform(700, 1400)
    dev = rng.uniform(200, 500)
    period = rng.uniform(0.3, 3.0)
    phase0 = rng.uniform(0, 2 * np.pi)
    if rng.random() < 0.5:
        lfo = np.sin(2 * np.pi * t / period + phase0)
    else:
        lfo = 2 * np.abs(2 * ((t / period + phase0) % 1.0) - 1) - 1
    inst_f = fc + dev * lfo
    phase = 2 * np.pi * np.cumsum(inst_f) / RATE
    x = np.sin(phase) + rng.uniform(0.1, 0.5) * np.sin(2 * phase) + rng.uniform(0.0, 0.3) * np.sin(3 * phase)
    onset = rng.uniform(0.0, 0.6)
    ramp = np.clip((t - onset) / 0.05, 0.0, 1.0)
    return x * ramp


def yelp(rng, n):
    t = np.arange(n) / RATE
    x = np.zeros(n)
    at = rng.uniform(0.05, 0.8)
    for _ in range(int(rng.integers(2, 5))):
        dur = rng.uniform(0.08, 0.18)
        f0 = rng.uniform(300, 800)
        mask = (t >= at) & (t < at + dur)
        local = t[mask] - at
        glide = f0 * (1.0 - 0.3 * local / dur)
        phase = 2 * np.pi * np.cumsum(glide) / RATE
        env = np.minimum(local / 0.01, 1.0) * np.exp(-local / (0.4 * dur))
        rolloff = rng.uniform(0.4, 0.8)
        pulse = sum(rolloff ** (k - 1) * np.sin(k * phase) for k in range(1, 7))
        x[mask] += env * pulse
        at += dur + rng.uniform(0.15, 0.6)
        if at >= t[-1]:
            break
    return x


def hum(rng, n):
    t = np.arange(n) / RATE
    f0 = rng.uniform(45, 130)
    x = np.zeros(n)
    for k in range(1, 7):
        x += rng.uniform(0.1, 1.0) / k * np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi))
    wobble = 1.0 + 0.1 * np.sin(2 * np.pi * rng.uniform(0.1, 1.0) * t)
    return x * wobble


def chatter(rng, n):
    t = np.arange(n) / RATE
    lo, hi = rng.uniform(200, 600), rng.uniform(2500, 5000)
    x = np.zeros(n)
    for _ in range(int(rng.integers(2, 6))):
        voice = _shaped_noise(rng, n, lo, hi)
        syl = rng.uniform(3.0, 7.0)
        env = np.clip(np.sin(2 * np.pi * syl * t + rng.uniform(0, 2 * np.pi)), 0.0, None) ** 1.5
        x += voice * env
    return x


def rumble(rng, n):
    brown = np.cumsum(rng.standard_normal(n))
    brown -= np.linspace(brown[0], brown[-1], n)
    x = _one_pole_lowpass(brown, rng.uniform(150, 600))
    f = np.fft.rfftfreq(n, 1.0 / RATE)
    return np.fft.irfft(np.fft.rfft(x) * (f >= 20), n)


def fan(rng, n):
    t = np.arange(n) / RATE
    f = np.fft.rfftfreq(n, 1.0 / RATE)
    tilt = rng.uniform(0.0, 1.0)
    shape = (1.0 + f / rng.uniform(200, 1500)) ** (-0.5 * tilt)
    shape *= 1.0 / (1.0 + (f / rng.uniform(3000, 10000)) ** 4)
    x = np.fft.irfft(np.fft.rfft(rng.standard_normal(n)) * shape, n)
    x /= np.std(x)
    blade = rng.uniform(40, 250)
    for k in range(1, 4):
        x += rng.uniform(0.0, 0.6) / k * np.sin(2 * np.pi * k * blade * t + rng.uniform(0, 2 * np.pi))
    swirl = 1.0 + rng.uniform(0.0, 0.15) * np.sin(2 * np.pi * rng.uniform(0.2, 2.0) * t)
    return x * swirl


FAMILIES = {
    "burst": burst,
    "shatter": shatter,
    "tone-sweep": tone_sweep,
    "yelp": yelp,
    "hum": hum,
    "chatter": chatter,
    "rumble": rumble,
    "fan": fan,
}
POSITIVE_FAMILIES = ("burst", "shatter", "tone-sweep", "yelp")
NEGATIVE_FAMILIES = ("hum", "chatter", "rumble", "fan")


def synthesize(family: str, rng: np.random.Generator, seconds: float = 3.0) -> np.ndarray:
    """One clip of ``family``: peak in [0.3, 0.95] over a faint room-tone floor."""
    try:
        gen = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    n = int(round(seconds * RATE))
    x = gen(rng, n)
    x = x / (np.max(np.abs(x)) + 1e-12)
    room = rng.standard_normal(n) * 10.0 ** (rng.uniform(-65, -45) / 20.0)
    x = x + room
    return x * (rng.uniform(0.3, 0.95) / np.max(np.abs(x)))
