"""Background-noise and white-noise adversarial perturbations."""

from __future__ import annotations

import json
import math
from functools import lru_cache
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import CANONICAL_RATE, AudioClip, read_wav, resample

WHITE_NOISE_LADDER = (0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
KINDS = ("background", "white")
STOCK_NOISES = ("traffic", "babble")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    adjustment_factor: float | None = None
    target_snr_db: float | None = None
    noise_source: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"noise kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "white":
            if self.adjustment_factor is None or not 0.0 <= self.adjustment_factor <= 1.0:
                raise ValueError("white noise needs adjustment_factor in [0, 1]")
            if self.target_snr_db is not None:
                raise ValueError("target_snr_db applies to background noise only")
        else:
            if (self.adjustment_factor is None) == (self.target_snr_db is None):
                raise ValueError("background noise needs exactly one of "
                                 "adjustment_factor or target_snr_db")
            if self.adjustment_factor is not None and self.adjustment_factor < 0:
                raise ValueError("adjustment_factor must be non-negative")
            if not self.noise_source:
                raise ValueError("background noise needs a noise_source")

    @property
    def level(self) -> float:
        """The factor, or the SNR in dB for SNR-targeted background noise."""
        return self.adjustment_factor if self.adjustment_factor is not None else self.target_snr_db

    def with_seed(self, seed: int) -> "NoiseSpec":
        return NoiseSpec(self.kind, self.adjustment_factor, self.target_snr_db,
                         self.noise_source, int(seed))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "adjustment_factor": self.adjustment_factor,
                "target_snr_db": self.target_snr_db, "noise_source": self.noise_source,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(d["kind"], d.get("adjustment_factor"), d.get("target_snr_db"),
                   d.get("noise_source"), int(d.get("seed", 0)))


@dataclass(frozen=True)
class InfusionPlan:
    fraction: float
    spec: NoiseSpec
    selection_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"infusion fraction must lie in [0, 1], got {self.fraction}")


def _power(x: np.ndarray) -> float:
    return float(np.mean(np.square(x, dtype=np.float64)))


def snr_db(signal: AudioClip | np.ndarray, noise_term: AudioClip | np.ndarray) -> float:
    """10 log10 of signal energy over noise energy; +inf for silent noise, -inf for silent signal."""
    s = signal.samples if isinstance(signal, AudioClip) else np.asarray(signal)
    n = noise_term.samples if isinstance(noise_term, AudioClip) else np.asarray(noise_term)
    if s.shape != n.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {n.shape}")
    ps = float(np.sum(np.square(s, dtype=np.float64)))
    pn = float(np.sum(np.square(n, dtype=np.float64)))
    if pn == 0.0:
        return math.inf
    if ps == 0.0:
        return -math.inf
    return 10.0 * math.log10(ps / pn)


def fit_noise(noise: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    """Loop a short noise bed, or cut a random window out of a long one."""
    if noise.size < length:
        reps = -(-length // noise.size)
        return np.tile(noise, reps)[:length]
    offset = int(rng.integers(0, noise.size - length + 1))
    return noise[offset:offset + length]


def background_gain(sample: np.ndarray, noise: np.ndarray, target_snr_db: float) -> float:
    ps, pn = _power(sample), _power(noise)
    if pn == 0.0:
        raise ValueError("noise source is silent; cannot target an SNR")
    return math.sqrt(ps / (pn * 10.0 ** (target_snr_db / 10.0)))


def background_term(sample: AudioClip, noise: AudioClip, spec: NoiseSpec) -> np.ndarray:
    """The gained noise term that :func:`add_background_noise` mixes in (pre-clamp)."""
    if spec.kind != "background":
        raise ValueError("spec is not a background-noise spec")
    if noise.sample_rate != sample.sample_rate:
        raise ValueError("sample and noise must share a sample rate")
    rng = np.random.default_rng(spec.seed)
    bed = fit_noise(np.asarray(noise.samples, dtype=np.float64), sample.samples.size, rng)
    if spec.target_snr_db is not None:
        gain = background_gain(sample.samples, bed, spec.target_snr_db)
    else:
        gain = spec.adjustment_factor
    return gain * bed


def add_background_noise(sample: AudioClip, noise: AudioClip, spec: NoiseSpec) -> AudioClip:
    """Overlay a gained background-noise bed on ``sample`` and clamp to [-1, 1]."""
    term = background_term(sample, noise, spec)
    return sample.with_samples(np.clip(sample.samples + term, -1.0, 1.0))


def white_term(sample: AudioClip, spec: NoiseSpec) -> np.ndarray:
    """Pre-clamp injected term: factor * max(sample) * N(0, 1) draws."""
    if spec.kind != "white":
        raise ValueError("spec is not a white-noise spec")
    amplitude = spec.adjustment_factor * float(np.max(sample.samples))
    z = np.random.default_rng(spec.seed).standard_normal(sample.samples.size)
    return amplitude * z


def add_white_noise(sample: AudioClip, spec: NoiseSpec) -> AudioClip:
    if spec.adjustment_factor == 0:
        return sample
    term = white_term(sample, spec)
    return sample.with_samples(np.clip(sample.samples + term, -1.0, 1.0))


def perturb(clip: AudioClip, spec: NoiseSpec, noise: AudioClip | None = None) -> AudioClip:
    """Apply either attack; background specs resolve their source when ``noise`` is None."""
    if spec.kind == "white":
        return add_white_noise(clip, spec)
    if noise is None:
        noise = load_noise_source(spec.noise_source)
    return add_background_noise(clip, noise, spec)


def stock_noise(name: str, seconds: float = 10.0, seed: int = 7) -> AudioClip:
    """Generated stand-ins for recorded background noise.

    ``traffic``: low-passed (roughly 1/f^2 above ~120 Hz) noise with a slow
    swell.  ``babble``: speech-band noise with syllable-rate amplitude
    modulation summed over a few talkers.
    """
    rate = CANONICAL_RATE
    n = int(seconds * rate)
    rng = np.random.default_rng([seed, STOCK_NOISES.index(name) if name in STOCK_NOISES else 99])
    t = np.arange(n) / rate
    freqs = np.fft.rfftfreq(n, 1.0 / rate)
    if name == "traffic":
        shape = 1.0 / (1.0 + (freqs / 120.0) ** 2)
        x = np.fft.irfft(np.fft.rfft(rng.standard_normal(n)) * shape, n)
        x *= 1.0 + 0.5 * np.sin(2 * np.pi * 0.15 * t + rng.uniform(0, 2 * np.pi))
    elif name == "babble":
        band = ((freqs > 300) & (freqs < 3400)).astype(float)
        x = np.zeros(n)
        for _ in range(4):
            voice = np.fft.irfft(np.fft.rfft(rng.standard_normal(n)) * band, n)
            rate_hz = rng.uniform(3.0, 6.0)
            env = np.clip(np.sin(2 * np.pi * rate_hz * t + rng.uniform(0, 2 * np.pi)), 0, None)
            x += voice * env
    else:
        raise ValueError(f"unknown stock noise {name!r}; choose from {STOCK_NOISES}")
    x = 0.5 * x / np.max(np.abs(x))
    return AudioClip(x, rate, label=name, source_id=f"stock:{name}")


@lru_cache(maxsize=8)
def load_noise_source(ref: str) -> AudioClip:
    """Stock noise name (``traffic`` / ``babble``) or a WAV path."""
    if ref in STOCK_NOISES:
        return stock_noise(ref)
    clip = read_wav(ref)
    if clip.sample_rate != CANONICAL_RATE:
        clip = resample(clip, CANONICAL_RATE)
    return clip


def derive_seed(base: int, *keys) -> int:
    """Deterministic 32-bit child seed for per-clip draws."""
    return int(np.random.SeedSequence([int(base), *map(int, keys)]).generate_state(1)[0])


def select_subset(n: int, k: int, seed: int) -> np.ndarray:
    """Sorted positions of a seeded k-of-n selection without replacement."""
    rng = np.random.default_rng(seed)
    return np.sort(rng.permutation(n)[:k])


def infuse_testset(clips, plan: InfusionPlan, positive_class: str):
    """Perturb a seeded share of the positive clips; negatives pass through untouched.

    Returns ``(clips, manifest)`` where the manifest lists one record per
    perturbed clip.
    """
    clips = list(clips)
    pos_idx = [i for i, c in enumerate(clips) if c.label == positive_class]
    if not pos_idx:
        raise ValueError(f"no clips of positive class {positive_class!r}")
    k = int(round(plan.fraction * len(pos_idx)))
    if k == 0 or plan.spec.level == 0:
        return clips, []
    noise = None
    if plan.spec.kind == "background":
        noise = load_noise_source(plan.spec.noise_source)
    out = list(clips)
    manifest = []
    for j in select_subset(len(pos_idx), k, plan.selection_seed):
        i = pos_idx[j]
        spec = plan.spec.with_seed(derive_seed(plan.spec.seed, i))
        out[i] = perturb(clips[i], spec, noise)
        manifest.append({"clip_id": clips[i].source_id, "kind": spec.kind,
                         "factor_or_snr": spec.level, "seed": spec.seed})
    return out, manifest


def write_manifest(records, path) -> None:
    Path(path).write_text(json.dumps(list(records), indent=2))
