"""WAV I/O and clip normalization (rate, channels, length)."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.io import wavfile

CANONICAL_RATE = 22050
CLIP_SECONDS = 3.0


class AudioError(ValueError):
    """Unreadable, unsupported, or empty audio."""


class ClipRejected(ValueError):
    """Raised by :func:`normalize_clip` for clips that cannot be normalized."""

    def __init__(self, reason: str, duration: float):
        self.reason = reason
        self.duration = duration
        super().__init__(f"{reason} ({duration:.3f} s)")


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int
    label: str | None = None
    source_id: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 1:
            raise AudioError(f"clip must be mono (1-D), got shape {s.shape}")
        if s.size == 0:
            raise AudioError("clip has zero samples")
        if self.sample_rate <= 0:
            raise AudioError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", s)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples: np.ndarray, **changes) -> "AudioClip":
        return replace(self, samples=samples, **changes)


def read_wav(path) -> AudioClip:
    """Read 16-bit PCM or 32-bit float WAV, mixing stereo to mono."""
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:  # scipy raises ValueError / struct errors on junk
        raise AudioError(f"cannot read {path}: {exc}") from exc
    if data.dtype == np.int16:
        # symmetric scale: +32767 reads as exactly 1.0, -32768 is clamped
        x = np.maximum(data.astype(np.float64) / 32767.0, -1.0)
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise AudioError(f"unsupported encoding in {path}: {data.dtype} "
                         "(expected 16-bit PCM or 32-bit float)")
    if x.ndim == 2:
        if x.shape[1] > 2:
            raise AudioError(f"{path} has {x.shape[1]} channels; only mono/stereo supported")
        x = x.mean(axis=1)
    if x.size == 0:
        raise AudioError(f"{path} contains no audio")
    return AudioClip(x, int(rate), source_id=str(path))


def write_wav(clip: AudioClip, path) -> None:
    """Write 16-bit PCM mono; samples are clamped to [-1, 1]."""
    x = np.asarray(clip.samples, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise AudioError("refusing to write non-finite samples")
    pcm = np.round(np.clip(x, -1.0, 1.0) * 32767.0).astype(np.int16)
    wavfile.write(Path(path), int(clip.sample_rate), pcm)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Linear-interpolation resampling to ``target_rate``."""
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return clip
    n_in = clip.samples.size
    n_out = max(1, int(round(n_in * target_rate / clip.sample_rate)))
    positions = np.arange(n_out) * (clip.sample_rate / target_rate)
    out = np.interp(positions, np.arange(n_in), clip.samples)
    return clip.with_samples(out, sample_rate=int(target_rate))


def max_energy_window(samples: np.ndarray, length: int) -> int:
    """Start index of the ``length``-sample window with the most energy (first on ties)."""
    if length >= samples.size:
        return 0
    csum = np.concatenate(([0.0], np.cumsum(np.square(samples, dtype=np.float64))))
    energy = csum[length:] - csum[:-length]
    return int(np.argmax(energy))


def normalize_clip(clip: AudioClip, clip_seconds: float = CLIP_SECONDS) -> AudioClip:
    """Resample to 22 050 Hz and crop to exactly ``clip_seconds``.

    Clips shorter than ``clip_seconds`` raise :class:`ClipRejected`.  Longer
    clips keep the window of maximum energy.
    """
    if clip.duration + 1e-9 < clip_seconds:
        raise ClipRejected("too_short", clip.duration)
    out = resample(clip, CANONICAL_RATE)
    n = int(round(CANONICAL_RATE * clip_seconds))
    x = out.samples
    if x.size < n:
        # rounding in resample can lose a sample
        x = np.pad(x, (0, n - x.size), mode="edge")
    elif x.size > n:
        start = max_energy_window(x, n)
        x = x[start:start + n]
    if x is out.samples:
        return out
    return out.with_samples(x)
