"""STFT / ISTFT, decibel and mel spectrograms, and the classifier input."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioClip

MODEL_BANDS = 64
MODEL_FRAMES = 128
MODEL_FLOOR_DB = -80.0


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 1024
    hop: int = 512
    window: str = "hann"

    def __post_init__(self):
        n = self.fft_size
        if n <= 0 or n & (n - 1):
            raise ValueError(f"fft_size must be a power of two, got {n}")
        if not 0 < self.hop <= n:
            raise ValueError(f"hop must satisfy 0 < hop <= fft_size, got {self.hop}")
        if self.window != "hann":
            raise ValueError(f"unsupported window {self.window!r}")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def n_frames(self, length: int) -> int:
        if length < self.fft_size:
            raise ValueError(f"signal of {length} samples is shorter than one "
                             f"{self.fft_size}-sample frame")
        return 1 + (length - self.fft_size) // self.hop

    def analysis_window(self) -> np.ndarray:
        # periodic Hann
        n = np.arange(self.fft_size)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.fft_size)


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    frames: np.ndarray  # (n_bins, n_frames) complex
    config: StftConfig
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True, eq=False)
class Spectrogram:
    values: np.ndarray  # (n_bands, n_frames), dB
    band_kind: str
    floor_db: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def stft(clip: AudioClip, cfg: StftConfig = StftConfig()) -> ComplexSpectrum:
    """Hann-windowed STFT without centering; a trailing partial frame is dropped."""
    x = np.asarray(clip.samples, dtype=np.float64)
    n_frames = cfg.n_frames(x.size)
    idx = np.arange(cfg.fft_size)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    framed = x[idx] * cfg.analysis_window()
    coefs = np.fft.rfft(framed, axis=1).T
    return ComplexSpectrum(coefs, cfg, clip.sample_rate)


def istft(spec: ComplexSpectrum, length: int | None = None) -> AudioClip:
    """Weighted overlap-add inverse of :func:`stft`.

    Samples not covered by any frame (only possible when ``length`` exceeds
    the span of the frames) come back as zeros.
    """
    cfg = spec.config
    if spec.frames.ndim != 2 or spec.frames.shape[0] != cfg.n_bins:
        raise ValueError(f"spectrum shape {spec.frames.shape} inconsistent with "
                         f"fft_size {cfg.fft_size}")
    n_frames = spec.n_frames
    span = cfg.fft_size + cfg.hop * (n_frames - 1)
    win = cfg.analysis_window()
    frames = np.fft.irfft(spec.frames.T, n=cfg.fft_size, axis=1) * win
    out = np.zeros(span)
    norm = np.zeros(span)
    for t in range(n_frames):
        sl = slice(t * cfg.hop, t * cfg.hop + cfg.fft_size)
        out[sl] += frames[t]
        norm[sl] += win * win
    nz = norm > 1e-10
    out[nz] /= norm[nz]
    if length is not None:
        out = out[:length] if length <= span else np.pad(out, (0, length - span))
    return AudioClip(out, spec.sample_rate)


def to_db(spec: ComplexSpectrum, floor_db: float = MODEL_FLOOR_DB) -> Spectrogram:
    """Magnitudes in dB relative to the spectrum's own maximum, clamped at floor."""
    if floor_db >= 0:
        raise ValueError("floor_db must be negative")
    mag = np.abs(spec.frames)
    peak = mag.max()
    if peak == 0:
        return Spectrogram(np.full(mag.shape, float(floor_db)), "linear", floor_db)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return Spectrogram(np.maximum(db, floor_db), "linear", floor_db)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_bands: int, n_bins: int, sample_rate: int) -> np.ndarray:
    """Triangular HTK-mel filters over 0 Hz..Nyquist, each row summing to 1."""
    nyquist = sample_rate / 2.0
    bin_hz = np.linspace(0.0, nyquist, n_bins)
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(nyquist), n_bands + 2))
    lo, center, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_hz - lo) / (center - lo)
    falling = (hi - bin_hz) / (hi - center)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    sums = fb.sum(axis=1, keepdims=True)
    if np.any(sums == 0):
        raise ValueError(f"{n_bands} mel bands is too many for {n_bins} linear bins")
    return fb / sums


def to_mel(spec_db: Spectrogram, n_bands: int = MODEL_BANDS, sample_rate: int = 22050) -> Spectrogram:
    """Map a linear-band dB spectrogram onto ``n_bands`` mel bands (power domain)."""
    if spec_db.band_kind != "linear":
        raise ValueError("to_mel expects a linear-band spectrogram")
    n_bins = spec_db.values.shape[0]
    if n_bands >= n_bins:
        raise ValueError(f"n_bands ({n_bands}) must be below the linear band count ({n_bins})")
    fb = mel_filterbank(n_bands, n_bins, sample_rate)
    power = 10.0 ** (spec_db.values / 10.0)
    mel_power = fb @ power
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(mel_power)
    return Spectrogram(np.maximum(db, spec_db.floor_db), "mel", spec_db.floor_db)


def fit_frames(values: np.ndarray, n_frames: int, fill: float) -> np.ndarray:
    """Trim or right-pad (with ``fill``) the time axis to ``n_frames``."""
    have = values.shape[1]
    if have >= n_frames:
        return values[:, :n_frames]
    return np.pad(values, ((0, 0), (0, n_frames - have)), constant_values=fill)


def clip_to_model_input(clip: AudioClip) -> np.ndarray:
    """64 x 128 float32 mel spectrogram of a normalized clip, scaled to [0, 1]."""
    spec = to_db(stft(clip, StftConfig()), MODEL_FLOOR_DB)
    mel = to_mel(spec, MODEL_BANDS, clip.sample_rate)
    v = fit_frames(mel.values, MODEL_FRAMES, MODEL_FLOOR_DB)
    scaled = (v - MODEL_FLOOR_DB) / -MODEL_FLOOR_DB
    return np.clip(scaled, 0.0, 1.0).astype(np.float32)


def featurize(clips) -> np.ndarray:
    """Stack :func:`clip_to_model_input` over clips -> (N, 64, 128)."""
    return np.stack([clip_to_model_input(c) for c in clips]) if clips else \
        np.zeros((0, MODEL_BANDS, MODEL_FRAMES), dtype=np.float32)


def export_csv(spec: Spectrogram, path) -> None:
    """One CSV row per band, low frequency first."""
    np.savetxt(Path(path), spec.values, delimiter=",", fmt="%.4f")


def export_pgm(spec: Spectrogram, path) -> None:
    """8-bit binary PGM; floor is black, 0 dB white, high frequencies on top."""
    v = np.clip((spec.values - spec.floor_db) / -spec.floor_db, 0.0, 1.0)
    img = np.round(v[::-1] * 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
