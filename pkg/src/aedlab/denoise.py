"""Profile-free spectral gating.

The noise threshold is estimated from the very clip being cleaned, so no
separate noise recording is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .audio_io import AudioClip
from .dsp import Spectrogram, StftConfig, istft, stft, to_db

SCOPES = ("band", "global")


@dataclass(frozen=True)
class DenoiseConfig:
    floor_db: float = -80.0
    threshold_offset_db: float = 0.0
    threshold_scope: str = "global"
    smooth_freq_bins: int = 1
    smooth_time_frames: int = 3
    attenuation_db: float = 30.0
    stft: StftConfig = StftConfig()

    def __post_init__(self):
        if self.smooth_freq_bins < 0 or self.smooth_time_frames < 0:
            raise ValueError("smoothing radii must be >= 0")
        if self.attenuation_db <= 0:
            raise ValueError("attenuation_db must be positive")
        if self.floor_db >= 0:
            raise ValueError("floor_db must be negative")
        if self.threshold_scope not in SCOPES:
            raise ValueError(f"threshold_scope must be one of {SCOPES}")

    def to_dict(self) -> dict:
        return {"floor_db": self.floor_db, "threshold_offset_db": self.threshold_offset_db,
                "threshold_scope": self.threshold_scope,
                "smooth_freq_bins": self.smooth_freq_bins,
                "smooth_time_frames": self.smooth_time_frames,
                "attenuation_db": self.attenuation_db}

    @classmethod
    def from_dict(cls, d: dict) -> "DenoiseConfig":
        return cls(**{k: d[k] for k in ("floor_db", "threshold_offset_db", "threshold_scope",
                                        "smooth_freq_bins",
                                        "smooth_time_frames", "attenuation_db") if k in d})


def derive_threshold(spec_db: Spectrogram, offset_db: float = 0.0,
                     scope: str = "band") -> np.ndarray:
    """Noise threshold per band: mean + std of the dB levels, plus ``offset_db``.

    ``scope="band"`` takes the statistics of each band over time.
    ``scope="global"`` pools every bin of the spectrogram into one value
    (broadcast to all bands); a stationary tone then stays above it, whereas
    per-band statistics put the threshold right on the tone's own level.
    """
    v = spec_db.values
    if scope == "band":
        return v.mean(axis=1) + v.std(axis=1) + offset_db
    if scope == "global":
        return np.full(v.shape[0], v.mean() + v.std() + offset_db)
    raise ValueError(f"scope must be one of {SCOPES}, got {scope!r}")


def triangle(radius: int) -> np.ndarray:
    """Linear ramp up then down, support ``2 * radius + 1``, peak 1."""
    up = np.linspace(0.0, 1.0, radius + 2)[1:]
    return np.concatenate([up, up[-2::-1]])


def smoothing_kernel(freq_radius: int, time_radius: int) -> np.ndarray:
    k = np.outer(triangle(freq_radius), triangle(time_radius))
    return k / k.sum()


def gate_mask(spec_db: Spectrogram, thresholds: np.ndarray,
              smooth_freq_bins: int = 1, smooth_time_frames: int = 3) -> np.ndarray:
    """Binary above-threshold mask smoothed by a separable triangular kernel.

    Borders are handled by edge replication, so a uniform mask stays uniform.
    """
    v = spec_db.values
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if thresholds.shape != (v.shape[0],):
        raise ValueError(f"need one threshold per band ({v.shape[0]}), got {thresholds.shape}")
    raw = (v > thresholds[:, None]).astype(np.float64)
    kf = triangle(smooth_freq_bins)
    kt = triangle(smooth_time_frames)
    m = convolve1d(raw, kf / kf.sum(), axis=0, mode="nearest")
    m = convolve1d(m, kt / kt.sum(), axis=1, mode="nearest")
    return np.clip(m, 0.0, 1.0)


def denoise(clip: AudioClip, cfg: DenoiseConfig = DenoiseConfig()) -> AudioClip:
    """Attenuate time-frequency bins that fall below the clip's own noise threshold.

    The clip is reflect-padded by one frame on each side so that every real
    sample is covered by overlapping frames; otherwise the overlap-add
    normalisation near the edges divides gated frames by a vanishing window
    sum and blows them up.
    """
    x = np.asarray(clip.samples, dtype=np.float64)
    pad = min(cfg.stft.fft_size, x.size - 1)
    padded = AudioClip(np.pad(x, pad, mode="reflect"), clip.sample_rate)
    spec = stft(padded, cfg.stft)
    spec_db = to_db(spec, cfg.floor_db)
    thresholds = derive_threshold(spec_db, cfg.threshold_offset_db, cfg.threshold_scope)
    mask = gate_mask(spec_db, thresholds,
                     cfg.smooth_freq_bins, cfg.smooth_time_frames)
    floor_gain = 10.0 ** (-cfg.attenuation_db / 20.0)
    gain = floor_gain + mask * (1.0 - floor_gain)
    gated = type(spec)(spec.frames * gain, spec.config, spec.sample_rate)
    out = istft(gated, length=padded.samples.size)
    return clip.with_samples(out.samples[pad:pad + x.size])
