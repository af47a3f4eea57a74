"""Write a seeded synthetic corpus to disk together with its manifest."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..audio_io import CANONICAL_RATE, AudioClip, write_wav
from .manifest import Manifest, ManifestEntry, save_manifest
from .synthetic import FAMILIES, synthesize

MANIFEST_NAME = "manifest.json"


def _default_counts() -> dict[str, tuple[int, int]]:
    return {"burst": (1000, 150), "shatter": (100, 50), "tone-sweep": (100, 50), "yelp": (100, 50),
            "hum": (250, 38), "chatter": (250, 38), "rumble": (250, 37), "fan": (250, 37)}


@dataclass(frozen=True)
class CorpusSpec:
    """Clips per class as ``(n_train, n_test)``; the manifest's binary view uses
    ``positive_class`` against ``negative_classes``."""

    counts: dict[str, tuple[int, int]] = field(default_factory=_default_counts)
    positive_class: str = "burst"
    negative_classes: tuple[str, ...] = ("hum", "chatter", "rumble", "fan")
    seconds: float = 3.0

    def __post_init__(self):
        for name, (n_tr, n_te) in self.counts.items():
            if name not in FAMILIES:
                raise ValueError(f"unknown family {name!r}")
            if n_tr < 0 or n_te < 0:
                raise ValueError(f"negative clip count for {name!r}")

    @classmethod
    def uniform(cls, per_class: int, test_fraction: float = 0.2, families=None, **kw):
        families = families or ("burst", "shatter", "tone-sweep", "hum", "chatter", "rumble", "fan")
        n_test = int(round(per_class * test_fraction))
        return cls(counts={f: (per_class - n_test, n_test) for f in families}, **kw)

    def to_dict(self) -> dict:
        return {"counts": {k: list(v) for k, v in self.counts.items()},
                "positive_class": self.positive_class,
                "negative_classes": list(self.negative_classes), "seconds": self.seconds}

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusSpec":
        kw = {}
        if "counts" in d:
            kw["counts"] = {k: tuple(v) for k, v in d["counts"].items()}
        for key in ("positive_class", "seconds"):
            if key in d:
                kw[key] = d[key]
        if "negative_classes" in d:
            kw["negative_classes"] = tuple(d["negative_classes"])
        return cls(**kw)


def generate_synthetic_corpus(out_dir, spec: CorpusSpec = CorpusSpec(), seed: int = 0) -> Manifest:
    """Synthesize every clip of ``spec`` into ``out_dir/<class>/`` plus a manifest.

    Each clip has its own RNG derived from (seed, class, index), so output is
    byte-identical for a fixed seed regardless of counts in other classes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(spec.counts):
        n_train, n_test = spec.counts[name]
        class_dir = out_dir / name
        class_dir.mkdir(exist_ok=True)
        family_key = list(FAMILIES).index(name)
        for i in range(n_train + n_test):
            rng = np.random.default_rng([seed, family_key, i])
            x = synthesize(name, rng, spec.seconds)
            rel = f"{name}/{name}_{i:05d}.wav"
            write_wav(AudioClip(x, CANONICAL_RATE, name, rel), out_dir / rel)
            entries.append(ManifestEntry(rel, name, "train" if i < n_train else "test"))
    manifest = Manifest(entries, spec.positive_class, list(spec.negative_classes), out_dir)
    save_manifest(manifest, out_dir / MANIFEST_NAME)
    return manifest


def corpus_digest(manifest: Manifest) -> str:
    """SHA-256 over every WAV's bytes in manifest order."""
    h = hashlib.sha256()
    for e in manifest.entries:
        h.update(e.path.encode())
        h.update(manifest.resolve(e).read_bytes())
    return h.hexdigest()
