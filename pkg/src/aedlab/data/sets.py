"""Train/test set construction.

Sets are lists of :class:`Sample`: a pointer to a WAV file plus an optional
perturbation, so multi-thousand-clip sets cost almost nothing until loaded.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..attack import WHITE_NOISE_LADDER, NoiseSpec, derive_seed, perturb, select_subset
from ..audio_io import AudioClip, normalize_clip, read_wav
from .manifest import Manifest

# the ten levels used for train-time white-noise schedules (all but 0.0001)
WN_SCHEDULE = WHITE_NOISE_LADDER[1:]


@dataclass(frozen=True)
class Sample:
    path: str
    label: str
    clip_id: str
    perturbation: NoiseSpec | None = None

    def load(self) -> AudioClip:
        clip = normalize_clip(read_wav(self.path))
        clip = AudioClip(clip.samples, clip.sample_rate, self.label, self.clip_id)
        if self.perturbation is not None:
            clip = perturb(clip, self.perturbation)
        return clip


def load_clips(samples) -> list[AudioClip]:
    return [s.load() for s in samples]


def _draw(entries, k, rng, what):
    if len(entries) < k:
        raise ValueError(f"not enough clips for {what}: need {k}, have {len(entries)} "
                         f"(short by {k - len(entries)})")
    picks = rng.permutation(len(entries))[:k]
    return [entries[i] for i in sorted(picks)]


def even_counts(total: int, n_groups: int) -> list[int]:
    """Split ``total`` as evenly as possible; the remainder goes to the first groups."""
    base, rem = divmod(total, n_groups)
    return [base + (1 if i < rem else 0) for i in range(n_groups)]


def build_balanced_split(manifest: Manifest, n_train_per_class: int, n_test_per_class: int,
                         seed: int, classes: list[str] | None = None):
    """Seeded, disjoint train and test sets.

    Binary mode (``classes`` None): ``n_*_per_class`` positives plus the same
    number of negatives spread evenly over the negative classes.  Multiclass
    mode: ``n_*_per_class`` clips of each listed class.
    """
    rng = np.random.default_rng(seed)
    sets = {}
    for split, n in (("train", n_train_per_class), ("test", n_test_per_class)):
        chosen = []
        if classes is None:
            groups = [(manifest.positive_class, n)]
            groups += list(zip(manifest.negative_classes,
                               even_counts(n, len(manifest.negative_classes))))
        else:
            groups = [(c, n) for c in classes]
        for cls, k in groups:
            pool = manifest.by_class(cls, split)
            for e in _draw(pool, k, rng, f"class {cls!r} ({split})"):
                chosen.append(Sample(str(manifest.resolve(e)), cls, e.path))
        sets[split] = chosen
    train_paths = {s.path for s in sets["train"]}
    overlap = train_paths & {s.path for s in sets["test"]}
    if overlap:
        raise ValueError(f"train and test share {len(overlap)} clips")
    return sets["train"], sets["test"]


@dataclass(frozen=True)
class TrainRecipe:
    """How to turn a clean train set into an adversarial one.

    ``schedule`` (white noise only) cycles factors over the selected
    positives; ``per_level_count`` then fixes how many clips get each level.
    With ``oversample`` every clean clip is kept and a perturbed copy of each
    is appended, doubling the set.  With ``warm_start`` the model continues
    from the clean baseline's weights instead of a fresh init.
    """

    adversarial_fraction: float = 0.0
    spec: NoiseSpec | None = None
    schedule: tuple[float, ...] | None = None
    per_level_count: int | None = None
    oversample: bool = False
    selection_seed: int = 0
    warm_start: bool = True

    def __post_init__(self):
        if not 0.0 <= self.adversarial_fraction <= 1.0:
            raise ValueError("adversarial_fraction must lie in [0, 1]")
        if self.schedule is not None:
            if self.spec is None or self.spec.kind != "white":
                raise ValueError("a level schedule needs a white-noise spec")
            if not self.schedule:
                raise ValueError("schedule must list at least one level")
        if (self.adversarial_fraction > 0 or self.oversample or self.schedule) and self.spec is None:
            raise ValueError("an adversarial recipe needs a noise spec")

    def to_dict(self) -> dict:
        return {"adversarial_fraction": self.adversarial_fraction,
                "spec": self.spec.to_dict() if self.spec else None,
                "schedule": list(self.schedule) if self.schedule else None,
                "per_level_count": self.per_level_count,
                "oversample": self.oversample,
                "selection_seed": self.selection_seed,
                "warm_start": self.warm_start}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainRecipe":
        spec = d.get("spec")
        return cls(adversarial_fraction=float(d.get("adversarial_fraction", 0.0)),
                   spec=NoiseSpec.from_dict(spec) if spec else None,
                   schedule=tuple(d["schedule"]) if d.get("schedule") else None,
                   per_level_count=d.get("per_level_count"),
                   oversample=bool(d.get("oversample", False)),
                   selection_seed=int(d.get("selection_seed", 0)),
                   warm_start=bool(d.get("warm_start", True)))


def _spec_at(base: NoiseSpec, level: float | None, seed: int) -> NoiseSpec:
    if level is None:
        return base.with_seed(seed)
    return NoiseSpec(base.kind, adjustment_factor=level, seed=seed)


def _record(sample: Sample) -> dict:
    spec = sample.perturbation
    return {"clip_id": sample.clip_id, "kind": spec.kind,
            "factor_or_snr": spec.level, "seed": spec.seed}


def build_adversarial_trainset(train: list[Sample], recipe: TrainRecipe, positive_class: str):
    """Apply ``recipe`` to a clean train set.

    Returns ``(samples, provenance)``; provenance holds one record per
    perturbed sample.
    """
    train = list(train)
    if recipe.spec is None:
        return train, []
    seed = recipe.spec.seed
    if recipe.oversample:
        copies = []
        for i, s in enumerate(train):
            level = recipe.schedule[i % len(recipe.schedule)] if recipe.schedule else None
            copies.append(replace(s, clip_id=s.clip_id + "#adv",
                                  perturbation=_spec_at(recipe.spec, level, derive_seed(seed, i))))
        return train + copies, [_record(c) for c in copies]

    pos_idx = [i for i, s in enumerate(train) if s.label == positive_class]
    if recipe.schedule and recipe.per_level_count is not None:
        k = recipe.per_level_count * len(recipe.schedule)
        if k > len(pos_idx):
            raise ValueError(f"schedule needs {k} positive clips, train set has {len(pos_idx)}")
    else:
        k = int(round(recipe.adversarial_fraction * len(pos_idx)))
    if k == 0:
        if recipe.schedule:
            raise ValueError("schedule selects zero clips")
        return train, []
    out = list(train)
    provenance = []
    for rank, j in enumerate(select_subset(len(pos_idx), k, recipe.selection_seed)):
        i = pos_idx[j]
        level = recipe.schedule[rank % len(recipe.schedule)] if recipe.schedule else None
        out[i] = replace(train[i], perturbation=_spec_at(recipe.spec, level, derive_seed(seed, i)))
        provenance.append(_record(out[i]))
    return out, provenance
