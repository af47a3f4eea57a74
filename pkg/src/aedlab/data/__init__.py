"""Manifests, balanced splits, adversarial train sets, synthetic corpora."""

from .manifest import (
    Manifest,
    ManifestEntry,
    ManifestError,
    check_balance,
    load_manifest,
    save_manifest,
)
from .sets import (
    Sample,
    TrainRecipe,
    build_adversarial_trainset,
    build_balanced_split,
    load_clips,
)
from .corpus import CorpusSpec, corpus_digest, generate_synthetic_corpus

__all__ = [
    "CorpusSpec",
    "Manifest",
    "ManifestEntry",
    "ManifestError",
    "Sample",
    "TrainRecipe",
    "build_adversarial_trainset",
    "build_balanced_split",
    "check_balance",
    "corpus_digest",
    "generate_synthetic_corpus",
    "load_clips",
    "load_manifest",
    "save_manifest",
]
