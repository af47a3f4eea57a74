"""Experiment plans and the standard grid.

A plan file is one JSON object of shared settings plus an ``experiments``
list; every listed id expands into one or more :class:`ExperimentPlan`::

    {"seed": 42,
     "manifest": null,                # or a manifest path
     "corpus": {...CorpusSpec...},    # synthetic corpus when no manifest
     "positive_class": null,          # overrides the per-id stand-in class
     "train": {...TrainConfig...},
     "split": {"n_train_per_class": 1000, "n_test_per_class": 150},
     "multiclass": {"classes": [...], "n_train_per_class": 100, "n_test_per_class": 50},
     "background": {"noise_source": "babble", "snr_db": 10.0, "fractions": [0.25, 0.5, 1.0]},
     "white": {"levels": [...], "per_level_count": 100},
     "denoise": {...DenoiseConfig...},
     "experiments": ["1a", "3b", "3d"]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..attack import WHITE_NOISE_LADDER, InfusionPlan, NoiseSpec, derive_seed
from ..data.corpus import CorpusSpec
from ..data.sets import WN_SCHEDULE, TrainRecipe
from ..denoise import DenoiseConfig
from ..neural.train import TrainConfig

# experiment id -> positive class of the synthetic stand-in
# (glass break -> shatter, gunshot -> burst)
GRID = {
    "1a": "burst", "1b": None,
    "3a": "shatter", "3b": "burst", "3c": "shatter", "3d": "burst",
    "4a": "shatter", "4b": "shatter", "4c": "burst", "4d": "burst",
    "5a": "shatter", "5b": "burst",
    "6a": "shatter", "6b": "burst",
    "7a": "shatter", "7b": "burst",
}
MULTICLASS = ("burst", "shatter", "tone-sweep", "yelp")
DEFAULT_EXPERIMENTS = ("1a", "3b", "3d", "4c", "4d", "5b", "6b", "7b")
KIND_OF = {"1": "baseline", "3": "attack", "4": "advtrain", "5": "advtrain",
           "6": "denoise", "7": "denoise"}


class PlanError(ValueError):
    pass


def _tag(fraction: float) -> str:
    return f"{fraction * 100:g}%"


@dataclass(frozen=True)
class ExperimentPlan:
    """One trained model evaluated under one or more test conditions."""

    id: str
    positive_class: str | None = "burst"
    classes: tuple[str, ...] | None = None
    n_train_per_class: int = 1000
    n_test_per_class: int = 150
    recipe: TrainRecipe = field(default_factory=TrainRecipe)
    attacks: tuple[InfusionPlan, ...] = ()
    denoise: DenoiseConfig | None = None
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    manifest: str | None = None
    corpus: CorpusSpec | None = None
    label: str = ""

    def __post_init__(self):
        if self.id not in GRID:
            raise PlanError(f"unknown experiment id {self.id!r}; supported: {', '.join(GRID)}")
        kind = self.kind
        if self.classes is None and not self.positive_class:
            raise PlanError(f"{self.id}: binary experiments need a positive class")
        if self.classes is not None and len(self.classes) < 2:
            raise PlanError(f"{self.id}: multiclass experiments need at least two classes")
        if self.n_train_per_class < 1 or self.n_test_per_class < 1:
            raise PlanError(f"{self.id}: split sizes must be positive")
        adversarial = self.recipe.spec is not None
        if kind == "baseline" and (self.attacks or self.denoise or adversarial):
            raise PlanError(f"{self.id}: a baseline takes no attack, denoise or recipe")
        if kind in ("attack", "denoise", "advtrain") and not self.attacks:
            raise PlanError(f"{self.id}: needs at least one attack condition")
        if kind == "advtrain" and not adversarial:
            raise PlanError(f"{self.id}: adversarial training needs a noise recipe")
        if kind == "denoise" and self.denoise is None:
            raise PlanError(f"{self.id}: needs a denoise config")
        if kind != "denoise" and self.denoise is not None:
            raise PlanError(f"{self.id}: only experiments 6 and 7 denoise")
        if self.manifest is not None and self.corpus is not None:
            raise PlanError(f"{self.id}: give a manifest or a synthetic corpus, not both")
        if self.classes is not None and (self.attacks or adversarial):
            raise PlanError(f"{self.id}: attacks are defined for binary experiments only")

    @property
    def kind(self) -> str:
        return KIND_OF[self.id[0]]

    @property
    def multiclass(self) -> bool:
        return self.classes is not None

    def to_dict(self) -> dict:
        return {
            "id": self.id, "label": self.label,
            "positive_class": self.positive_class,
            "classes": list(self.classes) if self.classes else None,
            "n_train_per_class": self.n_train_per_class,
            "n_test_per_class": self.n_test_per_class,
            "recipe": self.recipe.to_dict(),
            "attacks": [{"fraction": a.fraction, "spec": a.spec.to_dict(),
                         "selection_seed": a.selection_seed} for a in self.attacks],
            "denoise": self.denoise.to_dict() if self.denoise else None,
            "train_cfg": self.train_cfg.to_dict(),
            "seed": self.seed,
            "manifest": self.manifest,
            "corpus": self.corpus.to_dict() if self.corpus else None,
        }


@dataclass(frozen=True)
class GridSettings:
    """Shared knobs of a plan file; the defaults describe the desk-scale grid."""

    seed: int = 42
    manifest: str | None = None
    corpus: CorpusSpec | None = None
    positive_class: str | None = None
    train: dict = field(default_factory=dict)
    n_train_per_class: int = 1000
    n_test_per_class: int = 150
    multiclass_classes: tuple[str, ...] = MULTICLASS
    multiclass_train: int = 100
    multiclass_test: int = 50
    noise_source: str = "babble"
    snr_db: float = 10.0
    fractions: tuple[float, ...] = (0.25, 0.5, 1.0)
    levels: tuple[float, ...] = WHITE_NOISE_LADDER
    per_level_count: int = 100
    warm_start: bool = True
    denoise: DenoiseConfig = field(default_factory=DenoiseConfig)
    experiments: tuple = DEFAULT_EXPERIMENTS


def settings_from_dict(doc: dict) -> GridSettings:
    if not isinstance(doc, dict):
        raise PlanError("plan must be a JSON object")
    known = {"seed", "manifest", "corpus", "positive_class", "train", "split", "multiclass", "background",
             "white", "advtrain", "denoise", "experiments"}
    unknown = set(doc) - known
    if unknown:
        raise PlanError(f"unknown plan keys: {', '.join(sorted(unknown))}")
    kw: dict = {}
    try:
        if "seed" in doc:
            kw["seed"] = int(doc["seed"])
        if doc.get("manifest"):
            kw["manifest"] = str(doc["manifest"])
        if doc.get("corpus"):
            kw["corpus"] = CorpusSpec.from_dict(doc["corpus"])
        if doc.get("positive_class"):
            kw["positive_class"] = str(doc["positive_class"])
        if "train" in doc:
            TrainConfig.from_dict(doc["train"])  # validate early
            kw["train"] = dict(doc["train"])
        split = doc.get("split", {})
        for key in ("n_train_per_class", "n_test_per_class"):
            if key in split:
                kw[key] = int(split[key])
        mc = doc.get("multiclass", {})
        if "classes" in mc:
            kw["multiclass_classes"] = tuple(mc["classes"])
        if "n_train_per_class" in mc:
            kw["multiclass_train"] = int(mc["n_train_per_class"])
        if "n_test_per_class" in mc:
            kw["multiclass_test"] = int(mc["n_test_per_class"])
        bn = doc.get("background", {})
        if "noise_source" in bn:
            kw["noise_source"] = str(bn["noise_source"])
        if "snr_db" in bn:
            kw["snr_db"] = float(bn["snr_db"])
        if "fractions" in bn:
            kw["fractions"] = tuple(float(f) for f in bn["fractions"])
        wn = doc.get("white", {})
        if "levels" in wn:
            kw["levels"] = tuple(float(f) for f in wn["levels"])
        if "per_level_count" in wn:
            kw["per_level_count"] = int(wn["per_level_count"])
        adv = doc.get("advtrain", {})
        if "warm_start" in adv:
            if not isinstance(adv["warm_start"], bool):
                raise PlanError("advtrain.warm_start must be true or false")
            kw["warm_start"] = adv["warm_start"]
        if doc.get("denoise"):
            kw["denoise"] = DenoiseConfig.from_dict(doc["denoise"])
        if "experiments" in doc:
            exps = doc["experiments"]
            if not isinstance(exps, list) or not exps:
                raise PlanError("experiments must be a non-empty list")
            kw["experiments"] = tuple(exps)
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, PlanError):
            raise
        raise PlanError(f"invalid plan: {exc}") from exc
    return GridSettings(**kw)


def load_settings(path) -> GridSettings:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise PlanError(f"cannot read plan {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PlanError(f"{path}: invalid JSON ({exc})") from exc
    settings = settings_from_dict(doc)
    if settings.manifest and not Path(settings.manifest).is_absolute():
        settings = replace(settings, manifest=str(path.parent / settings.manifest))
    return settings


def _bn_spec(s: GridSettings, seed_key: int) -> NoiseSpec:
    return NoiseSpec("background", target_snr_db=s.snr_db, noise_source=s.noise_source,
                     seed=derive_seed(s.seed, seed_key))


def _wn_spec(s: GridSettings, level: float, seed_key: int) -> NoiseSpec:
    return NoiseSpec("white", adjustment_factor=level, seed=derive_seed(s.seed, seed_key))


def bn_attacks(s: GridSettings, fractions=None) -> tuple[InfusionPlan, ...]:
    fractions = s.fractions if fractions is None else fractions
    return tuple(InfusionPlan(f, _bn_spec(s, 3), derive_seed(s.seed, 4)) for f in fractions)


def wn_attacks(s: GridSettings, levels=None) -> tuple[InfusionPlan, ...]:
    levels = s.levels if levels is None else levels
    return tuple(InfusionPlan(1.0, _wn_spec(s, lv, 5), derive_seed(s.seed, 4)) for lv in levels)


def expand(exp_id: str, s: GridSettings, overrides: dict | None = None) -> list[ExperimentPlan]:
    """The standard plan(s) for ``exp_id`` under ``s``."""
    if exp_id not in GRID:
        raise PlanError(f"unknown experiment id {exp_id!r}; supported: {', '.join(GRID)}")
    train_dict = {"seed": s.seed, **s.train}
    base = dict(id=exp_id, positive_class=s.positive_class or GRID[exp_id], seed=s.seed,
                n_train_per_class=s.n_train_per_class, n_test_per_class=s.n_test_per_class,
                train_cfg=TrainConfig.from_dict(train_dict), manifest=s.manifest, corpus=s.corpus)
    overrides = dict(overrides or {})
    if "positive_class" in overrides:
        base["positive_class"] = overrides.pop("positive_class")
    n, suffix = exp_id[0], exp_id[1]
    bn_full = bn_attacks(s, (1.0,))
    plans: list[dict] = []
    if exp_id == "1a":
        plans.append({"label": "clean"})
    elif exp_id == "1b":
        plans.append({"label": "clean", "positive_class": None,
                      "classes": tuple(s.multiclass_classes),
                      "n_train_per_class": s.multiclass_train,
                      "n_test_per_class": s.multiclass_test})
    elif n == "3":
        wn = suffix in "cd"
        plans.append({"label": "WN attack" if wn else "BN attack",
                      "attacks": wn_attacks(s) if wn else bn_attacks(s)})
    elif n == "4" and suffix in "ac":
        for f in s.fractions:
            recipe = TrainRecipe(f, _bn_spec(s, 6), selection_seed=derive_seed(s.seed, 7),
                                 warm_start=s.warm_start)
            plans.append({"label": f"{_tag(f)} BN", "recipe": recipe, "attacks": bn_full})
    elif n == "4":
        recipe = TrainRecipe(1.0, _bn_spec(s, 6), oversample=True,
                             selection_seed=derive_seed(s.seed, 7), warm_start=s.warm_start)
        plans.append({"label": "100% pure + 100% BN", "recipe": recipe, "attacks": bn_full})
    elif n == "5":
        recipe = TrainRecipe(1.0, _wn_spec(s, WN_SCHEDULE[0], 8), schedule=WN_SCHEDULE,
                             per_level_count=s.per_level_count,
                             selection_seed=derive_seed(s.seed, 7), warm_start=s.warm_start)
        plans.append({"label": "WN schedule", "recipe": recipe, "attacks": wn_attacks(s)})
    elif n == "6":
        plans.append({"label": "BN denoised", "attacks": bn_full, "denoise": s.denoise})
    else:
        plans.append({"label": "WN denoised", "attacks": wn_attacks(s), "denoise": s.denoise})
    out = []
    for p in plans:
        try:
            out.append(ExperimentPlan(**{**base, **p, **overrides}))
        except TypeError as exc:
            raise PlanError(f"{exp_id}: {exc}") from exc
    return out


def grid_plans(s: GridSettings) -> list[ExperimentPlan]:
    plans = []
    for item in s.experiments:
        if isinstance(item, str):
            plans += expand(item, s)
        elif isinstance(item, dict) and "id" in item:
            extra = {k: v for k, v in item.items() if k != "id"}
            allowed = {"positive_class", "n_train_per_class", "n_test_per_class"}
            if set(extra) - allowed:
                raise PlanError(f"{item['id']}: per-experiment overrides limited to "
                                f"{', '.join(sorted(allowed))}")
            plans += expand(item["id"], s, extra)
        else:
            raise PlanError(f"experiment entries must be ids or objects with an id, got {item!r}")
    return plans
