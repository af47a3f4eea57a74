"""Execute experiment plans: split, train, attack, defend, score.

A :class:`Workbench` caches everything that several plans share (corpus,
splits, clean test clips, trained models), so a grid trains each distinct
model once.  With an output directory, models are also checkpointed there and
reused by later invocations.
"""

from __future__ import annotations

import hashlib
import json
import logging
import tempfile
import time
from pathlib import Path

import numpy as np

from ..attack import InfusionPlan, infuse_testset, write_manifest
from ..data.corpus import MANIFEST_NAME, CorpusSpec, corpus_digest, generate_synthetic_corpus
from ..data.manifest import Manifest, load_manifest
from ..data.sets import build_adversarial_trainset, build_balanced_split, load_clips
from ..denoise import denoise
from ..dsp import MODEL_BANDS, MODEL_FRAMES, clip_to_model_input, featurize
from ..neural.checkpoint import load_state, save_state
from ..neural.model import ModelDef, ModelState
from ..neural.train import evaluate, train
from .plan import ExperimentPlan
from .report import ExperimentReport

log = logging.getLogger(__name__)


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def warm_copy(state: ModelState) -> ModelState:
    """Copy of ``state`` to continue training from.

    The dropout stream is reseeded rather than carried over, so the result
    does not depend on whether ``state`` was just trained or loaded from disk.
    """
    return ModelState(state.model_def, {k: v.copy() for k, v in state.params.items()},
                      {k: v.copy() for k, v in state.accumulators.items()}, state.seed,
                      rng=np.random.default_rng([state.seed, 3]))


def condition_label(attack: InfusionPlan | None) -> str:
    if attack is None:
        return "clean"
    if attack.spec.kind == "white":
        return f"{attack.spec.adjustment_factor:g} WN"
    return f"{attack.fraction * 100:g}% BN"


def _attack_dict(a: InfusionPlan) -> dict:
    return {"fraction": a.fraction, "spec": a.spec.to_dict(), "selection_seed": a.selection_seed}


class Workbench:
    def __init__(self, out_dir=None):
        if out_dir is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="aedlab-")
            out_dir = self._tmp.name
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._manifests: dict = {}
        self._splits: dict = {}
        self._clean: dict = {}
        self._models: dict = {}

    # -- data -------------------------------------------------------------
    def manifest(self, plan: ExperimentPlan) -> tuple[Manifest, str]:
        if plan.manifest is not None:
            key = ("file", str(Path(plan.manifest).resolve()))
        else:
            spec = plan.corpus or CorpusSpec()
            key = ("synthetic", _digest({"spec": spec.to_dict(), "seed": plan.seed}))
        if key not in self._manifests:
            if key[0] == "file":
                m = load_manifest(plan.manifest)
            else:
                m = self._synthetic(plan.corpus or CorpusSpec(), plan.seed, key[1])
            self._manifests[key] = (m, corpus_digest(m))
        return self._manifests[key]

    def _synthetic(self, spec: CorpusSpec, seed: int, key: str) -> Manifest:
        root = self.out_dir / f"corpus-{key}"
        stamp = root / "corpus.json"
        want = {"spec": spec.to_dict(), "seed": seed}
        if stamp.is_file() and json.loads(stamp.read_text()) == want:
            return load_manifest(root / MANIFEST_NAME)
        log.info("generating synthetic corpus in %s", root)
        m = generate_synthetic_corpus(root, spec, seed)
        stamp.write_text(json.dumps(want, sort_keys=True))
        return m

    def split(self, plan: ExperimentPlan):
        m, digest = self.manifest(plan)
        key = (digest, plan.positive_class, plan.classes, plan.n_train_per_class,
               plan.n_test_per_class, plan.seed)
        if key not in self._splits:
            if plan.multiclass:
                tr, te = build_balanced_split(m, plan.n_train_per_class, plan.n_test_per_class,
                                              plan.seed, classes=list(plan.classes))
            else:
                view = Manifest(m.entries, plan.positive_class, m.negative_classes, m.root)
                tr, te = build_balanced_split(view, plan.n_train_per_class,
                                              plan.n_test_per_class, plan.seed)
            self._splits[key] = (tr, te)
        return self._splits[key], key

    @staticmethod
    def labels(plan: ExperimentPlan, items) -> np.ndarray:
        if plan.multiclass:
            return np.array([plan.classes.index(s.label) for s in items], dtype=np.int64)
        return np.array([s.label == plan.positive_class for s in items], dtype=np.int64)

    def clean_test(self, plan: ExperimentPlan):
        (_, te), key = self.split(plan)
        if key not in self._clean:
            self._clean[key] = load_clips(te)
        return self._clean[key]

    # -- models -----------------------------------------------------------
    def model_def(self, plan: ExperimentPlan) -> ModelDef:
        if plan.multiclass:
            return ModelDef(head="multiclass", n_classes=len(plan.classes))
        return ModelDef()

    def model(self, plan: ExperimentPlan, adversarial: bool = True):
        """Trained state for ``plan`` (its recipe, or the clean baseline).

        Returns ``(state, info)``; info holds train size, loss curve, and
        perturbed-clip count.
        """
        (tr, _), split_key = self.split(plan)
        recipe = plan.recipe if adversarial and plan.kind == "advtrain" else None
        md = self.model_def(plan)
        key = _digest({"split": [str(k) for k in split_key],
                       "recipe": recipe.to_dict() if recipe else None,
                       "train": plan.train_cfg.to_dict(), "model": md.to_dict()})
        if key in self._models:
            return self._models[key]
        ckpt = self.out_dir / "models" / f"{key}.npz"
        meta = ckpt.with_suffix(".json")
        if ckpt.is_file() and meta.is_file():
            state, info = load_state(ckpt), json.loads(meta.read_text())
        else:
            samples, provenance = (tr, [])
            if recipe is not None:
                samples, provenance = build_adversarial_trainset(tr, recipe, plan.positive_class)
            X = np.empty((len(samples), MODEL_BANDS, MODEL_FRAMES), dtype=np.float32)
            for i, s in enumerate(samples):
                X[i] = clip_to_model_input(s.load())
            y = self.labels(plan, samples)
            init, init_key = None, None
            if recipe is not None and recipe.warm_start:
                base, base_info = self.model(plan, adversarial=False)
                init, init_key = warm_copy(base), base_info["model_key"]
            log.info("training %s (%d clips, %d perturbed%s)", plan.id, len(samples),
                     len(provenance), ", warm start" if init else "")
            state, losses = train(md, X, y, plan.train_cfg, state=init)
            del X
            info = {"train_size": len(samples), "losses": losses,
                    "perturbed_train_clips": len(provenance), "model_key": key,
                    "warm_start_from": init_key}
            ckpt.parent.mkdir(exist_ok=True)
            save_state(state, ckpt)
            meta.write_text(json.dumps(info, sort_keys=True))
            if provenance:
                write_manifest(provenance, ckpt.with_name(f"{key}-provenance.json"))
        self._models[key] = (state, info)
        return state, info

    # -- evaluation -------------------------------------------------------
    def evaluate(self, plan: ExperimentPlan, state, info: dict, attack: InfusionPlan | None,
                 denoise_cfg=None, condition: str | None = None, start: float | None = None):
        start = time.perf_counter() if start is None else start
        clips = self.clean_test(plan)
        records = []
        if attack is not None:
            clips, records = infuse_testset(clips, attack, plan.positive_class)
        if denoise_cfg is not None:
            clips = [denoise(c, denoise_cfg) for c in clips]
        y = self.labels(plan, clips)
        ev = evaluate(state, featurize(clips), y)
        m = ev.metrics
        provenance = {"model_key": info["model_key"],
                      "warm_start_from": info.get("warm_start_from"),
                      "train_cfg": plan.train_cfg.to_dict(),
                      "recipe": plan.recipe.to_dict() if plan.kind == "advtrain" else None,
                      "attack": _attack_dict(attack) if attack else None,
                      "denoise": denoise_cfg.to_dict() if denoise_cfg else None,
                      "perturbed_train_clips": info["perturbed_train_clips"],
                      "perturbed_test_clips": len(records),
                      "loss_curve": info["losses"]}
        if records:
            name = f"{plan.id}-{_digest(provenance)}-infusion.json"
            write_manifest(records, self.out_dir / name)
        classes = list(plan.classes) if plan.multiclass else ["negative", plan.positive_class]
        return ExperimentReport(
            id=plan.id, condition=condition or condition_label(attack),
            train_size=int(info["train_size"]), test_size=int(y.size),
            accuracy=m.accuracy, precision=m.precision, recall=m.recall, f1=m.f1,
            confusion_matrix=m.confusion.tolist(), seed=plan.seed,
            wall_clock_s=round(time.perf_counter() - start, 3), classes=classes,
            per_class_recall=m.per_class_recall, predictions=ev.predictions.tolist(),
            labels=ev.labels.tolist(), provenance=provenance)


def run_baseline(plan: ExperimentPlan, bench: Workbench | None = None) -> list[ExperimentReport]:
    bench = bench or Workbench()
    start = time.perf_counter()
    state, info = bench.model(plan, adversarial=False)
    return [bench.evaluate(plan, state, info, None, condition=plan.label or "clean", start=start)]


def run_attack(plan: ExperimentPlan, bench: Workbench | None = None) -> list[ExperimentReport]:
    bench = bench or Workbench()
    start = time.perf_counter()
    state, info = bench.model(plan, adversarial=False)
    reports = []
    for attack in plan.attacks:
        reports.append(bench.evaluate(plan, state, info, attack, start=start))
        start = time.perf_counter()
    return reports


def run_adversarial_training(plan: ExperimentPlan,
                             bench: Workbench | None = None) -> list[ExperimentReport]:
    bench = bench or Workbench()
    start = time.perf_counter()
    state, info = bench.model(plan, adversarial=True)
    reports = []
    for attack in plan.attacks:
        cond = f"{plan.label} train / {condition_label(attack)} test"
        reports.append(bench.evaluate(plan, state, info, attack, condition=cond, start=start))
        start = time.perf_counter()
    return reports


def run_denoise_eval(plan: ExperimentPlan, bench: Workbench | None = None) -> list[ExperimentReport]:
    """Denoised attacked test sets scored by the clean model; each report
    carries the undenoised accuracy as its reference."""
    bench = bench or Workbench()
    start = time.perf_counter()
    state, info = bench.model(plan, adversarial=False)
    reports = []
    for attack in plan.attacks:
        plain = bench.evaluate(plan, state, info, attack)
        r = bench.evaluate(plan, state, info, attack, plan.denoise,
                           condition=f"{condition_label(attack)} denoised", start=start)
        r.reference_accuracy = plain.accuracy
        reports.append(r)
        start = time.perf_counter()
    return reports


RUNNERS = {"baseline": run_baseline, "attack": run_attack,
           "advtrain": run_adversarial_training, "denoise": run_denoise_eval}


def run_plan(plan: ExperimentPlan, bench: Workbench | None = None) -> list[ExperimentReport]:
    return RUNNERS[plan.kind](plan, bench)


def run_grid(plans, bench: Workbench | None = None) -> list[ExperimentReport]:
    bench = bench or Workbench()
    reports = []
    for plan in plans:
        log.info("experiment %s (%s)", plan.id, plan.label or plan.kind)
        reports += run_plan(plan, bench)
    return reports
