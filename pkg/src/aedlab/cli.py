"""Command-line entry point: ``aedlab <verb> [flags]``.

Exit codes: 0 success, 2 validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .attack import NoiseSpec
from .audio_io import read_wav, write_wav
from .data.corpus import CorpusSpec, generate_synthetic_corpus
from .data.manifest import ManifestError, load_manifest
from .denoise import denoise
from .experiments.plan import (
    GridSettings,
    PlanError,
    bn_attacks,
    expand,
    grid_plans,
    load_settings,
    wn_attacks,
)
from .experiments.report import ReportError, emit_report, load_reports, to_csv, to_json
from .experiments.runner import Workbench, run_grid

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("aedlab")


class ValidationError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--plan", type=Path, help="plan file (JSON)")
    common.add_argument("--seed", type=int, help="base seed (overrides the plan)")
    common.add_argument("--manifest", type=Path, help="dataset manifest (overrides the plan)")
    common.add_argument("--out", type=Path, default=Path("aedlab-out"), help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    noise = argparse.ArgumentParser(add_help=False)
    noise.add_argument("--noise-kind", choices=("background", "white"), default="background")
    noise.add_argument("--factor", type=float, help="adjustment factor (white level or BN gain)")
    noise.add_argument("--snr-db", type=float, help="background-noise target SNR")
    noise.add_argument("--infusion-fraction", type=float,
                       help="share of positive test clips to perturb")

    p = argparse.ArgumentParser(prog="aedlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("generate-corpus", parents=[common], help="write the synthetic corpus")
    sub.add_parser("train", parents=[common], help="train and score the clean baseline")
    sub.add_parser("attack", parents=[common, noise], help="attack the baseline")
    sub.add_parser("defend-advtrain", parents=[common, noise], help="adversarial training")
    dn = sub.add_parser("defend-denoise", parents=[common, noise], help="denoise attacked test sets")
    dn.add_argument("--wav-dir", type=Path,
                    help="denoise every WAV in this directory into OUT instead of running a plan")
    sub.add_parser("run-grid", parents=[common], help="run every experiment of the plan")
    rep = sub.add_parser("report", parents=[common], help="re-emit a JSON report")
    rep.add_argument("input", nargs="?", type=Path, help="report JSON (default: OUT/report.json)")
    return p


def _settings(args) -> GridSettings:
    s = load_settings(args.plan) if args.plan else GridSettings()
    if args.seed is not None:
        s = replace(s, seed=args.seed)
    if args.manifest is not None:
        m = load_manifest(args.manifest)
        s = replace(s, manifest=str(args.manifest), corpus=None,
                    positive_class=s.positive_class or m.positive_class)
    return s


def _noise_overrides(args, s: GridSettings) -> GridSettings:
    if args.infusion_fraction is not None and not 0.0 <= args.infusion_fraction <= 1.0:
        raise ValidationError("--infusion-fraction must lie in [0, 1]")
    if args.noise_kind == "white":
        if args.snr_db is not None:
            raise ValidationError("--snr-db applies to background noise only")
        if args.factor is not None:
            if args.factor < 0:
                raise ValidationError("--factor must be non-negative")
            s = replace(s, levels=(args.factor,))
    else:
        if args.factor is not None and args.snr_db is not None:
            raise ValidationError("give --factor or --snr-db, not both")
        if args.snr_db is not None:
            s = replace(s, snr_db=args.snr_db)
        if args.infusion_fraction is not None:
            s = replace(s, fractions=(args.infusion_fraction,))
    return s


def _attacks(args, s: GridSettings):
    """Attack conditions for the noise verbs, honouring --factor for background noise."""
    if args.noise_kind == "white":
        attacks = wn_attacks(s)
        if args.infusion_fraction is not None:
            attacks = tuple(replace(a, fraction=args.infusion_fraction) for a in attacks)
        return attacks
    attacks = bn_attacks(s)
    if args.factor is not None:
        attacks = tuple(replace(a, spec=NoiseSpec("background", adjustment_factor=args.factor,
                                                  noise_source=a.spec.noise_source,
                                                  seed=a.spec.seed)) for a in attacks)
    return attacks


def _plans_for(args, s: GridSettings):
    verb = args.verb
    if verb == "train":
        return expand("1a", s)
    if verb == "run-grid":
        return grid_plans(s)
    s = _noise_overrides(args, s)
    white = args.noise_kind == "white"
    if verb == "attack":
        return [replace(p, attacks=_attacks(args, s)) for p in expand("3d" if white else "3b", s)]
    if verb == "defend-advtrain":
        return expand("5b" if white else "4c", s)
    if verb == "defend-denoise":
        return [replace(p, attacks=_attacks(args, s)) for p in expand("7b" if white else "6b", s)]
    raise ValidationError(f"unknown verb {verb}")


def denoise_directory(src: Path, out: Path) -> dict:
    """Denoise each ``*.wav`` in ``src`` into ``out`` and summarise the energy removed.

    The gain is ``10 log10(P_in / P_out)``, a reference-free estimate of how
    much the gate attenuated.
    """
    files = sorted(src.glob("*.wav"))
    if not files:
        raise ValidationError(f"no .wav files in {src}")
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for f in files:
        clip = read_wav(f)
        clean = denoise(clip)
        write_wav(clean, out / f.name)
        p_in = float(np.mean(clip.samples.astype(np.float64) ** 2))
        p_out = float(np.mean(clean.samples.astype(np.float64) ** 2))
        gain = 10.0 * np.log10(p_in / p_out) if p_in > 0 and p_out > 0 else 0.0
        rows.append({"file": f.name, "estimated_gain_db": round(float(gain), 3)})
    summary = {"source": str(src), "files": rows}
    (out / "denoise-summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def _emit(reports, args, stem: str) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{stem}.{args.format}"
    emit_report(reports, args.format, path)
    if args.format == "csv":
        # the JSON form is always kept for `report` and auditing
        emit_report(reports, "json", args.out / f"{stem}.json")
    return path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "report":
            src = args.input or args.out / "report.json"
            reports = load_reports(src)
            sys.stdout.write(to_csv(reports) if args.format == "csv" else to_json(reports))
            return EXIT_OK
        if args.verb == "defend-denoise" and args.wav_dir is not None:
            if not args.wav_dir.is_dir() or not any(args.wav_dir.glob("*.wav")):
                raise ValidationError(f"--wav-dir {args.wav_dir} holds no .wav files")
            wav_dir = args.wav_dir
        else:
            wav_dir = None
        s = _settings(args)
        if args.verb == "generate-corpus":
            spec = s.corpus or CorpusSpec()
            m = generate_synthetic_corpus(args.out, spec, s.seed)
            print(f"{len(m.entries)} clips, manifest {args.out / 'manifest.json'}")
            return EXIT_OK
        plans = _plans_for(args, s)
    except (PlanError, ManifestError, ReportError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if wav_dir is not None:
            denoise_directory(wav_dir, args.out)
            print(args.out / "denoise-summary.json")
            return EXIT_OK
        reports = run_grid(plans, Workbench(args.out))
        stem = "report" if args.verb == "run-grid" else f"{args.verb}-report"
        path = _emit(reports, args, stem)
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
