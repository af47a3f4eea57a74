"""Experiment reports and their CSV/JSON serializations."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

FORMAT = "aedlab-report"
VERSION = 1
CSV_COLUMNS = ("exp_id", "condition", "train_size", "test_size",
               "accuracy", "precision", "recall", "f1")
VOLATILE_FIELDS = ("wall_clock_s",)

_UNIT = {"type": "number", "minimum": 0, "maximum": 1}
REPORT_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "reports"],
    "properties": {
        "format": {"const": FORMAT},
        "version": {"const": VERSION},
        "reports": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "condition", "train_size", "test_size", "accuracy",
                             "precision", "recall", "f1", "confusion_matrix",
                             "wall_clock_s", "seed"],
                "properties": {
                    "id": {"type": "string"},
                    "condition": {"type": "string"},
                    "train_size": {"type": "integer", "minimum": 1},
                    "test_size": {"type": "integer", "minimum": 1},
                    "accuracy": _UNIT, "precision": _UNIT, "recall": _UNIT, "f1": _UNIT,
                    "confusion_matrix": {"type": "array",
                                         "items": {"type": "array",
                                                   "items": {"type": "integer", "minimum": 0}}},
                    "classes": {"type": "array", "items": {"type": "string"}},
                    "per_class_recall": {"type": "array", "items": _UNIT},
                    "predictions": {"type": "array", "items": {"type": "integer"}},
                    "labels": {"type": "array", "items": {"type": "integer"}},
                    "wall_clock_s": {"type": "number", "minimum": 0},
                    "seed": {"type": "integer"},
                    "reference_accuracy": {"type": ["number", "null"]},
                    "delta_accuracy": {"type": ["number", "null"]},
                    "provenance": {"type": "object"},
                },
            },
        },
    },
}


class ReportError(ValueError):
    pass


@dataclass
class ExperimentReport:
    id: str
    condition: str
    train_size: int
    test_size: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion_matrix: list[list[int]]
    seed: int
    wall_clock_s: float = 0.0
    classes: list[str] = field(default_factory=list)
    per_class_recall: list[float] = field(default_factory=list)
    predictions: list[int] = field(default_factory=list)
    labels: list[int] = field(default_factory=list)
    reference_accuracy: float | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("accuracy", "precision", "recall", "f1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ReportError(f"{name} {v} outside [0, 1]")
        total = sum(sum(row) for row in self.confusion_matrix)
        if total != self.test_size:
            raise ReportError(f"confusion matrix sums to {total}, test size is {self.test_size}")

    @property
    def delta_accuracy(self) -> float | None:
        if self.reference_accuracy is None:
            return None
        return self.accuracy - self.reference_accuracy

    def to_dict(self) -> dict:
        return {
            "id": self.id, "condition": self.condition,
            "train_size": self.train_size, "test_size": self.test_size,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
            "confusion_matrix": self.confusion_matrix,
            "classes": self.classes, "per_class_recall": self.per_class_recall,
            "predictions": self.predictions, "labels": self.labels,
            "wall_clock_s": self.wall_clock_s, "seed": self.seed,
            "reference_accuracy": self.reference_accuracy,
            "delta_accuracy": self.delta_accuracy,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        keep = {k: v for k, v in d.items() if k != "delta_accuracy"}
        return cls(**keep)


def reports_document(reports) -> dict:
    reports = list(reports)
    if not reports:
        raise ReportError("no reports to emit")
    doc = {"format": FORMAT, "version": VERSION, "reports": [r.to_dict() for r in reports]}
    jsonschema.validate(doc, REPORT_SCHEMA)
    return doc


def to_json(reports) -> str:
    return json.dumps(reports_document(reports), indent=1, sort_keys=True) + "\n"


def to_csv(reports) -> str:
    reports = list(reports)
    if not reports:
        raise ReportError("no reports to emit")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([r.id, r.condition, r.train_size, r.test_size,
                    *(repr(round(float(getattr(r, k)), 6))
                      for k in ("accuracy", "precision", "recall", "f1"))])
    return buf.getvalue()


def emit_report(reports, fmt: str, path) -> Path:
    if fmt == "json":
        text = to_json(reports)
    elif fmt == "csv":
        text = to_csv(reports)
    else:
        raise ReportError(f"unknown report format {fmt!r} (csv or json)")
    path = Path(path)
    path.write_text(text)
    return path


def load_reports(path) -> list[ExperimentReport]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"cannot read report {path}: {exc}") from exc
    try:
        jsonschema.validate(doc, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ReportError(f"{path}: {exc.message}") from exc
    return [ExperimentReport.from_dict(r) for r in doc["reports"]]


def strip_volatile(doc: dict) -> dict:
    """Copy of a report document without wall-clock fields."""
    out = json.loads(json.dumps(doc))
    for r in out["reports"]:
        for key in VOLATILE_FIELDS:
            r.pop(key, None)
    return out
