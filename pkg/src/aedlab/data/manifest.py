"""Dataset manifest: which WAV belongs to which class and split.

Schema::

    {"positive_class": str,
     "negative_classes": [str, ...],
     "entries": [{"path": str, "class": str, "split": "train" | "test"}, ...]}

Relative paths resolve against the manifest file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

SPLITS = ("train", "test")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    class_name: str
    split: str


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    positive_class: str
    negative_classes: list[str]
    root: Path = field(default_factory=Path)

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def by_class(self, class_name: str, split: str | None = None) -> list[ManifestEntry]:
        return [e for e in self.entries
                if e.class_name == class_name and (split is None or e.split == split)]

    def to_json(self) -> dict:
        return {
            "positive_class": self.positive_class,
            "negative_classes": list(self.negative_classes),
            "entries": [{"path": e.path, "class": e.class_name, "split": e.split}
                        for e in self.entries],
        }


def parse_manifest(doc: dict, root: Path, check_paths: bool = True) -> Manifest:
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    for key in ("positive_class", "negative_classes", "entries"):
        if key not in doc:
            raise ManifestError(f"manifest is missing {key!r}")
    pos = doc["positive_class"]
    negs = doc["negative_classes"]
    if not isinstance(pos, str) or not pos:
        raise ManifestError("positive_class must be a non-empty string")
    if not isinstance(negs, list) or not all(isinstance(n, str) and n for n in negs):
        raise ManifestError("negative_classes must be a list of non-empty strings")
    if not isinstance(doc["entries"], list):
        raise ManifestError("entries must be a list")
    entries = []
    seen = set()
    for i, raw in enumerate(doc["entries"]):
        where = f"entry {i}"
        if not isinstance(raw, dict):
            raise ManifestError(f"{where} is not an object")
        try:
            path, cls, split = raw["path"], raw["class"], raw["split"]
        except KeyError as exc:
            raise ManifestError(f"{where} is missing {exc.args[0]!r}") from None
        where = f"entry {i} ({path})"
        if not isinstance(path, str) or not path:
            raise ManifestError(f"{where}: path must be a non-empty string")
        if not isinstance(cls, str) or not cls:
            raise ManifestError(f"{where}: class must be a non-empty string")
        if split not in SPLITS:
            raise ManifestError(f"{where}: unknown split {split!r} (expected train or test)")
        if path in seen:
            raise ManifestError(f"{where}: duplicate path")
        seen.add(path)
        entry = ManifestEntry(path, cls, split)
        entries.append(entry)
    m = Manifest(entries, pos, list(negs), root)
    if check_paths:
        for i, e in enumerate(entries):
            if not m.resolve(e).is_file():
                raise ManifestError(f"entry {i}: file not found: {m.resolve(e)}")
    return m


def load_manifest(path, check_paths: bool = True) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ManifestError(f"{path}: cannot read manifest ({exc.strerror})") from exc
    return parse_manifest(doc, path.parent, check_paths)


def save_manifest(manifest: Manifest, path) -> None:
    Path(path).write_text(json.dumps(manifest.to_json(), indent=1))


def check_balance(manifest: Manifest) -> dict[str, dict[str, int]]:
    """Per-split positive/negative counts; raises if any split is unbalanced."""
    counts = {}
    negs = set(manifest.negative_classes)
    for split in SPLITS:
        pos = sum(1 for e in manifest.entries
                  if e.split == split and e.class_name == manifest.positive_class)
        neg = sum(1 for e in manifest.entries if e.split == split and e.class_name in negs)
        if pos != neg:
            raise ManifestError(f"{split} split is unbalanced: {pos} positive vs {neg} negative")
        counts[split] = {"positive": pos, "negative": neg}
    return counts
