from __future__ import annotations

import json

import pytest

# a corpus small enough that a full grid trains in seconds
TINY_PLAN = {
    "seed": 7,
    "corpus": {"counts": {"burst": [12, 6], "shatter": [4, 2], "tone-sweep": [4, 2],
                          "yelp": [4, 2], "hum": [3, 2], "chatter": [3, 2],
                          "rumble": [3, 1], "fan": [3, 1]}},
    "train": {"epochs": 1, "batch_size": 8},
    "split": {"n_train_per_class": 10, "n_test_per_class": 6},
    "multiclass": {"n_train_per_class": 4, "n_test_per_class": 2},
    "background": {"fractions": [0.5, 1.0]},
    "white": {"levels": [0.0, 0.01, 0.5], "per_level_count": 1},
    "experiments": ["1a", "1b", "3b", "3d", "4c", "4d", "5b", "6b", "7b"],
}


@pytest.fixture
def tiny_plan_doc():
    return json.loads(json.dumps(TINY_PLAN))


@pytest.fixture
def tiny_plan_file(tmp_path, tiny_plan_doc):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(tiny_plan_doc))
    return path


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
