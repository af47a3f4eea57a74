"""Experiment grid: plans, runners, and reports."""

from .plan import (
    DEFAULT_EXPERIMENTS,
    GRID,
    ExperimentPlan,
    GridSettings,
    PlanError,
    expand,
    grid_plans,
    load_settings,
    settings_from_dict,
)
from .report import ExperimentReport, ReportError, emit_report, load_reports, to_csv, to_json
from .runner import (
    Workbench,
    run_adversarial_training,
    run_attack,
    run_baseline,
    run_denoise_eval,
    run_grid,
    run_plan,
)

__all__ = [
    "DEFAULT_EXPERIMENTS",
    "GRID",
    "ExperimentPlan",
    "ExperimentReport",
    "GridSettings",
    "PlanError",
    "ReportError",
    "Workbench",
    "emit_report",
    "expand",
    "grid_plans",
    "load_reports",
    "load_settings",
    "run_adversarial_training",
    "run_attack",
    "run_baseline",
    "run_denoise_eval",
    "run_grid",
    "run_plan",
    "settings_from_dict",
    "to_csv",
    "to_json",
]
