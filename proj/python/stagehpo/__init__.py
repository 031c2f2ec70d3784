"""Stage-tree hyperparameter optimization simulator."""

import json
import os

from . import _core
from ._core import StagehpoError, decimal_multiply, expand_step_schedule, export_gantt

__all__ = [
    "StagehpoError",
    "compare",
    "decimal_multiply",
    "expand_step_schedule",
    "export_gantt",
    "run",
    "run_config",
    "tree_stats",
]


def _config_text(config):
    if isinstance(config, dict):
        return json.dumps(config)
    with open(config, encoding="utf-8") as f:
        return f.read()


def tree_stats(config):
    """Stage-tree statistics for a config dict or path, without simulating."""
    return json.loads(_core.tree_stats_json(_config_text(config)))


def run_config(config, policy="both"):
    """Simulate a config dict or path in memory and return the report dict."""
    return json.loads(_core.run_config_json(_config_text(config), policy))


def run(config_path, seed=None, out_dir=None, policy="both"):
    """Run a config file, write report/trace/chart files, return the report dict."""
    out = os.fspath(out_dir) if out_dir is not None else None
    return json.loads(_core.run_experiment_json(os.fspath(config_path), seed, out, policy))


def compare(report_paths):
    """Tabulate report.json files; returns text, csv, row count and errors."""
    return _core.compare([os.fspath(p) for p in report_paths])
