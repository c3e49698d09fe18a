"""Offline evaluation of rating-based recommenders.

Decide (RMSE), Compare (COMP), Discover (Precision, AMI) and Explore, reported per
user/item popularity segment. Heavy lifting happens in the C++ core; this module
wraps it and turns JSON results into dictionaries.
"""

import json
import os

from ._recoeval import (
    ConfigError,
    Dataset,
    DatasetError,
    EvaluationError,
    Model,
    RatingScale,
    TrainingError,
    ami_user,
    comp_user,
    generate_fixture,
    load_dataset,
    precision_user,
    train,
    weighted_pearson,
)
from . import _recoeval

__all__ = [
    "ConfigError", "Dataset", "DatasetError", "EvaluationError", "Model", "RatingScale",
    "TrainingError", "ami_user", "comp_user", "compare", "evaluate", "generate_fixture",
    "load_dataset", "precision_user", "run", "train", "weighted_pearson",
]


def evaluate(model, n=10, k=100, exclude_seen=True, explore=True):
    """Runs the protocol on the model's test split. Returns {"core": ..., "explore": ...}."""
    return json.loads(_recoeval.evaluate_json(model, n, k, exclude_seen, explore))


def run(manifest, base_dir=None, **overrides):
    """Executes a manifest (a path or a dict) and returns the report document.

    Keyword overrides use underscores for dots: ``model__k=50`` sets ``model.k``.
    """
    if isinstance(manifest, (str, os.PathLike)):
        path = os.fspath(manifest)
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if base_dir is None:
            base_dir = os.path.dirname(os.path.abspath(path))
    else:
        text = json.dumps(manifest)
    pairs = [(key.replace("__", "."), _flag_text(value)) for key, value in overrides.items()]
    return json.loads(_recoeval.run_manifest_json(text, base_dir or ".", pairs))


def compare(reports, labels=None):
    """Side-by-side text table of report documents, best cells marked with '*'."""
    if labels is None:
        labels = [r.get("model", f"#{n + 1}") for n, r in enumerate(reports)]
    return _recoeval.compare_reports_json([json.dumps(r) for r in reports], list(labels))


def _flag_text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
