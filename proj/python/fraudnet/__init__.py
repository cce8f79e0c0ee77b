"""Fraud-ring detection over automobile-insurance collision networks."""

import json
from pathlib import Path

from ._core import (
    PipelineError,
    auc,
    graph_measures,
    metrics,
    schema_version,
)
from . import _core

__all__ = [
    "PipelineError",
    "auc",
    "config_hash",
    "default_config",
    "graph_measures",
    "metrics",
    "run",
    "schema_version",
    "simulate",
    "write_corpus",
]


def default_config():
    return json.loads(_core.default_config())


def config_hash(config):
    return _core.config_hash(json.dumps(config))


def simulate(preset="paper-shape", seed=1, rings=None, background=None, format="csv"):
    out = _core.simulate(preset, seed, rings, background, format)
    out["labels"] = json.loads(out["labels"])["labels"]
    return out


def write_corpus(directory, preset="paper-shape", seed=1, rings=None, background=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = _core.simulate(preset, seed, rings, background, "csv")
    (directory / "collisions.csv").write_text(out["collisions"])
    (directory / "labels.json").write_text(out["labels"])
    return directory / "collisions.csv", directory / "labels.json"


def run(config):
    """Run the full pipeline. `config` is a dict or a path to a JSON config."""
    if not isinstance(config, dict):
        path = Path(config)
        config = json.loads(path.read_text())
        base = path.parent
        inputs = config.get("input", {})
        for key in ("collisions", "labels"):
            if inputs.get(key) and not Path(inputs[key]).is_absolute():
                inputs[key] = str(base / inputs[key])
    return json.loads(_core.run(json.dumps(config)))
