"""Run configuration, artifact envelopes and atomic file output.

Every artifact carries the configuration that produced it and a SHA-256
hash of the canonical JSON of configuration plus payload, so re-running the
same configuration reproduces the files byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

__all__ = [
    "RunConfig",
    "ConfigError",
    "ENVELOPE_SCHEMA",
    "RESULT_SCHEMAS",
    "CSV_COLUMNS",
    "to_jsonable",
    "content_hash",
    "envelope",
    "validate_artifact",
    "atomic_write",
    "write_json",
    "write_csv",
]


class ConfigError(ValueError):
    """Invalid run configuration (exit status 2)."""


COMMANDS = ("spectrum", "courant-sharp", "nodal-family", "isospec", "partition3", "transition")


@dataclass
class RunConfig:
    command: str
    geometry: dict = field(default_factory=dict)
    h: float | None = None
    grids: list | None = None
    resolution: int | None = None
    tol: float = 1e-9
    seed: int = 0x5EED
    params: dict = field(default_factory=dict)
    out_dir: str = "."
    formats: list = field(default_factory=lambda: ["json"])

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for key, val in self.geometry.items():
            if val is None:
                continue
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ConfigError(f"geometry value {key}={val!r} must be a positive number")
        a, b = self.geometry.get("a"), self.geometry.get("b")
        if a is not None and b is not None and a > b:
            raise ConfigError("need a <= b")
        eps = self.geometry.get("eps")
        if eps is not None and eps > 1:
            raise ConfigError("eps must lie in (0, 1]")
        if self.h is not None and not (0 < self.h < 1):
            raise ConfigError(f"grid spacing h={self.h} must lie in (0, 1)")
        if self.grids is not None:
            if len(self.grids) < 2 or any(not (0 < g < 1) for g in self.grids):
                raise ConfigError("need at least two grid spacings in (0, 1)")
        if self.resolution is not None and self.resolution < 64:
            raise ConfigError("resolution must be >= 64")
        if not 0 < self.tol < 1:
            raise ConfigError("tol must lie in (0, 1)")
        allowed = {"json", "csv", "svg"}
        bad = set(self.formats) - allowed
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        return self

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


def to_jsonable(obj):
    """Convert numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(config: dict, result) -> str:
    return hashlib.sha256(_canonical({"config": config, "result": result}).encode()).hexdigest()


ENVELOPE_SCHEMA = {
    "type": "object",
    "required": ["config", "result", "content_hash"],
    "properties": {
        "config": {"type": "object", "required": ["command"]},
        "result": {"type": "object"},
        "content_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
    },
}

_NUM_LIST = {"type": "array", "items": {"type": "number"}}
RESULT_SCHEMAS = {
    "spectrum": {
        "type": "object", "required": ["levels"],
        "properties": {"levels": {"type": "array", "items": {
            "type": "object", "required": ["value", "modes", "multiplicity"],
            "properties": {"value": {"type": "number"}, "multiplicity": {"type": "integer", "minimum": 1}}}}},
    },
    "courant-sharp": {
        "type": "object", "required": ["squared_aspect", "rules"],
        "properties": {"rules": {"type": "array", "items": {
            "type": "object", "required": ["mode", "interval", "active"]}}},
    },
    "nodal-family": {
        "type": "object", "required": ["nodal_set", "domain_count", "stable"],
        "properties": {"domain_count": {"type": "integer", "minimum": 1}},
    },
    "isospec": {
        "type": "object", "required": ["problems", "deviations"],
        "properties": {
            "problems": {"type": "array", "items": {
                "type": "object", "required": ["label", "h", "eigenvalues"],
                "properties": {"eigenvalues": _NUM_LIST}}},
            "deviations": {"type": "array", "items": {
                "type": "object", "required": ["pair", "value", "trend"],
                "properties": {"value": {"type": "number", "minimum": 0}, "trend": _NUM_LIST}}},
        },
    },
    "partition3": {
        "type": "object", "required": ["sweep"],
        "properties": {"sweep": {"type": "object", "required": ["sweep_points", "argmin"]}},
    },
    "transition": {
        "type": "object", "required": ["rows", "monotone"],
        "properties": {"rows": {"type": "array", "items": {
            "type": "object", "required": ["eps", "x0", "energy", "Lambda", "bound", "below_bound"]}}},
    },
}

CSV_COLUMNS = {
    "spectrum": ["index", "value", "multiplicity", "modes"],
    "courant-sharp": ["m", "n", "lower", "upper", "active"],
    "isospec": ["label", "h", "index", "eigenvalue"],
    "partition3": ["x0", "x1", "lambda", "feasible", "parts", "eig_index"],
    "transition": ["eps", "x0", "x0_refined", "relative_x0", "energy", "Lambda", "bound", "below_bound", "cell"],
}


def envelope(config: RunConfig, result: dict) -> dict:
    cfg = config.to_dict()
    res = to_jsonable(result)
    return {"config": cfg, "result": res, "content_hash": content_hash(cfg, res)}


def validate_artifact(doc: dict) -> None:
    jsonschema.validate(doc, ENVELOPE_SCHEMA)
    schema = RESULT_SCHEMAS.get(doc["config"]["command"])
    if schema is not None:
        jsonschema.validate(doc["result"], schema)
    if content_hash(doc["config"], doc["result"]) != doc["content_hash"]:
        raise jsonschema.ValidationError("content hash does not match the payload")


def atomic_write(path, text: str) -> Path:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, config: RunConfig, result: dict) -> Path:
    doc = envelope(config, result)
    validate_artifact(doc)
    return atomic_write(path, json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_csv(path, config: RunConfig, rows: list[dict]) -> Path:
    """CSV with the fixed column order of the command.

    The configuration and the content hash go into leading ``#`` lines.
    """
    cols = CSV_COLUMNS[config.command]
    rows = to_jsonable(rows)
    buf = io.StringIO()
    cfg = config.to_dict()
    buf.write(f"# config: {_canonical(cfg)}\n")
    buf.write(f"# content_hash: {content_hash(cfg, {'rows': rows})}\n")
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return atomic_write(path, buf.getvalue())
