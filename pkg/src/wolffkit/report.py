"""Run reports written next to every CLI output, and their JSON schema."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .diagnostics import _jsonable
from .measure import GridMeasure, Measure

RUN_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "wolffkit run report",
    "type": "object",
    "required": ["command", "parameters", "measure_hash", "config", "outputs",
                 "certificates", "wall_time", "seed", "results"],
    "properties": {
        "command": {"enum": ["potential", "criterion", "solve", "verify", "energy"]},
        "parameters": {
            "type": "object",
            "required": ["n", "p", "q", "alpha"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "p": {"type": "number"},
                "q": {"type": ["number", "null"]},
                "alpha": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "measure_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "measure": {"type": "string"},
        "config": {"type": "object"},
        "outputs": {"type": "array", "items": {"type": "string"}},
        "certificates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "params", "config", "samples", "min_slack", "pass"],
                "properties": {"pass": {"type": "boolean"}},
            },
        },
        "wall_time": {"type": "number", "minimum": 0},
        "seed": {"type": "integer"},
        "results": {"type": "object"},
    },
    "additionalProperties": False,
}


def measure_hash(sigma: Measure) -> str:
    """sha256 of the canonical JSON description (grid densities hashed by their bytes)."""
    h = hashlib.sha256()
    if isinstance(sigma, GridMeasure):
        spec = {"type": "grid", "origin": sigma.origin.tolist(), "spacing": sigma.h,
                "dims": list(sigma.dims)}
        h.update(json.dumps(spec, sort_keys=True).encode())
        h.update(np.ascontiguousarray(sigma.density, dtype="<f8").tobytes())
    else:
        h.update(json.dumps(sigma.to_spec(), sort_keys=True).encode())
    return h.hexdigest()


@dataclass
class RunReport:
    command: str
    parameters: dict
    measure_hash: str
    config: dict
    seed: int
    measure: str = ""
    outputs: list[str] = field(default_factory=list)
    certificates: list[dict] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        d = {"command": self.command, "parameters": self.parameters, "measure_hash": self.measure_hash,
             "measure": self.measure, "config": self.config, "outputs": self.outputs,
             "certificates": self.certificates, "wall_time": self.wall_time, "seed": self.seed,
             "results": self.results}
        return _jsonable(d)

    def validate(self) -> dict:
        d = self.to_dict()
        jsonschema.validate(d, RUN_REPORT_SCHEMA)
        return d
