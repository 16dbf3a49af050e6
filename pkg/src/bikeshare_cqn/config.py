"""JSON model configuration: schema, loading and normalised re-emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .model import BikeShareModel

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}, "minItems": 1}
_prob_table = {
    "type": "object",
    "patternProperties": {r"^\s*\d+\s*->\s*\d+\s*$": {"type": "number"}},
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "required": ["stations", "roads", "p", "alpha"],
    "additionalProperties": False,
    "properties": {
        "stations": {
            "type": "object",
            "required": ["count", "capacity", "initial_bikes", "arrivals"],
            "additionalProperties": False,
            "properties": {
                "count": {"type": "integer"},
                "capacity": {"type": "integer"},
                "initial_bikes": {"type": "integer"},
                "arrivals": {
                    "type": "array",
                    "items": {
                        "oneOf": [
                            {
                                "type": "object",
                                "required": ["map"],
                                "additionalProperties": False,
                                "properties": {
                                    "map": {
                                        "type": "object",
                                        "required": ["C", "D"],
                                        "additionalProperties": False,
                                        "properties": {"C": _matrix, "D": _matrix},
                                    }
                                },
                            },
                            {
                                "type": "object",
                                "required": ["lambda"],
                                "additionalProperties": False,
                                "properties": {
                                    "lambda": {"type": "array", "items": {"type": "number"}, "minItems": 1}
                                },
                            },
                        ]
                    },
                },
            },
        },
        "roads": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to", "mu", "xi"],
                "additionalProperties": False,
                "properties": {
                    "from": {"type": "integer"},
                    "to": {"type": "integer"},
                    "mu": {"type": "number"},
                    "xi": {"type": "number"},
                },
            },
        },
        "p": _prob_table,
        "alpha": _prob_table,
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "max_iter": {"type": "integer", "minimum": 1},
                "init": {"type": "array", "items": {"type": "number"}},
                "road_factor_convention": {"enum": ["paper", "bcmp"]},
                "max_states": {"type": "integer", "minimum": 1},
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "events": {"type": "integer", "minimum": 1},
                "warmup": {"type": "number", "minimum": 0, "maximum": 0.9},
                "seed": {"type": "integer", "minimum": 0},
                "replications": {"type": "integer", "minimum": 1},
                "lambda_realization": {"enum": ["exponential", "cyclic", "poisson"]},
            },
        },
    },
}


@dataclass
class ModelConfig:
    """A schema-checked config split into its model, solver and simulation parts."""

    model: dict
    solver: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)


def parse_config(doc: dict) -> ModelConfig:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    st = doc["stations"]
    raw = {
        "N": st["count"],
        "C": st["initial_bikes"],
        "K": st["capacity"],
        "stations": st["arrivals"],
        "roads": doc["roads"],
        "p": {_norm_key(k): v for k, v in doc["p"].items()},
        "alpha": {_norm_key(k): v for k, v in doc["alpha"].items()},
    }
    return ModelConfig(raw, dict(doc.get("solver", {})), dict(doc.get("sim", {})))


def load_config(path) -> ModelConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return parse_config(doc)


def _norm_key(k: str) -> str:
    a, b = k.split("->")
    return f"{int(a)}->{int(b)}"


def config_document(model: BikeShareModel, solver: dict | None = None, sim: dict | None = None) -> dict:
    """Config document that parses back to ``model``."""
    raw = model.to_dict()
    doc = {
        "stations": {
            "count": raw["N"],
            "capacity": raw["K"],
            "initial_bikes": raw["C"],
            "arrivals": raw["stations"],
        },
        "roads": raw["roads"],
        "p": raw["p"],
        "alpha": raw["alpha"],
    }
    if solver:
        doc["solver"] = dict(solver)
    if sim:
        doc["sim"] = dict(sim)
    return doc
