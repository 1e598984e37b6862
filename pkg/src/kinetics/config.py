"""Experiment configuration: schema-validated key-value trees.

Configs are YAML mappings.  The single schema file ``config.schema.json``
(shipped with the package) documents every key: type, default, and the
constraint quoted verbatim in rejection messages.  Parsing materializes all
defaults, so the manifest always records the complete effective parameter
set, and hashes the canonical JSON rendering of it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import yaml

SCHEMA_RESOURCE = "config.schema.json"
EXPERIMENT_KINDS = (
    "kernel_report",
    "povzner_sweep",
    "simulate",
    "moment_creation",
    "fourier_residual",
)


class ConfigError(ValueError):
    """Invalid configuration: unknown key, bad type, or violated constraint."""


@dataclass
class ExperimentSpec:
    """A validated experiment: kind, seed, workers, and the full parameter
    block with every default materialized."""

    kind: str
    seed: int
    workers: int
    params: dict = field(default_factory=dict)

    def tree(self) -> dict:
        """The complete effective configuration as one mapping."""
        return {"kind": self.kind, "seed": self.seed, "workers": self.workers,
                **self.params}

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.tree()).encode()).hexdigest()


def canonical_json(obj) -> str:
    """Deterministic JSON rendering: sorted keys, no whitespace, no NaN."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@lru_cache(maxsize=1)
def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath(SCHEMA_RESOURCE).read_text())


def _reject(key, value, entry):
    constraint = entry.get("constraint")
    if constraint:
        raise ConfigError(f"{key} = {value!r} violates {constraint}")
    raise ConfigError(f"invalid value for {key}: {value!r}")


def _check_bounds(key, value, entry):
    if "min" in entry and value < entry["min"]:
        _reject(key, value, entry)
    if "max" in entry and value > entry["max"]:
        _reject(key, value, entry)
    if "min_exclusive" in entry and value <= entry["min_exclusive"]:
        _reject(key, value, entry)
    if "max_exclusive" in entry and value >= entry["max_exclusive"]:
        _reject(key, value, entry)


def _coerce_scalar(key, value, entry):
    kind = entry["type"]
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be a boolean, got {value!r}")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        _check_bounds(key, value, entry)
        return int(value)
    if kind in ("float", "optional_float"):
        if value is None:
            if kind == "optional_float":
                return None
            raise ConfigError(f"{key} must be a number, got null")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        value = float(value)
        _check_bounds(key, value, entry)
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}")
        choices = entry.get("choices")
        if choices and value not in choices:
            raise ConfigError(
                f"{key} = {value!r} is not one of {', '.join(choices)}")
        return value
    raise ConfigError(f"unhandled schema type {kind} for {key}")


def _coerce_list(key, value, entry):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{key} must be a list, got {value!r}")
    element = entry["type"][len("list["):-1]
    out = []
    for pos, item in enumerate(value):
        label = f"{key}[{pos}]"
        if element == "vec3":
            if (not isinstance(item, (list, tuple)) or len(item) != 3
                    or any(isinstance(c, bool) or not isinstance(c, (int, float))
                           for c in item)):
                raise ConfigError(f"{label} must be a 3-vector of numbers, got {item!r}")
            out.append([float(c) for c in item])
            continue
        sub = {"type": element,
               **{k[len("element_"):]: v for k, v in entry.items()
                  if k.startswith("element_")},
               "constraint": entry.get("constraint")}
        out.append(_coerce_scalar(label, item, sub))
    return out


def _validate_block(tree, schema_block, context):
    if not isinstance(tree, dict):
        raise ConfigError(f"{context} must be a mapping, got {tree!r}")
    for key in tree:
        if key not in schema_block:
            raise ConfigError(f"unknown configuration key '{key}' in {context}")
    out = {}
    for key, entry in schema_block.items():
        if key in tree:
            raw = tree[key]
        elif entry.get("required"):
            raise ConfigError(f"missing required key '{key}' in {context}")
        else:
            raw = entry.get("default")
            if isinstance(raw, (list, dict)):
                raw = json.loads(json.dumps(raw))
        if entry["type"] == "initial_law":
            out[key] = _validate_initial(raw, f"{context}.{key}")
        elif entry["type"].startswith("list["):
            out[key] = _coerce_list(key, raw, entry)
        else:
            out[key] = _coerce_scalar(key, raw, entry)
    return out


def _validate_initial(tree, context):
    schema = load_schema()["initial_laws"]
    if not isinstance(tree, dict):
        raise ConfigError(f"{context} must be a mapping, got {tree!r}")
    kind = tree.get("kind")
    if kind is None:
        raise ConfigError(f"missing required key 'kind' in {context}")
    if kind not in schema:
        raise ConfigError(
            f"{context}.kind = {kind!r} is not one of {', '.join(sorted(schema))}")
    body = {k: v for k, v in tree.items() if k != "kind"}
    out = _validate_block(body, schema[kind], context)
    return {"kind": kind, **out}


def validate_tree(tree) -> ExperimentSpec:
    """Validate a raw configuration mapping into an ExperimentSpec."""
    if not isinstance(tree, dict):
        raise ConfigError(f"configuration must be a mapping, got {tree!r}")
    schema = load_schema()
    shared = schema["shared"]
    kind = tree.get("kind")
    if kind is None:
        raise ConfigError("missing required key 'kind'")
    kind = _coerce_scalar("kind", kind, shared["kind"])
    kind_schema = schema["kinds"][kind]

    for key in tree:
        if key != "kind" and key not in shared and key not in kind_schema:
            raise ConfigError(f"unknown configuration key '{key}' (kind {kind})")

    seed = _coerce_scalar("seed", tree.get("seed", shared["seed"]["default"]),
                          shared["seed"])
    workers = _coerce_scalar("workers", tree.get("workers", shared["workers"]["default"]),
                             shared["workers"])
    body = {k: v for k, v in tree.items() if k not in ("kind", "seed", "workers")}
    params = _validate_block(body, kind_schema, f"kind {kind}")

    # cross-field constraints that single-key bounds cannot express
    if kind == "moment_creation":
        if params["t_final"] <= params["t0"]:
            raise ConfigError(
                f"t_final = {params['t_final']} violates t_final > t0 = {params['t0']}")
        ladder = params["n_ladder"]
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError(
                f"n_ladder = {ladder} violates each N >= 2, given in increasing order")
    if kind == "fourier_residual":
        if params["z_max"] <= params["z_min"]:
            raise ConfigError(
                f"z_max = {params['z_max']} violates z_max > z_min = {params['z_min']}")
        if params["delta"] >= params["t_final"]:
            raise ConfigError(
                f"delta = {params['delta']} violates delta < t_final = {params['t_final']}")
    return ExperimentSpec(kind=kind, seed=seed, workers=workers, params=params)


def parse_config(path) -> ExperimentSpec:
    """Load, validate, and default-materialize a YAML configuration file."""
    try:
        with open(path, encoding="utf-8") as handle:
            tree = yaml.safe_load(handle)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"configuration file {path} is not valid YAML: {exc}") from None
    if tree is None:
        raise ConfigError(f"configuration file {path} is empty")
    return validate_tree(tree)
