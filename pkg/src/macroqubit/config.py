"""Run configuration: per-command schemas, JSON loading and flag overrides.

A configuration is a flat JSON object.  Every key must belong to the
command's schema; values are coerced to the declared type and checked
before anything runs.  The resolved mapping (defaults, then file, then
flags) is what gets echoed into every output.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Any, Callable

from .cloners import ClonerSpec
from .errors import InvalidArgument

__all__ = ["ConfigError", "Field", "SCHEMAS", "resolve", "load_file", "parse_flag_value", "default_workers", "WORKERS_ENV"]

WORKERS_ENV = "MACROQUBIT_WORKERS"


class ConfigError(InvalidArgument):
    """Configuration rejected before any computation."""


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {n}")
    return n


@dataclass(frozen=True)
class Field:
    kind: str  # "float", "int", "str", "bool", "floats", "strs", "mapping", "path"
    default: Any
    check: Callable[[Any], bool] | None = None
    help: str = ""


def _finite(x):
    return math.isfinite(x)


def _nonneg(x):
    return math.isfinite(x) and x >= 0


def _unit(x):
    return 0.0 <= x <= 1.0


def _kind(x):
    try:
        ClonerSpec(x)
    except InvalidArgument:
        return False
    return True


def _amplifier(x):
    return _kind(x) and ClonerSpec(x).kind in ("universal", "phase-covariant")


_COMMON = {
    "output": Field("path", None, help="output file (default: stdout)"),
    "seed": Field("int", 0, lambda x: x >= 0, "seed recorded in the output"),
    "workers": Field("int", None, lambda x: x >= 1, "worker threads (default from environment)"),
}

SCHEMAS = {
    "visibility": {
        "kind": Field("str", "universal", _kind, "cloner kind"),
        "start": Field("float", 0.5, _nonneg, "first gain (or |alpha|^2)"),
        "stop": Field("float", 3.0, _nonneg, "last gain (or |alpha|^2)"),
        "points": Field("int", 26, lambda x: x >= 0, "number of sweep points"),
        "eta": Field("float", 0.07, _unit, "detector efficiency"),
        "theta": Field("int", 7, lambda x: x >= 1, "detector threshold"),
        "format": Field("str", "csv", lambda x: x in ("csv", "json")),
        **_COMMON,
    },
    "witness": {
        "mode": Field("str", "damped", lambda x: x in ("damped", "loss-before")),
        "kinds": Field("strs", ["universal", "phase-covariant"], lambda xs: all(_amplifier(x) for x in xs)),
        "ratios": Field("floats", [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0], lambda xs: all(_finite(x) and x > 0 for x in xs)),
        "p_values": Field("floats", [0.1, 0.3, 0.5, 0.7, 0.9], lambda xs: all(_unit(x) for x in xs)),
        "format": Field("str", "csv", lambda x: x in ("csv", "json")),
        **_COMMON,
    },
    "bell": {
        "kind": Field("str", "measure-prepare", _kind),
        "strength": Field("float", 40.0, _nonneg, "gain (or |alpha|^2)"),
        "eta": Field("float", 0.07, _unit),
        "theta": Field("int", 7, lambda x: x >= 1),
        "count": Field("int", 1_000_000, lambda x: x >= 0, "events per setting"),
        **_COMMON,
    },
    "check": {
        "only": Field("strs", [], help="run only these checks"),
        "inject": Field("mapping", {}, lambda m: all(_finite(v) for v in m.values()),
                        "extra residual added to named checks"),
        **_COMMON,
    },
}


def _coerce(name: str, field: Field, value):
    try:
        if value is None:
            if field.kind == "path" or name in ("workers",):
                return None
            raise TypeError
        if field.kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if field.kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if field.kind in ("str", "path"):
            if not isinstance(value, str):
                raise TypeError
            return value
        if field.kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if field.kind == "floats":
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                value = [value]
            if isinstance(value, str) or any(isinstance(x, bool) for x in value):
                raise TypeError
            return [float(x) for x in value]
        if field.kind == "strs":
            if isinstance(value, str):
                value = [value]
            if not all(isinstance(x, str) for x in value):
                raise TypeError
            return list(value)
        if field.kind == "mapping":
            if not isinstance(value, dict):
                raise TypeError
            return {str(k): float(v) for k, v in sorted(value.items())}
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected {field.kind}, got {value!r}") from None
    raise ConfigError(f"{name}: unsupported field type {field.kind}")


def parse_flag_value(text: str):
    """Flag values are read as JSON when possible, otherwise as plain strings."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve(command: str, file_values: dict | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults, file values and overrides; validate every key and value.

    Raises
    ------
    ConfigError
        On unknown keys, wrong types or out-of-range values.
    """
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    merged = {k: f.default for k, f in schema.items()}
    for source in (file_values or {}, overrides or {}):
        if not isinstance(source, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = sorted(set(source) - set(schema))
        if unknown:
            raise ConfigError(f"unknown configuration keys for {command}: {', '.join(unknown)}")
        merged.update(source)
    out = {}
    for name, field in schema.items():
        value = _coerce(name, field, merged[name])
        if value is not None and field.check is not None and not field.check(value):
            raise ConfigError(f"{name}: value {value!r} is out of range")
        out[name] = value
    if out.get("workers") is None:
        out["workers"] = default_workers()
    if "kind" in out:
        out["kind"] = ClonerSpec(out["kind"]).kind
    if "kinds" in out:
        out["kinds"] = [ClonerSpec(k).kind for k in out["kinds"]]
    if command == "visibility" and out["stop"] < out["start"]:
        raise ConfigError("stop must be >= start")
    return out


def load_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    return data
