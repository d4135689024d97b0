"""Line-oriented ``key = value`` run configuration.

Values are read with YAML flow syntax, so DMC matrices are written as bracketed
row lists and may continue over several lines until the brackets balance.
``#`` starts a comment. Every problem is reported with its line number before
anything is computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import yaml

from src.bounds.ehmodel import DmcSpec, EnergyKind, EnergyProcess
from src.core.errors import ConfigError, DomainError
from src.interfaces.schemas import COMMANDS, ENERGY_KEYS, RunConfig

Problem = Tuple[Optional[int], str]


@dataclass(frozen=True)
class KeySpec:
    kind: str
    check: Optional[Callable[[Any], bool]] = None
    message: str = ""
    choices: Tuple[str, ...] = ()


def _positive(message: str) -> KeySpec:
    return KeySpec("float", lambda v: v > 0, message)


KEYS: Dict[str, KeySpec] = {
    "command": KeySpec("choice", choices=COMMANDS),
    "noise_var": _positive("noise_var must be positive"),
    "energy_process": KeySpec("choice", choices=tuple(kind.value for kind in EnergyKind)),
    "mean_energy": _positive("mean_energy must be positive"),
    "level": _positive("level must be positive"),
    "low": KeySpec("float", lambda v: v >= 0, "low must be nonnegative"),
    "high": _positive("high must be positive"),
    "rate": _positive("rate must be positive"),
    "p": KeySpec("float", lambda v: 0 < v <= 1, "p must lie in (0,1]"),
    "mu": KeySpec("float"),
    "sd": _positive("sd must be positive"),
    "floor": KeySpec("float", lambda v: v >= 0, "floor must be nonnegative"),
    "epsilon": KeySpec("float", lambda v: 0 < v < 1, "epsilon must lie in (0,1)"),
    "lambda": KeySpec("lambda", lambda v: v == "auto" or 0 < v < 1, "lambda must lie in (0,1) or be auto"),
    "mode": KeySpec("choice", choices=("explicit", "asymptotic")),
    "berry_esseen_constant": KeySpec(
        "float", lambda v: 0 < v <= 0.5, "berry_esseen_constant must lie in (0,0.5]"
    ),
    "delta_n": _positive("delta_n must be positive"),
    "u_n": _positive("u_n must be positive"),
    "n_min": KeySpec("int", lambda v: v >= 1, "n_min must be at least 1"),
    "n_max": KeySpec("int", lambda v: v >= 1, "n_max must be at least 1"),
    "points": KeySpec("int", lambda v: v >= 1, "points must be at least 1"),
    "eta": _positive("eta must be positive"),
    "w": KeySpec("matrix"),
    "cost": KeySpec("vector"),
    "seed": KeySpec("int", lambda v: 0 <= v < 2**64, "seed must be a nonnegative 64-bit integer"),
    "trials": KeySpec("int", lambda v: v >= 1, "trials must be at least 1"),
    "n": KeySpec("int", lambda v: v >= 1, "n must be at least 1"),
    "log2M": KeySpec("float", lambda v: v >= 0, "log2M must be nonnegative"),
    "output": KeySpec("str"),
}

# serialization order
KEY_ORDER = tuple(KEYS)

REQUIRED: Dict[str, Tuple[str, ...]] = {
    "bounds-awgn": ("noise_var", "epsilon"),
    "bounds-dmc": ("w", "cost", "epsilon"),
    "simulate": ("epsilon",),
    "verify": (),
    "sweep": ("epsilon",),
}


def parse_value(raw: str) -> Any:
    """YAML scalar/flow value, with a float fallback for exponent forms YAML keeps as strings."""
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ValueError(f"unreadable value {raw!r}") from exc
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(float(value))


def coerce(key: str, value: Any) -> Any:
    """Convert a parsed value to the key's type; raises ValueError with a user-facing message."""
    spec = KEYS[key]
    if spec.kind == "choice":
        if not isinstance(value, str) or value not in spec.choices:
            raise ValueError(f"{key} must be one of {', '.join(spec.choices)}")
        converted: Any = value
    elif spec.kind == "str":
        if value is None or isinstance(value, (list, dict)):
            raise ValueError(f"{key} must be a string")
        converted = str(value)
    elif spec.kind == "lambda" and isinstance(value, str):
        if value.strip().lower() != "auto":
            raise ValueError(spec.message)
        converted = "auto"
    elif spec.kind in ("float", "lambda"):
        if not _is_number(value):
            raise ValueError(f"{key} must be a number")
        converted = float(value)
    elif spec.kind == "int":
        if not _is_number(value) or float(value) != int(value):
            raise ValueError(f"{key} must be an integer")
        converted = int(value)
    elif spec.kind == "vector":
        if not isinstance(value, list) or not value or not all(_is_number(v) for v in value):
            raise ValueError(f"{key} must be a bracketed list of numbers")
        converted = [float(v) for v in value]
    else:
        if (
            not isinstance(value, list)
            or not value
            or not all(isinstance(row, list) and row and all(_is_number(v) for v in row) for row in value)
            or len({len(row) for row in value}) != 1
        ):
            raise ValueError(f"{key} must be a bracketed list of equal-length numeric rows")
        converted = [[float(v) for v in row] for row in value]
    if spec.check is not None and not spec.check(converted):
        raise ValueError(spec.message)
    return converted


def _logical_lines(text: str) -> Tuple[List[Tuple[int, str]], List[Problem]]:
    """Join bracket continuations; returns (first line number, joined text) pairs."""
    lines: List[Tuple[int, str]] = []
    problems: List[Problem] = []
    buffer, start, depth = "", 0, 0
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content and depth == 0:
            continue
        if depth == 0:
            buffer, start = content, number
        else:
            buffer = f"{buffer} {content}"
        depth = buffer.count("[") - buffer.count("]")
        if depth < 0:
            problems.append((start, "unbalanced ']'"))
            buffer, depth = "", 0
        elif depth == 0:
            lines.append((start, buffer))
    if depth > 0:
        problems.append((start, "unterminated '['"))
    return lines, problems


def cross_check(command: str, params: Mapping[str, Any]) -> List[str]:
    """Constraints spanning several keys; messages carry no line number."""
    problems = [f"{key} is required for {command}" for key in REQUIRED.get(command, ()) if key not in params]
    if command in ("bounds-awgn", "simulate", "sweep") and "w" not in params and "noise_var" not in params:
        problems.append(f"{command} needs noise_var (AWGN) or w and cost (DMC)")
    if ("w" in params) != ("cost" in params):
        problems.append("w and cost must be given together")
    elif "w" in params:
        try:
            DmcSpec(np.asarray(params["w"]), np.asarray(params["cost"]))
        except DomainError as exc:
            problems.append(str(exc))
    if params.get("n_min", 1) > params.get("n_max", math.inf):
        problems.append("n_min must not exceed n_max")
    if command != "verify":
        energy = {key: params[key] for key in ENERGY_KEYS if key in params}
        if energy:
            energy["kind"] = params.get("energy_process", "constant")
            try:
                EnergyProcess.from_mapping(energy)
            except (DomainError, ValueError, TypeError) as exc:
                problems.append(str(exc))
        elif REQUIRED.get(command):
            problems.append("an energy process needs mean_energy or its own parameters")
    return problems


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Validate ``text`` into a RunConfig; ``command`` fills in (or overrides) the command key."""
    logical, problems = _logical_lines(text)
    params: Dict[str, Any] = {}
    seen: Dict[str, int] = {}
    for number, line in logical:
        if "=" not in line:
            problems.append((number, f"expected 'key = value', got {line!r}"))
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            problems.append((number, f"unknown key {key!r}"))
            continue
        if key in seen:
            problems.append((number, f"duplicate key {key!r} (first set on line {seen[key]})"))
            continue
        seen[key] = number
        if not raw:
            problems.append((number, f"{key} has no value"))
            continue
        try:
            params[key] = coerce(key, parse_value(raw))
        except ValueError as exc:
            problems.append((number, str(exc)))

    resolved = command or params.get("command")
    if resolved is None and "command" not in seen:
        problems.append((None, "command is required"))
    if resolved is not None:
        if resolved not in COMMANDS:
            problems.append((None, f"command must be one of {', '.join(COMMANDS)}"))
        elif not problems:
            problems.extend((None, message) for message in cross_check(resolved, params))
    if problems:
        raise ConfigError(problems)

    assert resolved is not None
    params.pop("command", None)
    output = params.pop("output", None)
    return RunConfig(command=resolved, parameters=params, output_path=Path(output) if output else None)


def load_config(path: Path, command: Optional[str] = None) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), command)


def _render(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    return str(value)


def serialize(cfg: RunConfig) -> str:
    values = {"command": cfg.command, **cfg.parameters}
    if cfg.output_path is not None:
        values["output"] = str(cfg.output_path)
    lines = [f"{key} = {_render(values[key])}" for key in KEY_ORDER if key in values]
    return "\n".join(lines) + "\n"


__all__ = ["KEYS", "coerce", "cross_check", "load_config", "parse_config", "parse_value", "serialize"]
