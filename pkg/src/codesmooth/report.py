"""Deterministic JSON and CSV emitters shared by the command line."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from typing import Any

import numpy as np

from codesmooth import __version__


def _plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    return obj


def _number(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = "%.17g" % x
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _emit(obj: Any, indent: int, depth: int) -> str:
    pad = " " * (indent * (depth + 1))
    end = " " * (indent * depth)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _number(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_emit(v, indent, depth + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, str, bool)) or v is None for v in obj):
            return "[" + ", ".join(_emit(v, indent, depth + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _emit(v, indent, depth + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj: Any, indent: int = 2) -> str:
    """JSON with floats at 17 significant digits and keys in insertion order."""
    return _emit(_plain(obj), indent, 0) + "\n"


def envelope(command: str, config: dict, seed: int, base: str, result: Any) -> dict:
    return {"tool": "codesmooth", "version": __version__, "command": command, "seed": seed,
            "base": base, "config": config, "result": result}


def csv_preamble(command: str, config: dict, seed: int, base: str) -> str:
    lines = [f"# tool=codesmooth version={__version__} command={command} seed={seed} base={base}"]
    lines += [f"# {k}={v}" for k, v in config.items()]
    return "\n".join(lines) + "\n"
