"""Params JSON, point CSV and atomic file writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .layernorm import DEFAULT_EPSILON, LayerNormParams

PARAM_KEYS = ("n", "g", "b", "eps")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def params_from_dict(obj) -> LayerNormParams:
    """Strict parse of ``{"n": ..., "g": [...], "b": [...], "eps": ...}``.

    ``eps`` may be omitted (defaults to 1e-5); any other key is rejected.
    """
    if not isinstance(obj, dict):
        raise ConfigurationError("params must be a JSON object")
    unknown = sorted(set(obj) - set(PARAM_KEYS))
    if unknown:
        raise ConfigurationError(f"unknown params keys: {', '.join(unknown)}")
    missing = [k for k in ("n", "g", "b") if k not in obj]
    if missing:
        raise ConfigurationError(f"missing params keys: {', '.join(missing)}")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise ConfigurationError(f"n must be an integer >= 2, got {n!r}")
    for key in ("g", "b"):
        vals = obj[key]
        if not isinstance(vals, list) or not all(_is_number(v) for v in vals):
            raise ConfigurationError(f"{key} must be a list of numbers")
        if len(vals) != n:
            raise ConfigurationError(f"{key} has length {len(vals)}, expected n = {n}")
        if not all(math.isfinite(v) for v in vals):
            raise ConfigurationError(f"{key} has non-finite entries")
    eps = obj.get("eps", DEFAULT_EPSILON)
    if not _is_number(eps) or not math.isfinite(eps) or eps < 0:
        raise ConfigurationError(f"eps must be a finite number >= 0, got {eps!r}")
    return LayerNormParams(obj["g"], obj["b"], eps)


def params_to_dict(p: LayerNormParams) -> dict:
    return {"n": p.n, "g": p.gain.tolist(), "b": p.bias.tolist(), "eps": p.epsilon}


def read_params(path) -> LayerNormParams:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    return params_from_dict(obj)


def format_value(x: float, exact: bool = False) -> str:
    if exact:
        return format(float(x), ".17g")
    s = format(float(x), ".6f")
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


def format_row(values, exact: bool = False) -> str:
    return ",".join(format_value(v, exact) for v in values)


def read_points(path, n: int | None = None) -> np.ndarray:
    """Rows of comma-separated floats. A leading ``x0,...`` header is skipped.

    Raises :class:`ConfigurationError` naming the offending line.
    """
    rows = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if lineno == 1 and line.split(",", 1)[0].strip() == "x0":
                continue
            if not line.strip():
                raise ConfigurationError(f"{path}:{lineno}: empty row")
            try:
                vals = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: malformed row: {exc}") from exc
            if not all(math.isfinite(v) for v in vals):
                raise ConfigurationError(f"{path}:{lineno}: non-finite value")
            if n is not None and len(vals) != n:
                raise ConfigurationError(f"{path}:{lineno}: expected {n} columns, got {len(vals)}")
            if rows and len(vals) != len(rows[0]):
                raise ConfigurationError(f"{path}:{lineno}: inconsistent column count")
            rows.append(vals)
    if not rows:
        return np.zeros((0, n or 0))
    return np.array(rows, dtype=np.float64)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows(path, rows, header: list[str] | None = None, exact: bool = False) -> None:
    lines = []
    if header:
        lines.append(",".join(header))
    lines.extend(format_row(r, exact) for r in rows)
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")
