"""CSV and manifest I/O.

All floats are written with ``repr``, the shortest representation that
round-trips exactly, so re-running a configuration reproduces output
files byte for byte.  Sample CSVs are UTF-8, comma-separated, '.'
decimal point, one observation per line; a single header line is
auto-detected on read by a non-numeric first token.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .samplers import Sample

TOOL_VERSION = "0.1.0"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty CSV")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def write_sample_csv(sample: Sample, path, header: bool = True) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if header:
        lines.append(",".join(f"x{j + 1}" for j in range(sample.d)))
    for row in sample.values:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def read_sample_csv(path) -> Sample:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty sample file")
    first_token = lines[0].split(",")[0].strip()
    start = 0 if _is_number(first_token) else 1
    rows = []
    width = None
    for i, ln in enumerate(lines[start:], start=start + 1):
        fields = ln.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DataError(f"{path}: line {i} has {len(fields)} fields, expected {width}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise DataError(f"{path}: line {i}: {exc}")
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Sample(np.asarray(rows), provenance=str(path))


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_manifest(
    path,
    subcommand: str,
    config: dict,
    seed: int,
    inputs: list,
    outputs: list,
    started: float,
    results: dict | None = None,
) -> None:
    """Write the reproducibility manifest shipped next to every output."""
    manifest = {
        "tool": "tailvc",
        "version": TOOL_VERSION,
        "subcommand": subcommand,
        "seed": int(seed) if seed is not None else None,
        "config": _jsonable(config),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "duration_seconds": round(time.time() - started, 3),
        "results": _jsonable(results or {}),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def read_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed manifest: {exc}")
