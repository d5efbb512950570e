"""Machine-readable outputs: CSV traces with unit-annotated headers and a
versioned JSON run summary.  All numbers use 9 significant digits and no
timestamps, so reruns with the same seed are byte-identical."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

SUMMARY_SCHEMA_VERSION = 1


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


def write_csv(path: str, columns: list[tuple[str, np.ndarray]]) -> None:
    """Write named columns; header carries the unit-suffixed names."""
    if not columns:
        raise ValueError("no columns to write")
    names = [name for name, _ in columns]
    arrays = [np.atleast_1d(np.asarray(arr)) for _, arr in columns]
    lengths = {arr.shape[0] for arr in arrays}
    if len(lengths) > 1:
        raise ValueError(f"column lengths differ: {sorted(lengths)}")
    n = lengths.pop()
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(names) + "\n")
            for i in range(n):
                fh.write(",".join(_fmt(arr[i]) for arr in arrays) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace file {path}: {exc}") from exc


def write_json(path: str, payload: dict) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_round_floats(payload), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write summary file {path}: {exc}") from exc


def _round_floats(obj):
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(format(float(obj), ".9g"))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_round_floats(v) for v in obj.tolist()]
    return obj


@dataclass
class RunSummary:
    """Headline numbers plus enough provenance to reproduce the run."""

    config_sha256: str
    master_seed: int
    headline: dict
    defaults_applied: list = field(default_factory=list)
    version: str = "0.1.0"

    def to_dict(self) -> dict:
        return {
            "schema_version": SUMMARY_SCHEMA_VERSION,
            "package_version": self.version,
            "config_sha256": self.config_sha256,
            "master_seed": self.master_seed,
            "defaults_applied": sorted(self.defaults_applied),
            "headline": self.headline,
        }


def emit_traces(columns: list[tuple[str, np.ndarray]], fmt: str, path: str,
                summary: RunSummary | None = None) -> list[str]:
    """Write a trace table as CSV or JSON (plus the JSON summary when given);
    returns the written paths."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    written = []
    if fmt == "csv":
        write_csv(path, columns)
        written.append(path)
    elif fmt == "json":
        payload = {name: np.atleast_1d(np.asarray(arr)).tolist()
                   for name, arr in columns}
        write_json(path, payload)
        written.append(path)
    else:
        raise ValueError(f"unknown trace format {fmt!r} (use csv or json)")
    if summary is not None:
        summary_path = os.path.splitext(path)[0] + "_summary.json"
        write_json(summary_path, summary.to_dict())
        written.append(summary_path)
    return written
