"""Tabular result files with provenance headers and JSON sidecars."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone

from . import __version__

FLOAT_FORMAT = ".12g"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(config: dict) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON config."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def _cell(x):
    if isinstance(x, float):
        return format(x, FLOAT_FORMAT)
    return str(x)


def format_table(columns, rows, metadata: dict, timestamp=True) -> str:
    """``#``-prefixed metadata lines, then a comma-separated header and data rows.

    Only the ``# created:`` line depends on wall time; everything after the
    header is a pure function of the inputs.
    """
    lines = []
    if timestamp:
        lines.append(f"# created: {datetime.now(timezone.utc).isoformat(timespec='seconds')}")
    for key in sorted(metadata):
        lines.append(f"# {key}: {canonical_json(metadata[key]) if isinstance(metadata[key], (dict, list)) else metadata[key]}")
    lines.append(",".join(columns))
    lines.extend(",".join(_cell(x) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


def provenance(command: str, config: dict, seed=None, scale="desk") -> dict:
    return {"command": command, "config_hash": config_hash(config), "seed": seed, "scale": scale,
            "version": __version__}


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_result(out_dir, name, columns, rows, metadata: dict, config: dict):
    """Write ``name.csv`` plus ``name.json`` into ``out_dir``; returns the table path."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.csv")
    _atomic_write(path, format_table(columns, rows, metadata))
    side = {"metadata": metadata, "config": config, "columns": list(columns)}
    _atomic_write(os.path.join(out_dir, f"{name}.json"), json.dumps(side, sort_keys=True, indent=2, default=str) + "\n")
    return path


def data_section(text: str) -> str:
    """Everything but the ``#`` lines, for determinism comparisons."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))
