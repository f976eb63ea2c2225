"""Deterministic CSV/JSON writers with reproducibility headers.

Every output begins with a metadata block carrying the artifact version,
the full run configuration, and the seed, so any file can be reproduced
byte-for-byte from its own header.  CSV comment lines start with "# ";
the first non-comment line is the column header row.  Floats are written
with 17 significant digits.
"""

from __future__ import annotations

import json
import os
from typing import Any

from .config import ARTIFACT_VERSION, RunConfig


def format_value(x: Any) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.17g}"
    if isinstance(x, (int,)):
        return str(x)
    return str(x)


def metadata_lines(config: RunConfig, extra: dict[str, Any] | None = None) -> list[str]:
    lines = [
        f"# artifact-version: {ARTIFACT_VERSION}",
        f"# config: {config.to_json()}",
        f"# seed: {config.seed}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {format_value(value)}")
    return lines


def write_csv(
    path: str,
    columns: list[str],
    rows,
    config: RunConfig,
    extra_meta: dict[str, Any] | None = None,
) -> None:
    meta = dict(extra_meta or {})
    meta["columns"] = ",".join(columns)
    out = metadata_lines(config, meta)
    out.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row width {len(row)} != {len(columns)} columns")
        out.append(",".join(format_value(v) for v in row))
    _atomic_write(path, "\n".join(out) + "\n")


def write_json(path: str, payload: dict[str, Any], config: RunConfig) -> None:
    doc = {
        "meta": {
            "artifact_version": ARTIFACT_VERSION,
            "config": config.to_dict(),
            "seed": config.seed,
        }
    }
    doc.update(payload)
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _atomic_write(path: str, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
