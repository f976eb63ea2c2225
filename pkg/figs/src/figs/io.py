"""Readers for the simulator's persisted output files.

Tabular outputs start with a comment block ("# key: value" lines, one of
which carries the full run configuration as JSON), then a CSV column row,
then 17-significant-digit rows.  Summaries are JSON documents with the
same metadata under "meta".  This module only parses and cross-checks;
nothing here recomputes physics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class FigureInputError(Exception):
    """Input file missing, malformed, or inconsistent with its peers."""


@dataclass
class Table:
    path: str
    version: str
    config: dict
    meta: dict
    columns: list
    cells: dict

    def col(self, name: str) -> np.ndarray:
        try:
            return self.cells[name]
        except KeyError:
            raise FigureInputError(
                f"{self.path}: missing column {name!r} (has {', '.join(self.columns)})"
            ) from None


@dataclass
class Summary:
    path: str
    version: str
    config: dict
    payload: dict

    def entry(self, name: str):
        if name not in self.payload:
            raise FigureInputError(f"{self.path}: summary lacks field {name!r}")
        return self.payload[name]


def read_table(path: str) -> Table:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise FigureInputError(f"cannot read {path}: {e}") from None

    meta: dict[str, str] = {}
    body = None
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body = i
            break
        text = line[1:].strip()
        key, sep, value = text.partition(":")
        if not sep:
            raise FigureInputError(f"{path}: malformed header line {i + 1}: {line!r}")
        meta[key.strip()] = value.strip()
    if body is None:
        raise FigureInputError(f"{path}: no column header row after the metadata block")
    for required in ("artifact-version", "config", "columns"):
        if required not in meta:
            raise FigureInputError(f"{path}: metadata block lacks {required!r}")
    try:
        config = json.loads(meta["config"])
    except json.JSONDecodeError as e:
        raise FigureInputError(f"{path}: config header is not valid JSON: {e.msg}") from None

    columns = lines[body].split(",")
    if columns != meta["columns"].split(","):
        raise FigureInputError(f"{path}: column row disagrees with the columns header")
    rows = [line.split(",") for line in lines[body + 1 :] if line]
    for k, row in enumerate(rows):
        if len(row) != len(columns):
            raise FigureInputError(f"{path}: data row {k + 1} has {len(row)} fields, expected {len(columns)}")

    cells = {}
    for j, name in enumerate(columns):
        values = [row[j] for row in rows]
        try:
            cells[name] = np.array(values, dtype=float)
        except ValueError:
            # text column, e.g. observable names in the scaling table
            cells[name] = np.array(values, dtype=object)
    version = meta.pop("artifact-version")
    meta.pop("config")
    meta.pop("columns")
    return Table(path=path, version=version, config=config, meta=meta, columns=columns, cells=cells)


def read_summary(path: str) -> Summary:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise FigureInputError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise FigureInputError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    meta = doc.get("meta") if isinstance(doc, dict) else None
    if not isinstance(meta, dict) or "artifact_version" not in meta or "config" not in meta:
        raise FigureInputError(f"{path}: missing metadata block")
    if not isinstance(meta["config"], dict):
        raise FigureInputError(f"{path}: config metadata is not an object")
    return Summary(path=path, version=str(meta["artifact_version"]), config=meta["config"], payload=doc)


def check_consistent(items, keys=None) -> None:
    """Reject input sets whose headers disagree.

    All files must share an artifact version.  With `keys=None` the whole
    config must match (files from one and the same run); otherwise only the
    named config fields must agree, so e.g. curves at different couplings
    can share axes.
    """
    ref = items[0]
    for item in items[1:]:
        if item.version != ref.version:
            raise FigureInputError(
                f"{item.path}: artifact version {item.version} differs from {ref.version} in {ref.path}"
            )
        if keys is None:
            if item.config != ref.config:
                raise FigureInputError(f"{item.path}: run config differs from {ref.path}")
        else:
            for key in keys:
                if item.config.get(key) != ref.config.get(key):
                    raise FigureInputError(
                        f"{item.path}: {key}={item.config.get(key)!r} differs from "
                        f"{ref.config.get(key)!r} in {ref.path}"
                    )


def config_label(config: dict) -> str:
    return f"{config.get('model')} L={config.get('L')} alpha={config.get('alpha_tilde')}"
