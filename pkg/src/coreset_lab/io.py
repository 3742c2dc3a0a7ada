"""File formats: dataset CSV, coreset CSV with JSON sidecar, report schema.

Values print with 17 significant digits, so every double round-trips
exactly. Dataset files are headerless coordinate rows; finite metrics
start with a marker line followed by the cost matrix. Coresets append a
weight column and require a JSON sidecar carrying build provenance.
"""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .data import EUCLIDEAN, FINITE_MATRIX, SQUARED_EUCLIDEAN, Dataset
from .digests import dataset_digest
from .exceptions import ParseError, ValidationError
from .instances import InstanceTag
from .sampling import OFFSET, Coreset

FINITE_MARKER = "finite_matrix"
REPORT_VERSION = 1

_REPORT_KEYS = {"version", "dataset_digest", "coreset_meta", "evente", "structure",
                "interaction", "errors", "beta", "weight_bounds"}
_META_KEYS = {"m", "algorithm", "seed", "offset", "objective_mode", "approx_digest",
              "metric_kind", "k", "restarts", "dataset_digest", "entries", "compacted"}


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def write_dataset(path, P: Dataset, tag: InstanceTag | None = None) -> None:
    p = Path(path)
    lines = []
    if P.metric == FINITE_MATRIX:
        lines.append(FINITE_MARKER)
        for row in P.matrix:
            lines.append(",".join(_fmt(v) for v in row))
    else:
        for row in P.points:
            lines.append(",".join(_fmt(v) for v in row))
    p.write_text("\n".join(lines) + "\n")
    if tag is not None:
        sidecar_path(p).write_text(json.dumps(tag.to_dict()) + "\n")


def _parse_rows(text: str, path, start_line: int = 1) -> np.ndarray:
    rows = []
    width = None
    raw_lines = text.splitlines()
    for offset, line in enumerate(raw_lines):
        line = line.strip()
        if not line:
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"ragged row in {path}: expected {width} columns, "
                             f"got {len(cells)}", line=start_line + offset)
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ParseError(f"non-numeric cell in {path}", line=start_line + offset)
    if not rows:
        raise ParseError(f"{path} contains no data rows")
    return np.asarray(rows, dtype=np.float64)


def read_dataset(path, objective: str = "kmeans") -> tuple[Dataset, InstanceTag | None]:
    """Parse a dataset file; the objective picks the Euclidean cost convention."""
    p = Path(path)
    text = p.read_text()
    first = text.splitlines()[0].strip() if text.splitlines() else ""
    if first == FINITE_MARKER:
        matrix = _parse_rows(text[text.index("\n") + 1:], p, start_line=2)
        dataset = Dataset.from_matrix(matrix)
    else:
        points = _parse_rows(text, p)
        metric = SQUARED_EUCLIDEAN if objective == "kmeans" else EUCLIDEAN
        dataset = Dataset.from_points(points, metric=metric)
    tag = None
    side = sidecar_path(p)
    if side.exists():
        tag = InstanceTag.from_dict(json.loads(side.read_text()))
    return dataset, tag


def write_coreset(path, omega: Coreset) -> None:
    p = Path(path)
    lines = []
    if omega.points is not None:
        for row, w in zip(omega.points, omega.weights):
            lines.append(",".join(_fmt(v) for v in row) + "," + _fmt(w))
    else:
        for idx, w in zip(omega.indices, omega.weights):
            lines.append(f"{int(idx)},{_fmt(w)}")
    p.write_text("\n".join(lines) + "\n")
    meta = dict(omega.meta)
    meta.setdefault("algorithm", "unknown")
    meta.setdefault("seed", None)
    meta["m"] = omega.m
    meta["offset"] = omega.offset
    meta["metric_kind"] = omega.metric
    meta["entries"] = omega.n_entries
    sidecar_path(p).write_text(json.dumps(meta) + "\n")


def read_coreset(path, dataset: Dataset | None = None) -> Coreset:
    """Parse a coreset and its mandatory sidecar.

    When the source dataset is supplied, entries that match input points
    exactly recover their indices, which the diagnostics need.
    """
    p = Path(path)
    side = sidecar_path(p)
    if not side.exists():
        raise ValidationError(f"coreset sidecar {side} is missing")
    meta = json.loads(side.read_text())
    unknown = set(meta) - _META_KEYS
    if unknown:
        raise ValidationError(f"unknown sidecar fields: {sorted(unknown)}")
    for key in ("m", "algorithm", "offset", "metric_kind"):
        if key not in meta:
            raise ValidationError(f"coreset sidecar is missing {key!r}")

    rows = _parse_rows(p.read_text(), p)
    metric = meta["metric_kind"]
    entries = int(meta.get("entries", rows.shape[0]))
    if entries != rows.shape[0]:
        raise ValidationError(
            f"sidecar records {entries} entries but the file has {rows.shape[0]} rows")
    if meta["algorithm"] in ("sensitivity", "uniform") and not meta.get("compacted"):
        if int(meta["m"]) != rows.shape[0]:
            raise ValidationError(
                f"sidecar draw count m={meta['m']} does not match {rows.shape[0]} rows")
    weights = rows[:, -1]
    if np.any(weights <= 0):
        raise ValidationError("coreset weights must be positive")

    if metric == FINITE_MATRIX:
        idx = rows[:, 0].astype(np.int64)
        if np.max(np.abs(rows[:, 0] - idx)) > 0:
            raise ParseError(f"{p} index column must be integral")
        points = None
        indices = idx
    else:
        points = rows[:, :-1]
        indices = _recover_indices(points, dataset)
    keep = {k: v for k, v in meta.items()
            if k in ("algorithm", "seed", "approx_digest", "metric_kind", "k",
                     "restarts", "dataset_digest", "objective_mode", "compacted")}
    return Coreset(metric=metric, weights=weights, m=int(meta["m"]), points=points,
                   indices=indices, offset=float(meta["offset"]), meta=keep)


def _recover_indices(points: np.ndarray, dataset: Dataset | None) -> np.ndarray | None:
    if dataset is None or dataset.metric == FINITE_MATRIX:
        return None
    lookup = {row.tobytes(): i for i, row in enumerate(dataset.points)}
    idx = np.array([lookup.get(row.tobytes(), -1) for row in points], dtype=np.int64)
    return idx


def validate_report(report: dict) -> dict:
    """Strict schema check: versioned, known top-level fields only."""
    if not isinstance(report, dict):
        raise ValidationError("report must be a JSON object")
    unknown = set(report) - _REPORT_KEYS
    if unknown:
        raise ValidationError(f"unknown report fields: {sorted(unknown)}")
    if report.get("version") != REPORT_VERSION:
        raise ValidationError(f"report version must be {REPORT_VERSION}")
    if not isinstance(report.get("dataset_digest"), str):
        raise ValidationError("report needs a dataset_digest string")
    inter = report.get("interaction")
    if inter is not None:
        missing = {"signature", "N", "r"} - set(inter)
        if missing:
            raise ValidationError(f"interaction section is missing {sorted(missing)}")
    errors = report.get("errors")
    if errors is not None:
        missing = {"sup", "mean", "argmax_family"} - set(errors)
        if missing:
            raise ValidationError(f"errors section is missing {sorted(missing)}")
    beta = report.get("beta")
    if beta is not None:
        missing = {"value", "mode"} - set(beta)
        if missing:
            raise ValidationError(f"beta section is missing {sorted(missing)}")
    return report


def new_report(P: Dataset) -> dict:
    return {"version": REPORT_VERSION, "dataset_digest": dataset_digest(P),
            "coreset_meta": None, "evente": None, "structure": None,
            "interaction": None, "errors": None, "beta": None,
            "weight_bounds": None}


def write_report(path, report: dict) -> None:
    validate_report(report)
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def read_report(path) -> dict:
    return validate_report(json.loads(Path(path).read_text()))
