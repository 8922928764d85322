"""Versioned column schemas for CSV artifacts, plus correspondence file IO.

Every CSV the library writes follows a named schema listed in ``SCHEMAS``.
``schema_manifest()`` serializes the whole registry so downstream consumers
(plot scripts, external tools) can validate inputs without importing this
package.  Readers validate the header against the schema and report parse
problems with 1-based line numbers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import SchemaError, ValidationError
from .geometry import Correspondence, quat_to_rot, rot_to_quat

SCHEMA_VERSION = 1

_ERROR_COLS = [("e_h", "float"), ("e_f", "float"), ("e_lam", "float"),
               ("e_r", "float"), ("e_t", "float")]
_INSTANCE_COLS = [("seed", "int"), ("solver", "str"), ("instance", "int"),
                  ("f_gt", "float"), ("lambda_gt", "float"),
                  ("status", "str"), ("n_solutions", "int"), *_ERROR_COLS]


@dataclass(frozen=True)
class ColumnSchema:
    """An ordered set of typed columns with a schema version."""

    name: str
    columns: tuple[tuple[str, str], ...]  # (column name, kind in int|float|str)
    version: int = SCHEMA_VERSION

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.columns)


SCHEMAS: dict[str, ColumnSchema] = {
    s.name: s for s in [
        ColumnSchema("stability", tuple(_INSTANCE_COLS)),
        ColumnSchema("noise", tuple(_INSTANCE_COLS + [("sigma", "float")])),
        ColumnSchema("drift", tuple(_INSTANCE_COLS + [("drift", "float"),
                                                      ("e_h_lo", "float")])),
        ColumnSchema("ransac_trace", (
            ("repeat", "int"), ("iteration", "int"),
            ("inlier_count", "int"), ("best_inlier_count", "int"))),
        ColumnSchema("ransac_trace_timed", (
            ("repeat", "int"), ("iteration", "int"),
            ("inlier_count", "int"), ("best_inlier_count", "int"),
            ("elapsed_ms", "float"))),
        ColumnSchema("ransac_curve", (
            ("iteration", "int"), ("mean_inlier_count", "float"),
            ("mean_best_inlier_count", "float"), ("n_repeats", "int"))),
        ColumnSchema("timing", (
            ("solver", "str"), ("n_instances", "int"),
            ("mean_us", "float"), ("median_us", "float"),
            ("std_us", "float"), ("budget_iterations", "int"))),
        ColumnSchema("correspondences", (
            ("x1", "float"), ("y1", "float"), ("x2", "float"), ("y2", "float"),
            ("qw1", "float"), ("qx1", "float"), ("qy1", "float"), ("qz1", "float"),
            ("qw2", "float"), ("qx2", "float"), ("qy2", "float"), ("qz2", "float"))),
    ]
}


def schema_manifest() -> dict:
    """Machine-readable description of every CSV schema this package emits."""
    return {
        "artifact_version": SCHEMA_VERSION,
        "schemas": {
            name: {
                "version": s.version,
                "columns": [{"name": c, "kind": k} for c, k in s.columns],
            }
            for name, s in SCHEMAS.items()
        },
    }


def write_manifest(path: str | Path) -> None:
    Path(path).write_text(json.dumps(schema_manifest(), indent=2) + "\n")


def _format_value(v, kind: str) -> str:
    if v is None:
        return ""
    if kind == "float":
        f = float(v)
        return "nan" if math.isnan(f) else repr(f)
    if kind == "int":
        return str(int(v))
    return str(v)


def write_csv(path: str | Path, schema_name: str, rows: list[dict]) -> None:
    """Write rows (dicts) under a named schema; missing keys become blanks."""
    schema = SCHEMAS[schema_name]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(schema.names)
        for row in rows:
            w.writerow(_format_value(row.get(c), k) for c, k in schema.columns)


def _parse_value(text: str, kind: str, line: int, col: str):
    if kind == "str":
        return text
    if text == "":
        if kind == "float":
            return math.nan
        raise SchemaError(f"line {line}: empty value in integer column '{col}'")
    try:
        return int(text) if kind == "int" else float(text)
    except ValueError:
        raise SchemaError(
            f"line {line}: cannot parse {text!r} as {kind} in column '{col}'"
        ) from None


def read_csv(path: str | Path, schema_name: str) -> list[dict]:
    """Read and validate a CSV written under a named schema."""
    schema = SCHEMAS[schema_name]
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a header") from None
        if tuple(header) != schema.names:
            raise SchemaError(
                f"{path}: header {header} does not match schema "
                f"'{schema_name}' v{schema.version} columns {list(schema.names)}")
        for line, rec in enumerate(reader, start=2):
            if len(rec) != len(schema.columns):
                raise SchemaError(
                    f"line {line}: expected {len(schema.columns)} fields, "
                    f"got {len(rec)}")
            rows.append({c: _parse_value(v, k, line, c)
                         for (c, k), v in zip(schema.columns, rec)})
    return rows


# ---------------------------------------------------------------------------
# Correspondence files
# ---------------------------------------------------------------------------
#
# Format: CSV under the "correspondences" schema, coordinates in
# distortion-centered pixels, quaternions Hamilton (w, x, y, z),
# world-to-camera.  A sidecar JSON {"width": W, "height": H} supplies the
# image size; the normalization constant is half the image diagonal.

_QUAT_NORM_TOL = 1e-6


def image_scale(width: float, height: float) -> float:
    """Half-diagonal normalization constant for a given image size."""
    return 0.5 * math.hypot(width, height)


def save_correspondences(csv_path: str | Path, json_path: str | Path,
                         pts1: np.ndarray, pts2: np.ndarray,
                         r1: np.ndarray, r2: np.ndarray,
                         width: int, height: int,
                         scale: float | None = None) -> None:
    """Export normalized correspondences to the on-disk pixel format."""
    s = scale if scale is not None else image_scale(width, height)
    q1 = rot_to_quat(r1)
    q2 = rot_to_quat(r2)
    rows = []
    for p, q in zip(np.asarray(pts1, dtype=float), np.asarray(pts2, dtype=float)):
        rows.append({
            "x1": p[0] * s, "y1": p[1] * s, "x2": q[0] * s, "y2": q[1] * s,
            "qw1": q1[0], "qx1": q1[1], "qy1": q1[2], "qz1": q1[3],
            "qw2": q2[0], "qx2": q2[1], "qy2": q2[2], "qz2": q2[3],
        })
    write_csv(csv_path, "correspondences", rows)
    Path(json_path).write_text(
        json.dumps({"width": width, "height": height}) + "\n")


def load_correspondences(csv_path: str | Path,
                         json_path: str | Path | None = None
                         ) -> tuple[list[Correspondence], float]:
    """Read a correspondence CSV + sidecar, returning normalized points.

    The sidecar defaults to the CSV path with a .json suffix.  Raises
    ValidationError for missing sidecars, bad image sizes, or quaternions
    off unit norm by more than 1e-6 (with the offending line number).
    """
    csv_path = Path(csv_path)
    side = Path(json_path) if json_path is not None else csv_path.with_suffix(".json")
    if not side.exists():
        raise ValidationError(f"missing sidecar JSON {side}")
    try:
        meta = json.loads(side.read_text())
        width, height = float(meta["width"]), float(meta["height"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{side}: invalid sidecar ({exc})") from None
    if width <= 0 or height <= 0:
        raise ValidationError(f"{side}: image size must be positive")
    s = image_scale(width, height)

    rows = read_csv(csv_path, "correspondences")
    corrs = []
    for i, row in enumerate(rows):
        line = i + 2  # header is line 1
        rots = []
        for frame in ("1", "2"):
            q = np.array([row[f"qw{frame}"], row[f"qx{frame}"],
                          row[f"qy{frame}"], row[f"qz{frame}"]])
            norm = float(np.linalg.norm(q))
            if abs(norm - 1.0) > _QUAT_NORM_TOL:
                raise ValidationError(
                    f"line {line}: quaternion {frame} norm {norm:.8f} "
                    f"deviates from 1 by more than {_QUAT_NORM_TOL:g}")
            rots.append(quat_to_rot(q))
        corrs.append(Correspondence(
            p1=np.array([row["x1"], row["y1"]]) / s,
            p2=np.array([row["x2"], row["y2"]]) / s,
            r1=rots[0], r2=rots[1]))
    return corrs, s
