"""Annotation file codec.

One shape per UTF-8 JSON document:

    {
      "shape_id": str,
      "points": [[x, y, z], ...],
      "normals": [[x, y, z], ...],          # optional
      "parts": [
        {"indices": [int, ...],             # sorted
         "motions": [{"type": "T"|"R"|"RT",
                      "anchor": [x, y, z],
                      "direction": [x, y, z]}, ...]},
        ...
      ]
    }

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly, so write(read(write(a))) == write(a) byte for byte.
"""
from __future__ import annotations

import json

import numpy as np

from mobkit.core import Line, MotionType, PointCloud
from mobkit.bench.generate import AnnotatedPart, Annotation


class AnnotationFormatError(ValueError):
    """Schema violation; the message names the offending field."""


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0"  # canonicalize negative zero
    return format(x, ".17g")


def _dump(obj, out: list):
    if isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(k))
            out.append(":")
            _dump(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _dump(v, out)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def write_annotation(ann: Annotation) -> bytes:
    doc = {
        "shape_id": ann.shape_id,
        "points": [[p[0], p[1], p[2]] for p in ann.cloud.points],
    }
    if ann.cloud.normals is not None:
        doc["normals"] = [[n[0], n[1], n[2]] for n in ann.cloud.normals]
    doc["parts"] = [
        {
            "indices": [int(i) for i in part.indices],
            "motions": [
                {
                    "type": motion_type.code,
                    "anchor": [line.point[0], line.point[1], line.point[2]],
                    "direction": [line.direction[0], line.direction[1],
                                  line.direction[2]],
                }
                for motion_type, line in part.motions
            ],
        }
        for part in ann.parts
    ]
    out: list[str] = []
    _dump(doc, out)
    return "".join(out).encode("utf-8")


def _expect(doc: dict, key: str, where: str):
    if key not in doc:
        raise AnnotationFormatError(f"missing field: {where}{key}")
    return doc[key]


def _vec(value, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise AnnotationFormatError(f"{where} must be a 3-vector")
    return arr


def read_annotation(data: bytes) -> Annotation:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise AnnotationFormatError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise AnnotationFormatError("document root must be an object")

    shape_id = _expect(doc, "shape_id", "")
    if not isinstance(shape_id, str):
        raise AnnotationFormatError("shape_id must be a string")
    points = np.asarray(_expect(doc, "points", ""), dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] < 1:
        raise AnnotationFormatError("points must be a non-empty list of [x,y,z]")
    normals = None
    if "normals" in doc and doc["normals"] is not None:
        normals = np.asarray(doc["normals"], dtype=np.float64)
        if normals.shape != points.shape:
            raise AnnotationFormatError("normals must match points in length")
        lengths = np.linalg.norm(normals, axis=1)
        bad = np.nonzero(np.abs(lengths - 1.0) > 1e-6)[0]
        if bad.size:
            raise AnnotationFormatError(f"normals[{bad[0]}] is not unit length")

    n = points.shape[0]
    parts_doc = _expect(doc, "parts", "")
    if not isinstance(parts_doc, list):
        raise AnnotationFormatError("parts must be a list")
    parts = []
    for pi, pdoc in enumerate(parts_doc):
        where = f"parts[{pi}]."
        if not isinstance(pdoc, dict):
            raise AnnotationFormatError(f"parts[{pi}] must be an object")
        indices = _expect(pdoc, "indices", where)
        if not isinstance(indices, list) or not indices:
            raise AnnotationFormatError(f"{where}indices must be a non-empty list")
        idx = np.asarray(indices, dtype=np.int64)
        if np.any(idx < 0) or np.any(idx >= n):
            bad = int(idx[(idx < 0) | (idx >= n)][0])
            raise AnnotationFormatError(
                f"{where}indices contains out-of-range index {bad} (N={n})")
        if np.any(np.diff(idx) <= 0):
            raise AnnotationFormatError(f"{where}indices must be sorted and unique")
        motions = []
        for mi, mdoc in enumerate(_expect(pdoc, "motions", where)):
            mwhere = f"{where}motions[{mi}]."
            code = _expect(mdoc, "type", mwhere)
            try:
                motion_type = MotionType.from_code(code)
            except ValueError as e:
                raise AnnotationFormatError(f"{mwhere}type: {e}") from e
            anchor = _vec(_expect(mdoc, "anchor", mwhere), f"{mwhere}anchor")
            direction = _vec(_expect(mdoc, "direction", mwhere), f"{mwhere}direction")
            if abs(np.linalg.norm(direction) - 1.0) > 1e-6:
                raise AnnotationFormatError(f"{mwhere}direction is not unit length")
            motions.append((motion_type, Line(anchor, direction)))
        parts.append(AnnotatedPart(idx, tuple(motions)))
    return Annotation(shape_id, PointCloud(points, normals), tuple(parts))
