"""Annotation JSON schemas.

Parsing:   {"points": [{"row": int, "col": int, "label": int}, ...]}
Intrinsic: {"comparisons": [{"p1": [x, y], "p2": [x, y],
                             "darker": "1"|"2"|"E", "weight": number}, ...]}
with p1/p2 given as image fractions in [0, 1] (x across, y down).
"""

from __future__ import annotations

import json

from ..errors import SchemaError
from ..supervision import ComparisonPair, PairLabel, PointLabel

_DARKER_TO_LABEL = {"1": PairLabel.POINT1_DARKER, "2": PairLabel.POINT2_DARKER,
                    "E": PairLabel.EQUAL}
_LABEL_TO_DARKER = {v: k for k, v in _DARKER_TO_LABEL.items()}


def _point(rec: dict, i: int) -> PointLabel:
    try:
        row, col, label = int(rec["row"]), int(rec["col"]), int(rec["label"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"points[{i}]: expected integer row/col/label ({exc})") from exc
    if row < 0 or col < 0:
        raise SchemaError(f"points[{i}]: negative pixel index")
    if label < 0:
        raise SchemaError(f"points[{i}]: negative class label")
    return PointLabel(row=row, col=col, label=label)


def _coord(value, i: int, key: str) -> tuple[float, float]:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise SchemaError(f"comparisons[{i}].{key}: expected [x, y]")
    x, y = float(value[0]), float(value[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise SchemaError(f"comparisons[{i}].{key}: coordinate outside [0, 1]")
    return x, y


def _pair(rec: dict, i: int) -> ComparisonPair:
    darker = rec.get("darker")
    if darker not in _DARKER_TO_LABEL:
        raise SchemaError(f"comparisons[{i}]: unknown darker value {darker!r}")
    weight = rec.get("weight", 1.0)
    if not isinstance(weight, (int, float)) or weight < 0 or weight != weight:
        raise SchemaError(f"comparisons[{i}]: weight must be a number >= 0")
    return ComparisonPair(p1=_coord(rec.get("p1"), i, "p1"),
                          p2=_coord(rec.get("p2"), i, "p2"),
                          label=_DARKER_TO_LABEL[darker], weight=float(weight))


def parse_annotations(obj: dict) -> list[PointLabel] | list[ComparisonPair]:
    if not isinstance(obj, dict):
        raise SchemaError("annotation document must be a JSON object")
    has_points = "points" in obj
    has_pairs = "comparisons" in obj
    if has_points == has_pairs:
        raise SchemaError("annotation document needs exactly one of 'points'/'comparisons'")
    if has_points:
        if not isinstance(obj["points"], list):
            raise SchemaError("'points' must be a list")
        return [_point(rec, i) for i, rec in enumerate(obj["points"])]
    if not isinstance(obj["comparisons"], list):
        raise SchemaError("'comparisons' must be a list")
    return [_pair(rec, i) for i, rec in enumerate(obj["comparisons"])]


def load_annotations(path: str) -> list[PointLabel] | list[ComparisonPair]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return parse_annotations(obj)


def annotations_to_obj(items: list[PointLabel] | list[ComparisonPair],
                       kind: str | None = None) -> dict:
    if kind is None:
        kind = "comparisons" if (items and isinstance(items[0], ComparisonPair)) else "points"
    if kind == "comparisons":
        return {"comparisons": [
            {"p1": list(p.p1), "p2": list(p.p2),
             "darker": _LABEL_TO_DARKER[p.label], "weight": p.weight}
            for p in items]}
    return {"points": [{"row": p.row, "col": p.col, "label": p.label} for p in items]}


def save_annotations(path: str, items: list[PointLabel] | list[ComparisonPair],
                     kind: str | None = None):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(annotations_to_obj(items, kind), f, indent=1)
        f.write("\n")
