"""Detection files to finite first-order models.

One detection file describes one image: bounding boxes with labels and
confidence scores.  Model extraction thresholds the scores, groups labels
that share a box id into one object, and derives the spatial relations
from box geometry.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .logic import BUILTIN_RELATIONS, Model

SCHEMA_VERSION = "1.0"


class SchemaError(Exception):
    """Detection file does not conform to the schema."""


@dataclass(frozen=True)
class Detection:
    label: str
    score: float
    bbox: tuple[float, float, float, float]  # x, y, w, h; y grows downward
    box_id: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise SchemaError(f"score {self.score} outside [0, 1]")
        if self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise SchemaError(f"bbox {self.bbox} has non-positive extent")


@dataclass(frozen=True)
class SceneDetections:
    image_id: str
    width: int
    height: int
    detections: tuple[Detection, ...]


@dataclass(frozen=True)
class ExtractionConfig:
    score_threshold: float = 0.5
    containment_ratio: float = 0.9
    center_margin_fraction: float = 0.0
    max_objects: int = 20

    def __post_init__(self):
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError("score_threshold must be in [0, 1]")
        if not 0.0 < self.containment_ratio <= 1.0:
            raise ValueError("containment_ratio must be in (0, 1]")
        if self.center_margin_fraction < 0:
            raise ValueError("center_margin_fraction must be >= 0")
        if self.max_objects < 1:
            raise ValueError("max_objects must be >= 1")


_TOP_LEVEL_FIELDS = {"schema_version", "image_id", "width", "height", "detections"}
_DETECTION_FIELDS = {"box_id", "label", "score", "bbox"}


def load_detections(contents: str) -> SceneDetections:
    """Parse and validate a detection file; unknown fields are rejected."""
    try:
        doc = json.loads(contents)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    unknown = set(doc) - _TOP_LEVEL_FIELDS
    if unknown:
        raise SchemaError(f"unknown fields: {sorted(unknown)}")
    missing = _TOP_LEVEL_FIELDS - set(doc)
    if missing:
        raise SchemaError(f"missing fields: {sorted(missing)}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"schema_version {doc['schema_version']!r}, expected {SCHEMA_VERSION!r}"
        )
    if not isinstance(doc["image_id"], str):
        raise SchemaError("image_id must be a string")
    for dim in ("width", "height"):
        if not isinstance(doc[dim], int) or isinstance(doc[dim], bool) or doc[dim] <= 0:
            raise SchemaError(f"{dim} must be a positive integer")
    if not isinstance(doc["detections"], list):
        raise SchemaError("detections must be a list")
    detections = []
    for i, entry in enumerate(doc["detections"]):
        if not isinstance(entry, dict):
            raise SchemaError(f"detections[{i}] must be an object")
        unknown = set(entry) - _DETECTION_FIELDS
        if unknown:
            raise SchemaError(f"detections[{i}]: unknown fields {sorted(unknown)}")
        for req in ("label", "score", "bbox"):
            if req not in entry:
                raise SchemaError(f"detections[{i}]: missing field {req!r}")
        if not isinstance(entry["label"], str) or not entry["label"]:
            raise SchemaError(f"detections[{i}]: label must be a nonempty string")
        if not isinstance(entry["score"], (int, float)) or isinstance(entry["score"], bool):
            raise SchemaError(f"detections[{i}]: score must be a number")
        bbox = entry["bbox"]
        if (
            not isinstance(bbox, list)
            or len(bbox) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)
        ):
            raise SchemaError(f"detections[{i}]: bbox must be [x, y, w, h]")
        box_id = entry.get("box_id")
        if box_id is not None and not isinstance(box_id, str):
            raise SchemaError(f"detections[{i}]: box_id must be a string")
        try:
            detections.append(
                Detection(entry["label"], float(entry["score"]), tuple(bbox), box_id)
            )
        except SchemaError as e:
            raise SchemaError(f"detections[{i}]: {e}") from None
    return SceneDetections(
        doc["image_id"], doc["width"], doc["height"], tuple(detections)
    )


# ---------------------------------------------------------------------------
# Geometry


def _center(bbox: tuple[float, float, float, float]) -> tuple[float, float]:
    x, y, w, h = bbox
    return x + w / 2.0, y + h / 2.0


def _area(bbox: tuple[float, float, float, float]) -> float:
    return bbox[2] * bbox[3]


def _intersection_area(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    w = min(ax + aw, bx + bw) - max(ax, bx)
    h = min(ay + ah, by + bh) - max(ay, by)
    return w * h if w > 0 and h > 0 else 0.0


def geometric_relations(
    boxes: Mapping[str, tuple[float, float, float, float]],
    image_size: tuple[int, int],
    cfg: ExtractionConfig,
) -> dict[str, frozenset[tuple[str, str]]]:
    """Spatial relation tuples over object ids.

    Left/right and above/below compare box centers with an optional margin;
    within requires most of the smaller box to lie inside the strictly
    larger one.  Image y grows downward, so above means smaller center y.
    """
    width, height = image_size
    margin_x = cfg.center_margin_fraction * width
    margin_y = cfg.center_margin_fraction * height
    to_left, above, within = set(), set(), set()
    for a, b in itertools.permutations(boxes, 2):
        acx, acy = _center(boxes[a])
        bcx, bcy = _center(boxes[b])
        if acx + margin_x < bcx:
            to_left.add((a, b))
        if acy + margin_y < bcy:
            above.add((a, b))
        ratio = _intersection_area(boxes[a], boxes[b]) / _area(boxes[a])
        if ratio >= cfg.containment_ratio and _area(boxes[a]) < _area(boxes[b]):
            within.add((a, b))
    return {
        "toLeft": frozenset(to_left),
        "toRight": frozenset((b, a) for a, b in to_left),
        "above": frozenset(above),
        "below": frozenset((b, a) for a, b in above),
        "within": frozenset(within),
    }


# ---------------------------------------------------------------------------
# Model construction


def build_model(
    scene: SceneDetections,
    vocab: Sequence[str],
    cfg: ExtractionConfig | None = None,
) -> Model:
    """One finite FO model per image.

    Objects are the boxes with at least one above-threshold label; labels
    sharing a box_id attach to one object.  The vocab is the puzzle-wide
    label universe and must cover every surviving label.
    """
    cfg = cfg or ExtractionConfig()
    survivors = [d for d in scene.detections if d.score >= cfg.score_threshold]
    # Group by box id; rows without an id are their own object.
    groups: dict[object, list[Detection]] = {}
    for i, det in enumerate(survivors):
        key = ("id", det.box_id) if det.box_id is not None else ("row", i)
        groups.setdefault(key, []).append(det)
    ordered = list(groups.values())
    truncated = False
    if len(ordered) > cfg.max_objects:
        ordered = sorted(
            ordered,
            key=lambda dets: (-max(d.score for d in dets), survivors.index(dets[0])),
        )[: cfg.max_objects]
        ordered.sort(key=lambda dets: survivors.index(dets[0]))
        truncated = True

    vocab_set = set(vocab)
    object_labels: dict[str, list[str]] = {}
    object_boxes: dict[str, tuple[float, float, float, float]] = {}
    for i, dets in enumerate(ordered):
        labels = sorted({d.label for d in dets})
        outside = [lab for lab in labels if lab not in vocab_set]
        if outside:
            raise ValueError(f"labels {outside} not in the puzzle vocabulary")
        oid = f"o{i}"
        object_labels[oid] = labels
        object_boxes[oid] = dets[0].bbox

    geo = geometric_relations(object_boxes, (scene.width, scene.height), cfg)
    objects = tuple(object_labels)
    label_of = frozenset((o, lab) for o, labs in object_labels.items() for lab in labs)
    same = frozenset(
        (a, b)
        for a in objects
        for b in objects
        if set(object_labels[a]) & set(object_labels[b])
    )
    count = frozenset(
        (lab, sum(1 for o in objects if lab in object_labels[o]))
        for lab in sorted(vocab_set)
    )
    relations: dict[str, frozenset] = {name: frozenset() for name in BUILTIN_RELATIONS}
    relations.update(geo)
    relations.update({"labelOf": label_of, "same": same, "count": count})
    model = Model(
        objects,
        tuple(sorted(vocab_set)),
        relations,
        image_id=scene.image_id,
        truncated=truncated,
    )
    model.validate()
    return model
