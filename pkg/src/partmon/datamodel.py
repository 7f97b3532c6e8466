"""Class taxonomy, detection/annotation records, and COCO-style JSON ingestion.

The taxonomy is one person class plus eight body-part classes (left/right
variants in source data are merged onto the same part class through the
category map). Ground truth arrives as a COCO annotation file, detections as
a COCO results array; both are mapped onto the taxonomy via an explicit
category-map JSON so DensePose/COCO/VOC id spaces all work unchanged.

Loaded collections are immutable; share them freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, TaxonomyError, ValidationError
from .geometry import Box, area


class DetectionClass(Enum):
    """The nine detection classes: the person itself and its eight parts."""

    PERSON = "Person"
    TORSO = "Torso"
    HAND = "Hand"
    FOOT = "Foot"
    UPPER_LEG = "UpperLeg"
    LOWER_LEG = "LowerLeg"
    UPPER_ARM = "UpperArm"
    LOWER_ARM = "LowerArm"
    HEAD = "Head"

    @property
    def is_part(self) -> bool:
        return self is not DetectionClass.PERSON


PART_CLASSES = frozenset(c for c in DetectionClass if c.is_part)

_CLASS_BY_NAME = {c.value: c for c in DetectionClass}


@dataclass(frozen=True)
class Detection:
    """A scored, class-labeled box tied to an image.

    ``det_id`` is a stable per-stream index assigned at ingestion; reports use
    it to name detections without aliasing duplicates.
    """

    image_id: int
    category: DetectionClass
    box: Box
    score: float
    det_id: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"detection score must lie in [0, 1], got {self.score}")
        if self.box.w <= 0 or self.box.h <= 0:
            raise ValidationError(f"detection box must have positive width and height, got {self.box}")


@dataclass(frozen=True)
class GtAnnotation:
    """A ground-truth box for one image."""

    image_id: int
    category: DetectionClass
    box: Box
    ann_id: int | None = None

    def __post_init__(self):
        if self.box.w <= 0 or self.box.h <= 0:
            raise ValidationError(
                f"annotation box must have positive width and height "
                f"(annotation id {self.ann_id}): {self.box}"
            )


@dataclass(frozen=True)
class ImageInfo:
    id: int
    width: int | None = None
    height: int | None = None
    file_name: str | None = None


@dataclass(frozen=True)
class GroundTruth:
    """All annotations of a dataset plus its image index."""

    annotations: tuple[GtAnnotation, ...]
    images: tuple[ImageInfo, ...]

    @property
    def image_ids(self) -> tuple[int, ...]:
        return tuple(img.id for img in self.images)

    def annotations_by_image(self) -> dict[int, list[GtAnnotation]]:
        by_img: dict[int, list[GtAnnotation]] = {img.id: [] for img in self.images}
        for ann in self.annotations:
            by_img.setdefault(ann.image_id, []).append(ann)
        return by_img


@dataclass(frozen=True)
class Scene:
    """Everything the toolkit knows about one image.

    ``persons`` holds only person-class detections and ``parts`` only
    part-class detections; cross-class entries in either input stream are
    filtered out here, which lets a jointly trained detector's single results
    file be passed as both streams.
    """

    image_id: int
    persons: tuple[Detection, ...] = ()
    parts: tuple[Detection, ...] = ()
    gt: tuple[GtAnnotation, ...] = ()

    def gt_persons(self) -> tuple[GtAnnotation, ...]:
        return tuple(a for a in self.gt if a.category is DetectionClass.PERSON)


class FilterMode(Enum):
    """How the minimum-person-area rule treats an image.

    DROP_IF_ANY_BELOW drops images containing any person smaller than the
    cutoff and keeps person-free images. REQUIRE_ALL_ABOVE additionally
    requires at least one person to be present.
    """

    DROP_IF_ANY_BELOW = "drop_if_any_below"
    REQUIRE_ALL_ABOVE = "require_all_above"


def _read_json(path) -> object:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.msg, offset=exc.pos) from exc


def load_category_map(path) -> dict[int, DetectionClass]:
    """Load a JSON object mapping source category id -> taxonomy class name.

    Several source ids may map onto the same class (e.g. left/right limbs).
    """
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise ValidationError(f"category map must be a JSON object: {path}")
    mapping: dict[int, DetectionClass] = {}
    for key, name in raw.items():
        try:
            cat_id = int(key)
        except (TypeError, ValueError):
            raise ValidationError(f"category map key is not an integer id: {key!r}") from None
        cls = _CLASS_BY_NAME.get(name)
        if cls is None:
            raise TaxonomyError(
                f"category map value {name!r} for id {cat_id} is not one of "
                f"{sorted(_CLASS_BY_NAME)}"
            )
        mapping[cat_id] = cls
    return mapping


def _map_category(category_id, category_map: Mapping[int, DetectionClass]) -> DetectionClass:
    try:
        return category_map[int(category_id)]
    except (KeyError, TypeError, ValueError):
        raise TaxonomyError(f"unmapped category id: {category_id!r}") from None


def _parse_bbox(raw, context: str) -> Box:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise ValidationError(f"{context}: bbox must be [x, y, w, h], got {raw!r}")
    x, y, w, h = (float(v) for v in raw)
    if w < 0 or h < 0:
        raise ValidationError(f"{context}: negative bbox width/height {raw!r}")
    return Box(x, y, w, h)


def _parse_image_id(raw, context: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"{context}: image_id must be an integer, got {raw!r}") from None


def load_ground_truth(path, category_map: Mapping[int, DetectionClass]) -> GroundTruth:
    """Load a COCO-style annotation file.

    Expects objects ``images`` (each with an ``id``) and ``annotations`` (each
    with ``id``, ``image_id``, ``category_id``, ``bbox``). Category ids are
    mapped through ``category_map``; unknown ids raise TaxonomyError.
    """
    raw = _read_json(path)
    if not isinstance(raw, dict) or "images" not in raw or "annotations" not in raw:
        raise ValidationError(f"ground truth must contain 'images' and 'annotations': {path}")

    images = tuple(
        ImageInfo(
            id=_parse_image_id(img.get("id"), "image entry"),
            width=img.get("width"),
            height=img.get("height"),
            file_name=img.get("file_name"),
        )
        for img in raw["images"]
    )

    annotations = []
    for entry in raw["annotations"]:
        ann_id = entry.get("id")
        cls = _map_category(entry.get("category_id"), category_map)
        box = _parse_bbox(entry.get("bbox"), f"annotation id {ann_id}")
        annotations.append(
            GtAnnotation(
                image_id=_parse_image_id(entry.get("image_id"), f"annotation id {ann_id}"),
                category=cls,
                box=box,
                ann_id=ann_id,
            )
        )
    return GroundTruth(annotations=tuple(annotations), images=images)


def load_detections(path, category_map: Mapping[int, DetectionClass]) -> tuple[Detection, ...]:
    """Load a COCO-style results array of {image_id, category_id, bbox, score}.

    Detections get sequential ``det_id`` values in file order, so reloading a
    file reproduces identical records.
    """
    raw = _read_json(path)
    if not isinstance(raw, list):
        raise ValidationError(f"detection results must be a JSON array: {path}")
    detections = []
    for index, entry in enumerate(raw):
        cls = _map_category(entry.get("category_id"), category_map)
        box = _parse_bbox(entry.get("bbox"), f"detection #{index}")
        score = float(entry.get("score", -1.0))
        if not 0.0 <= score <= 1.0:
            raise ValidationError(f"detection #{index}: score {score} outside [0, 1]")
        detections.append(
            Detection(
                image_id=_parse_image_id(entry.get("image_id"), f"detection #{index}"),
                category=cls,
                box=box,
                score=score,
                det_id=index,
            )
        )
    return tuple(detections)


def dump_ground_truth(gt: GroundTruth, category_ids: Mapping[DetectionClass, int]) -> dict:
    """Serialize back to the COCO annotation layout ``load_ground_truth`` reads."""
    images = []
    for img in gt.images:
        entry: dict = {"id": img.id}
        if img.width is not None:
            entry["width"] = img.width
        if img.height is not None:
            entry["height"] = img.height
        if img.file_name is not None:
            entry["file_name"] = img.file_name
        images.append(entry)
    annotations = [
        {
            "id": ann.ann_id,
            "image_id": ann.image_id,
            "category_id": category_ids[ann.category],
            "bbox": [ann.box.x, ann.box.y, ann.box.w, ann.box.h],
        }
        for ann in gt.annotations
    ]
    categories = [
        {"id": cat_id, "name": cls.value} for cls, cat_id in sorted(category_ids.items(), key=lambda kv: kv[1])
    ]
    return {"images": images, "annotations": annotations, "categories": categories}


def dump_detections(dets: Iterable[Detection], category_ids: Mapping[DetectionClass, int]) -> list[dict]:
    """Serialize back to the COCO results layout ``load_detections`` reads."""
    return [
        {
            "image_id": d.image_id,
            "category_id": category_ids[d.category],
            "bbox": [d.box.x, d.box.y, d.box.w, d.box.h],
            "score": d.score,
        }
        for d in dets
    ]


def filter_images_by_min_person_area(
    gt: GroundTruth,
    min_area: float = 2247.0,
    mode: FilterMode = FilterMode.DROP_IF_ANY_BELOW,
) -> set[int]:
    """Return the image ids that survive the minimum-person-area rule.

    An image fails whenever any of its person annotations has box area
    strictly below ``min_area``. Under REQUIRE_ALL_ABOVE, images without any
    person annotation fail too.
    """
    if min_area < 0:
        raise ValidationError(f"min_area must be non-negative, got {min_area}")
    persons_by_image: dict[int, list[GtAnnotation]] = {img_id: [] for img_id in gt.image_ids}
    for ann in gt.annotations:
        if ann.category is DetectionClass.PERSON:
            persons_by_image.setdefault(ann.image_id, []).append(ann)

    retained = set()
    for img_id in gt.image_ids:
        persons = persons_by_image.get(img_id, [])
        if any(area(p.box) < min_area for p in persons):
            continue
        if mode is FilterMode.REQUIRE_ALL_ABOVE and not persons:
            continue
        retained.add(img_id)
    return retained


@dataclass(frozen=True)
class GroupingResult:
    scenes: tuple[Scene, ...]
    warnings: tuple[str, ...] = field(default=())


def group_into_scenes(
    gt: GroundTruth,
    person_dets: Sequence[Detection],
    part_dets: Sequence[Detection],
    image_ids: set[int] | None = None,
    strict: bool = False,
) -> GroupingResult:
    """Group annotations and detections into one Scene per ground-truth image.

    ``image_ids`` restricts the scene universe (e.g. after min-area
    filtering); detections on images unknown to the ground truth produce
    warning records, or a ValidationError in strict mode. Detections on known
    but unselected images are excluded silently.
    """
    universe = set(gt.image_ids) if image_ids is None else set(image_ids)
    known = set(gt.image_ids)

    anns_by_img: dict[int, list[GtAnnotation]] = {}
    for ann in gt.annotations:
        anns_by_img.setdefault(ann.image_id, []).append(ann)

    persons_by_img: dict[int, list[Detection]] = {}
    parts_by_img: dict[int, list[Detection]] = {}
    warnings = []
    for det in person_dets:
        if det.image_id not in known:
            warnings.append(f"person detection det_id={det.det_id} references unknown image id {det.image_id}")
            continue
        if det.category is DetectionClass.PERSON:
            persons_by_img.setdefault(det.image_id, []).append(det)
    for det in part_dets:
        if det.image_id not in known:
            warnings.append(f"part detection det_id={det.det_id} references unknown image id {det.image_id}")
            continue
        if det.category.is_part:
            parts_by_img.setdefault(det.image_id, []).append(det)

    if strict and warnings:
        raise ValidationError("; ".join(warnings))

    scenes = tuple(
        Scene(
            image_id=img_id,
            persons=tuple(persons_by_img.get(img_id, ())),
            parts=tuple(parts_by_img.get(img_id, ())),
            gt=tuple(anns_by_img.get(img_id, ())),
        )
        for img_id in sorted(universe)
    )
    return GroupingResult(scenes=scenes, warnings=tuple(warnings))


def group_detections_only(
    person_dets: Sequence[Detection],
    part_dets: Sequence[Detection],
) -> tuple[Scene, ...]:
    """Group detections without ground truth (runtime monitoring input)."""
    persons_by_img: dict[int, list[Detection]] = {}
    parts_by_img: dict[int, list[Detection]] = {}
    for det in person_dets:
        if det.category is DetectionClass.PERSON:
            persons_by_img.setdefault(det.image_id, []).append(det)
    for det in part_dets:
        if det.category.is_part:
            parts_by_img.setdefault(det.image_id, []).append(det)
    image_ids = sorted(set(persons_by_img) | set(parts_by_img))
    return tuple(
        Scene(
            image_id=img_id,
            persons=tuple(persons_by_img.get(img_id, ())),
            parts=tuple(parts_by_img.get(img_id, ())),
        )
        for img_id in image_ids
    )
