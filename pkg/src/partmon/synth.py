"""Seeded synthetic corpora with known error labels.

Each scene places non-overlapping ground-truth persons on a horizontal
strip, derives part boxes at fixed anatomical fractions inside each person
(head at the top, torso in the middle, limbs flanking and below), then
simulates a detector: drops erase detections (missed persons/parts), ghosts
add detections in a reserved region disjoint from every person, and jitter
perturbs the surviving boxes. Because persons never overlap each other and
ghosts never overlap persons, the generator knows the exact TP/FP/FN labels
of its own output whenever jitter is zero.

The random source is Python's Mersenne Twister (random.Random), so a seed
reproduces the same corpus on any platform.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .datamodel import (
    Detection,
    DetectionClass,
    GroundTruth,
    GtAnnotation,
    ImageInfo,
    Scene,
    dump_detections,
    dump_ground_truth,
    group_into_scenes,
)
from .geometry import Box

# Canonical category ids for serialized corpora.
CATEGORY_IDS = {
    DetectionClass.PERSON: 1,
    DetectionClass.TORSO: 2,
    DetectionClass.HAND: 3,
    DetectionClass.FOOT: 4,
    DetectionClass.UPPER_LEG: 5,
    DetectionClass.LOWER_LEG: 6,
    DetectionClass.UPPER_ARM: 7,
    DetectionClass.LOWER_ARM: 8,
    DetectionClass.HEAD: 9,
}
CATEGORY_MAP = {str(cat_id): cls.value for cls, cat_id in CATEGORY_IDS.items()}

# (x, y, w, h) as fractions of the person box; every slot stays inside it.
_PART_LAYOUT = [
    (DetectionClass.HEAD, (0.30, 0.00, 0.40, 0.20)),
    (DetectionClass.TORSO, (0.25, 0.30, 0.50, 0.40)),
    (DetectionClass.UPPER_ARM, (0.00, 0.20, 0.15, 0.25)),
    (DetectionClass.LOWER_ARM, (0.85, 0.20, 0.15, 0.25)),
    (DetectionClass.HAND, (0.00, 0.50, 0.15, 0.12)),
    (DetectionClass.UPPER_LEG, (0.20, 0.72, 0.25, 0.14)),
    (DetectionClass.LOWER_LEG, (0.55, 0.72, 0.25, 0.14)),
    (DetectionClass.FOOT, (0.30, 0.88, 0.30, 0.12)),
]

_PERSON_CELL = 220
_GHOST_Y = 500
_CANVAS_H = 880


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_scenes: int = 20
    persons_per_scene: tuple[int, int] = (1, 4)
    parts_per_person: tuple[int, int] = (1, 6)
    drop_person_prob: float = 0.15
    drop_part_prob: float = 0.1
    ghost_person_prob: float = 0.1
    ghost_part_prob: float = 0.1
    jitter: float = 0.0

    def __post_init__(self):
        for name in ("drop_person_prob", "drop_part_prob", "ghost_person_prob", "ghost_part_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        for name in ("persons_per_scene", "parts_per_person"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must be a non-empty non-negative range, got ({lo}, {hi})")
        if self.n_scenes < 0:
            raise ValueError(f"n_scenes must be non-negative, got {self.n_scenes}")
        if self.jitter < 0:
            raise ValueError(f"jitter must be non-negative, got {self.jitter}")


@dataclass(frozen=True)
class SceneLabels:
    """The generator's own record of which detections simulate which errors."""

    image_id: int
    tp_person_det_ids: tuple[int, ...]
    fp_person_det_ids: tuple[int, ...]
    fn_person_ann_ids: tuple[int, ...]
    ghost_part_det_ids: tuple[int, ...]


@dataclass(frozen=True)
class Corpus:
    gt: GroundTruth
    person_dets: tuple[Detection, ...]
    part_dets: tuple[Detection, ...]
    labels: tuple[SceneLabels, ...]

    def scenes(self) -> tuple[Scene, ...]:
        return group_into_scenes(self.gt, self.person_dets, self.part_dets).scenes


def _part_box(person: Box, fractions: tuple[float, float, float, float]) -> Box:
    fx, fy, fw, fh = fractions
    x1 = person.x + math.floor(fx * person.w)
    y1 = person.y + math.floor(fy * person.h)
    x2 = person.x + math.floor((fx + fw) * person.w)
    y2 = person.y + math.floor((fy + fh) * person.h)
    return Box(x1, y1, max(x2 - x1, 1.0), max(y2 - y1, 1.0))


def _jittered(box: Box, jitter: float, rng: random.Random) -> Box:
    if jitter == 0:
        return box
    dx = rng.uniform(-jitter, jitter)
    dy = rng.uniform(-jitter, jitter)
    dw = rng.uniform(-jitter / 2, jitter / 2)
    dh = rng.uniform(-jitter / 2, jitter / 2)
    return Box(box.x + dx, box.y + dy, max(box.w + dw, 1.0), max(box.h + dh, 1.0))


def generate(config: SynthConfig) -> Corpus:
    """Build a corpus deterministically from the seed."""
    rng = random.Random(config.seed)
    images, annotations = [], []
    person_dets, part_dets, labels = [], [], []
    next_ann_id = 1
    next_person_det = 0
    next_part_det = 0

    for scene_idx in range(config.n_scenes):
        image_id = scene_idx + 1
        n_persons = rng.randint(*config.persons_per_scene)
        tp_ids, fp_ids, fn_ids, ghost_part_ids = [], [], [], []
        max_extent = 400.0

        for col in range(n_persons):
            w = float(rng.randint(80, 160))
            h = float(rng.randint(160, 320))
            x = float(col * _PERSON_CELL + rng.randint(0, 40))
            y = float(rng.randint(0, 40))
            person_box = Box(x, y, w, h)
            max_extent = max(max_extent, x + w)

            person_ann_id = next_ann_id
            next_ann_id += 1
            annotations.append(
                GtAnnotation(image_id, DetectionClass.PERSON, person_box, ann_id=person_ann_id)
            )

            n_parts = min(rng.randint(*config.parts_per_person), len(_PART_LAYOUT))
            slots = rng.sample(range(len(_PART_LAYOUT)), n_parts)
            part_boxes = []
            for slot in sorted(slots):
                cls, fractions = _PART_LAYOUT[slot]
                pbox = _part_box(person_box, fractions)
                annotations.append(GtAnnotation(image_id, cls, pbox, ann_id=next_ann_id))
                next_ann_id += 1
                part_boxes.append((cls, pbox))

            if rng.random() < config.drop_person_prob:
                fn_ids.append(person_ann_id)
            else:
                det = Detection(
                    image_id,
                    DetectionClass.PERSON,
                    _jittered(person_box, config.jitter, rng),
                    score=round(rng.uniform(0.5, 0.99), 4),
                    det_id=next_person_det,
                )
                person_dets.append(det)
                tp_ids.append(next_person_det)
                next_person_det += 1

            for cls, pbox in part_boxes:
                if rng.random() < config.drop_part_prob:
                    continue
                part_dets.append(
                    Detection(
                        image_id,
                        cls,
                        _jittered(pbox, config.jitter, rng),
                        score=round(rng.uniform(0.5, 0.99), 4),
                        det_id=next_part_det,
                    )
                )
                next_part_det += 1

            # Ghosts live on their own strip, disjoint from every person box.
            if rng.random() < config.ghost_person_prob:
                gw = float(rng.randint(70, 150))
                gh = float(rng.randint(120, 260))
                gx = float(col * _PERSON_CELL + rng.randint(0, 40))
                gy = float(_GHOST_Y + rng.randint(0, 30))
                person_dets.append(
                    Detection(
                        image_id,
                        DetectionClass.PERSON,
                        Box(gx, gy, gw, gh),
                        score=round(rng.uniform(0.05, 0.7), 4),
                        det_id=next_person_det,
                    )
                )
                fp_ids.append(next_person_det)
                next_person_det += 1
                max_extent = max(max_extent, gx + gw)

            if rng.random() < config.ghost_part_prob:
                cls = _PART_LAYOUT[rng.randrange(len(_PART_LAYOUT))][0]
                gw = float(rng.randint(20, 60))
                gh = float(rng.randint(20, 60))
                gx = float(col * _PERSON_CELL + rng.randint(0, 120))
                gy = float(_GHOST_Y + 280 + rng.randint(0, 20))
                part_dets.append(
                    Detection(
                        image_id,
                        cls,
                        Box(gx, gy, gw, gh),
                        score=round(rng.uniform(0.05, 0.7), 4),
                        det_id=next_part_det,
                    )
                )
                ghost_part_ids.append(next_part_det)
                next_part_det += 1
                max_extent = max(max_extent, gx + gw)

        images.append(
            ImageInfo(
                id=image_id,
                width=int(max_extent) + 40,
                height=_CANVAS_H + 40,
                file_name=f"synth_{image_id:06d}.jpg",
            )
        )
        labels.append(
            SceneLabels(
                image_id=image_id,
                tp_person_det_ids=tuple(tp_ids),
                fp_person_det_ids=tuple(fp_ids),
                fn_person_ann_ids=tuple(fn_ids),
                ghost_part_det_ids=tuple(ghost_part_ids),
            )
        )

    gt = GroundTruth(annotations=tuple(annotations), images=tuple(images))
    return Corpus(
        gt=gt,
        person_dets=tuple(person_dets),
        part_dets=tuple(part_dets),
        labels=tuple(labels),
    )


def write_corpus(corpus: Corpus, out_dir) -> dict[str, Path]:
    """Serialize a corpus to the COCO-style files the loaders ingest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "gt": out_dir / "gt.json",
        "persons": out_dir / "persons.json",
        "parts": out_dir / "parts.json",
        "category_map": out_dir / "category_map.json",
        "labels": out_dir / "labels.json",
    }
    _write_json(paths["gt"], dump_ground_truth(corpus.gt, CATEGORY_IDS))
    _write_json(paths["persons"], dump_detections(corpus.person_dets, CATEGORY_IDS))
    _write_json(paths["parts"], dump_detections(corpus.part_dets, CATEGORY_IDS))
    _write_json(paths["category_map"], CATEGORY_MAP)
    _write_json(
        paths["labels"],
        [
            {
                "image_id": lab.image_id,
                "tp_person_det_ids": list(lab.tp_person_det_ids),
                "fp_person_det_ids": list(lab.fp_person_det_ids),
                "fn_person_ann_ids": list(lab.fn_person_ann_ids),
                "ghost_part_det_ids": list(lab.ghost_part_det_ids),
            }
            for lab in corpus.labels
        ],
    )
    return paths


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
