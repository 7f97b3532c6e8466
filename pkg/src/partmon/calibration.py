"""Operating-point selection.

Per-class confidence thresholds come from an exhaustive sweep over the
observed score values, keeping the threshold with the best F1. The two
overlap parameters are swept independently over a regular grid in (0, 1) and
chosen by the Matthews correlation of the per-image alerts against the
ground-truth image labels; they are separable because the FP alert depends
only on alpha_fp and the FN alert only on alpha_fn.

Tie-breaking is deterministic and documented: equal F1 prefers the higher
threshold (fewer retained detections), equal MCC prefers the smaller alpha
(more sensitive monitor).
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .datamodel import Detection, DetectionClass, GtAnnotation, Scene
from .errors import CalibrationError, ValidationError
from .evaluation import mcc_from_counts
from .geometry import iou
from .monitor import per_image_rule
from .partition import GtPartition, MatchingMode, partition

_ONE_PLUS_ULP = math.nextafter(1.0, math.inf)


@dataclass(frozen=True)
class OperatingPoint:
    """Confidence thresholds plus the monitor's overlap/IoU parameters.

    A confidence threshold may exceed 1.0 by one float ulp: that is the
    discard-everything threshold selected when no score ever helps.
    """

    conf_thresholds: Mapping[DetectionClass, float]
    alpha_fp: float
    alpha_fn: float
    tau: float

    def __post_init__(self):
        for cls, value in self.conf_thresholds.items():
            if not 0.0 <= value <= _ONE_PLUS_ULP:
                raise ValidationError(f"confidence threshold for {cls.value} outside [0, 1]: {value}")
        for name, value in (("alpha_fp", self.alpha_fp), ("alpha_fn", self.alpha_fn), ("tau", self.tau)):
            if not 0.0 < value < 1.0:
                raise ValidationError(f"{name} must lie in (0, 1), got {value}")

    def to_json_dict(self) -> dict:
        return {
            "conf": {cls.value: value for cls, value in sorted(self.conf_thresholds.items(), key=lambda kv: kv[0].value)},
            "alpha_fp": self.alpha_fp,
            "alpha_fn": self.alpha_fn,
            "tau": self.tau,
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "OperatingPoint":
        try:
            conf = {DetectionClass(name): float(v) for name, v in raw["conf"].items()}
            return cls(
                conf_thresholds=conf,
                alpha_fp=float(raw["alpha_fp"]),
                alpha_fn=float(raw["alpha_fn"]),
                tau=float(raw["tau"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"invalid operating point: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "OperatingPoint":
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed operating point JSON in {path}: {exc}") from exc
        return cls.from_json_dict(raw)


def alpha_grid(step: float) -> list[float]:
    """The candidate overlap values {step, 2*step, ...} inside (0, 1)."""
    if not 0.0 < step < 1.0:
        raise CalibrationError(f"grid step must lie in (0, 1), got {step}")
    grid = []
    k = 1
    while True:
        value = round(k * step, 10)
        if value >= 1.0 - 1e-9:
            break
        grid.append(value)
        k += 1
    return grid


def _f1(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def select_confidence_threshold(
    dets: Sequence[Detection],
    gts: Sequence[GtAnnotation],
    tau: float,
    matching: MatchingMode = MatchingMode.EXISTENTIAL,
    strict: bool = False,
) -> float:
    """Pick the score cutoff with the best F1 for one class.

    Candidates are the distinct observed scores, zero, and one value just
    above the maximum score (the discard-everything option). Detections are
    retained when score >= threshold, or score > threshold with ``strict``.
    Ties go to the higher threshold. Raises CalibrationError when the class
    has no ground-truth instances (F1 undefined); with no detections at all
    the threshold is 1.0, since there is nothing to retain.
    """
    if not gts:
        raise CalibrationError("F1 undefined: no ground-truth instances for this class")
    if not dets:
        return 1.0

    max_score = max(d.score for d in dets)
    candidates = sorted({d.score for d in dets} | {0.0, math.nextafter(max_score, math.inf)})

    if matching is MatchingMode.EXISTENTIAL:
        evaluate = _make_existential_counter(dets, gts, tau, strict)
    else:
        evaluate = _make_rescan_counter(dets, gts, tau, matching, strict)

    best_t, best_f1 = candidates[0], -1.0
    for t in candidates:
        tp, fp, fn = evaluate(t)
        f1 = _f1(tp, fp, fn)
        if f1 >= best_f1:
            best_t, best_f1 = t, f1
    return best_t


def _make_existential_counter(dets, gts, tau, strict):
    # Under existential matching, whether a detection matches is independent
    # of the retained set, so one IoU pass suffices and each threshold is a
    # pair of bisections.
    gts_by_img: dict[int, list[GtAnnotation]] = {}
    for gt in gts:
        gts_by_img.setdefault(gt.image_id, []).append(gt)

    all_scores, matched_scores = [], []
    gt_best: dict[int, float] = {id(g): -1.0 for g in gts}
    for det in dets:
        all_scores.append(det.score)
        matched = False
        for gt in gts_by_img.get(det.image_id, ()):
            if iou(det.box, gt.box) > tau:
                matched = True
                key = id(gt)
                if det.score > gt_best[key]:
                    gt_best[key] = det.score
        if matched:
            matched_scores.append(det.score)
    all_scores.sort()
    matched_scores.sort()
    best_scores = sorted(gt_best.values())
    cut = bisect_right if strict else bisect_left

    def evaluate(t: float) -> tuple[int, int, int]:
        kept = len(all_scores) - cut(all_scores, t)
        tp = len(matched_scores) - cut(matched_scores, t)
        fn = cut(best_scores, t)
        return tp, kept - tp, fn

    return evaluate


def _make_rescan_counter(dets, gts, tau, matching, strict):
    dets_by_img: dict[int, list[Detection]] = {}
    for det in dets:
        dets_by_img.setdefault(det.image_id, []).append(det)
    gts_by_img: dict[int, list[GtAnnotation]] = {}
    for gt in gts:
        gts_by_img.setdefault(gt.image_id, []).append(gt)
    image_ids = sorted(set(dets_by_img) | set(gts_by_img))

    def evaluate(t: float) -> tuple[int, int, int]:
        tp = fp = fn = 0
        for img in image_ids:
            kept = [d for d in dets_by_img.get(img, ()) if (d.score > t if strict else d.score >= t)]
            part = partition(kept, gts_by_img.get(img, ()), tau, matching)
            tp += len(part.tp_gt)
            fp += len(part.fp_gt)
            fn += len(part.fn_gt)
        return tp, fp, fn

    return evaluate


def select_alphas(
    scenes: Sequence[Scene],
    partitions: Sequence[GtPartition],
    grid_step: float = 0.05,
    threads: int = 1,
) -> tuple[float, float]:
    """Sweep the overlap grid and return (alpha_fp, alpha_fn) with maximal MCC.

    Each alert type is scored independently against its own image labels
    (|fp_gt| >= 1 or |fn_gt| >= 1 per scene). Ties prefer the smaller alpha.
    """
    if not scenes:
        raise CalibrationError("cannot select alphas from an empty scene list")
    if len(partitions) != len(scenes):
        raise ValidationError(
            f"mismatched inputs: {len(scenes)} scenes, {len(partitions)} partitions"
        )
    labels_fp = [len(p.fp_gt) >= 1 for p in partitions]
    labels_fn = [len(p.fn_gt) >= 1 for p in partitions]
    grid = alpha_grid(grid_step)

    def score_point(alpha: float) -> tuple[float, float]:
        fp_cells = [0, 0, 0, 0]  # tp, fp, fn, tn
        fn_cells = [0, 0, 0, 0]
        for scene, lab_fp, lab_fn in zip(scenes, labels_fp, labels_fn):
            alert = per_image_rule(scene.persons, scene.parts, alpha, alpha)
            _bump(fp_cells, lab_fp, alert.alert_fp)
            _bump(fn_cells, lab_fn, alert.alert_fn)
        return mcc_from_counts(*fp_cells), mcc_from_counts(*fn_cells)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scored = list(pool.map(score_point, grid))
    else:
        scored = [score_point(alpha) for alpha in grid]

    best_fp = best_fn = grid[0]
    best_fp_mcc, best_fn_mcc = scored[0]
    for alpha, (mcc_fp, mcc_fn) in zip(grid[1:], scored[1:]):
        if mcc_fp > best_fp_mcc:
            best_fp, best_fp_mcc = alpha, mcc_fp
        if mcc_fn > best_fn_mcc:
            best_fn, best_fn_mcc = alpha, mcc_fn
    return best_fp, best_fn


def _bump(cells: list, label: bool, predicted: bool) -> None:
    if predicted and label:
        cells[0] += 1
    elif predicted and not label:
        cells[1] += 1
    elif not predicted and label:
        cells[2] += 1
    else:
        cells[3] += 1


def apply_confidence_thresholds(
    scenes: Sequence[Scene],
    conf: Mapping[DetectionClass, float],
    strict: bool = False,
) -> list[Scene]:
    """Drop detections below their class threshold; scenes keep their ground truth."""

    def keep(det: Detection) -> bool:
        if det.category not in conf:
            raise ValidationError(f"no confidence threshold for class {det.category.value}")
        threshold = conf[det.category]
        return det.score > threshold if strict else det.score >= threshold

    return [
        Scene(
            image_id=s.image_id,
            persons=tuple(d for d in s.persons if keep(d)),
            parts=tuple(d for d in s.parts if keep(d)),
            gt=s.gt,
        )
        for s in scenes
    ]


def build_operating_point(
    scenes: Sequence[Scene],
    tau: float = 0.5,
    grid_step: float = 0.05,
    matching: MatchingMode = MatchingMode.EXISTENTIAL,
    strict_conf: bool = False,
    threads: int = 1,
) -> OperatingPoint:
    """Full calibration: per-class thresholds by max F1, then alphas by max MCC."""
    dets_by_class: dict[DetectionClass, list[Detection]] = {}
    for scene in scenes:
        for det in list(scene.persons) + list(scene.parts):
            dets_by_class.setdefault(det.category, []).append(det)
    if not dets_by_class:
        raise CalibrationError("no detections to calibrate on")

    gts_by_class: dict[DetectionClass, list[GtAnnotation]] = {}
    for scene in scenes:
        for ann in scene.gt:
            gts_by_class.setdefault(ann.category, []).append(ann)

    conf = {}
    for cls in sorted(dets_by_class, key=lambda c: c.value):
        gts = gts_by_class.get(cls, [])
        if not gts:
            raise CalibrationError(
                f"F1 undefined for class {cls.value}: no ground-truth instances"
            )
        conf[cls] = select_confidence_threshold(
            dets_by_class[cls], gts, tau, matching=matching, strict=strict_conf
        )

    filtered = apply_confidence_thresholds(scenes, conf, strict=strict_conf)
    partitions = [partition(s.persons, s.gt_persons(), tau, matching) for s in filtered]
    alpha_fp, alpha_fn = select_alphas(filtered, partitions, grid_step, threads=threads)
    return OperatingPoint(conf_thresholds=conf, alpha_fp=alpha_fp, alpha_fn=alpha_fn, tau=tau)
