"""Split person detections and ground truth into TP/FP/FN sets at IoU tau.

The default matching is existential and many-to-many: a detection is a true
positive as soon as any ground-truth person exceeds the IoU threshold, and a
single ground-truth box may validate several detections. The greedy mode
(score-descending, highest-IoU-first, each ground-truth box consumed once)
exists for comparison with the usual benchmark convention and is off by
default.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .datamodel import Detection, GtAnnotation
from .geometry import iou


class MatchingMode(Enum):
    EXISTENTIAL = "existential"
    GREEDY = "greedy"


@dataclass(frozen=True)
class GtPartition:
    """Ground-truth-derived detection sets for one image at threshold tau.

    tp_gt and fp_gt partition the input person detections; fn_gt is the
    subset of ground-truth persons no detection matched.
    """

    tp_gt: tuple[Detection, ...]
    fp_gt: tuple[Detection, ...]
    fn_gt: tuple[GtAnnotation, ...]
    tau: float


def partition(
    persons: Sequence[Detection],
    gt_persons: Sequence[GtAnnotation],
    tau: float,
    matching: MatchingMode = MatchingMode.EXISTENTIAL,
) -> GtPartition:
    """Classify detections as TP/FP and ground truth as FN at IoU > tau.

    The inequality is strict on both sides: IoU exactly equal to tau neither
    validates a detection nor rescues a ground-truth box from FN.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if matching is MatchingMode.GREEDY:
        return _partition_greedy(persons, gt_persons, tau)

    tp, fp = [], []
    for det in persons:
        if any(iou(det.box, gt.box) > tau for gt in gt_persons):
            tp.append(det)
        else:
            fp.append(det)
    fn = [gt for gt in gt_persons if all(iou(det.box, gt.box) <= tau for det in persons)]
    return GtPartition(tp_gt=tuple(tp), fp_gt=tuple(fp), fn_gt=tuple(fn), tau=tau)


def _partition_greedy(persons, gt_persons, tau):
    # Score-descending, stable on input order for ties; each GT consumed once.
    order = sorted(range(len(persons)), key=lambda i: -persons[i].score)
    consumed = [False] * len(gt_persons)
    matched = [False] * len(persons)
    for i in order:
        det = persons[i]
        best_j, best_iou = -1, tau
        for j, gt in enumerate(gt_persons):
            if consumed[j]:
                continue
            v = iou(det.box, gt.box)
            if v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0:
            matched[i] = True
            consumed[best_j] = True
    tp = tuple(d for d, m in zip(persons, matched) if m)
    fp = tuple(d for d, m in zip(persons, matched) if not m)
    fn = tuple(g for g, c in zip(gt_persons, consumed) if not c)
    return GtPartition(tp_gt=tp, fp_gt=fp, fn_gt=fn, tau=tau)
