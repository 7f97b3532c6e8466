"""Offline evaluation: per-image binary metrics and per-object confusion.

Per-image mode scores the monitor as two binary classifiers (one per alert
type) over the evaluated images. Per-object mode intersects the monitor's
detection sets with the ground-truth-derived sets and reduces the result to
six confusion cells plus the two usefulness balances.

Detection identity across the gt- and monitor-derived sets is object
identity of the shared input records, never box equality, so duplicate boxes
cannot alias each other.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Sequence

from .datamodel import Scene
from .errors import ValidationError
from .geometry import area, intersection_area
from .monitor import AlertPair, MonitorVerdict
from .partition import GtPartition


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ObjectConfusion:
    """The six per-object cells.

    Cell names read <ground-truth set>_<monitor set>: e.g. tp_gt_fp_mon is a
    correct detection the monitor wrongly discarded, tn_gt_fn_mon a ghost
    body part matching no ground truth.
    """

    tp_gt_tp_mon: int
    tp_gt_fp_mon: int
    fp_gt_tp_mon: int
    fp_gt_fp_mon: int
    fn_gt_fn_mon: int
    tn_gt_fn_mon: int


@dataclass(frozen=True)
class Balances:
    """Detected errors minus harm done; positive means the monitor helps."""

    fp_balance: int
    fn_balance: int


def mcc_from_counts(tp: int, fp: int, fn: int, tn: int) -> float:
    """Matthews correlation coefficient; 0 when any denominator factor is 0."""
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(den)


def binary_metrics(c: BinaryCounts) -> tuple[float, float, float]:
    """(precision, recall, mcc) with the degenerate-denominator-is-0 convention."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    return precision, recall, mcc_from_counts(c.tp, c.fp, c.fn, c.tn)


def per_image_counts(
    scenes: Sequence[Scene],
    partitions: Sequence[GtPartition],
    alerts: Sequence[AlertPair],
) -> tuple[BinaryCounts, BinaryCounts]:
    """Tally both alert types against the ground-truth image labels.

    An image is a positive for the FP problem iff its partition contains at
    least one ghost detection (|fp_gt| >= 1), and for the FN problem iff it
    contains at least one missed person (|fn_gt| >= 1).
    """
    if not (len(scenes) == len(partitions) == len(alerts)):
        raise ValidationError(
            f"mismatched inputs: {len(scenes)} scenes, {len(partitions)} partitions, "
            f"{len(alerts)} alerts"
        )
    fp_cells = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    fn_cells = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for part, alert in zip(partitions, alerts):
        _tally(fp_cells, label=len(part.fp_gt) >= 1, predicted=alert.alert_fp)
        _tally(fn_cells, label=len(part.fn_gt) >= 1, predicted=alert.alert_fn)
    return BinaryCounts(**fp_cells), BinaryCounts(**fn_cells)


def _tally(cells: dict, label: bool, predicted: bool) -> None:
    if predicted and label:
        cells["tp"] += 1
    elif predicted and not label:
        cells["fp"] += 1
    elif not predicted and label:
        cells["fn"] += 1
    else:
        cells["tn"] += 1


def object_confusion(
    scenes: Sequence[Scene],
    partitions: Sequence[GtPartition],
    verdicts: Sequence[MonitorVerdict],
    alpha_fn: float,
    ghost_all_classes: bool = False,
) -> ObjectConfusion:
    """Cross the monitor's sets with the ground-truth-derived sets.

    The four detection cells intersect by object identity. A missed person
    counts as detected iff some orphan part overlaps it by at least
    alpha_fn times the part's area; an orphan part is a ghost iff it fails
    that same test against every ground-truth annotation. By default only
    person annotations anchor the ghost test; ``ghost_all_classes`` widens it
    to the full annotation set (e.g. when part ground truth exists).
    """
    if not (len(scenes) == len(partitions) == len(verdicts)):
        raise ValidationError(
            f"mismatched inputs: {len(scenes)} scenes, {len(partitions)} partitions, "
            f"{len(verdicts)} verdicts"
        )
    cells = dict.fromkeys(
        ("tp_gt_tp_mon", "tp_gt_fp_mon", "fp_gt_tp_mon", "fp_gt_fp_mon",
         "fn_gt_fn_mon", "tn_gt_fn_mon"),
        0,
    )
    for scene, part, verdict in zip(scenes, partitions, verdicts):
        n_gt = len(part.tp_gt) + len(part.fp_gt)
        n_mon = len(verdict.tp_mon) + len(verdict.fp_mon)
        if n_gt != n_mon:
            raise ValidationError(
                f"image {scene.image_id}: partition covers {n_gt} person detections "
                f"but verdict covers {n_mon}; inputs must share the same detections"
            )
        tp_gt = {id(d) for d in part.tp_gt}
        fp_gt = {id(d) for d in part.fp_gt}
        tp_mon = {id(d) for d in verdict.tp_mon}
        fp_mon = {id(d) for d in verdict.fp_mon}
        cells["tp_gt_tp_mon"] += len(tp_gt & tp_mon)
        cells["tp_gt_fp_mon"] += len(tp_gt & fp_mon)
        cells["fp_gt_tp_mon"] += len(fp_gt & tp_mon)
        cells["fp_gt_fp_mon"] += len(fp_gt & fp_mon)

        for missed in part.fn_gt:
            detected = any(
                intersection_area(p.box, missed.box) >= alpha_fn * area(p.box)
                for p in verdict.fn_mon
            )
            if detected:
                cells["fn_gt_fn_mon"] += 1

        anchors = scene.gt if ghost_all_classes else scene.gt_persons()
        for orphan in verdict.fn_mon:
            a_part = area(orphan.box)
            is_ghost = all(
                intersection_area(ann.box, orphan.box) < alpha_fn * a_part
                for ann in anchors
            )
            if is_ghost:
                cells["tn_gt_fn_mon"] += 1
    return ObjectConfusion(**cells)


def balances(c: ObjectConfusion) -> Balances:
    """Detected ghosts minus discarded good detections; detected misses minus ghost parts."""
    return Balances(
        fp_balance=c.fp_gt_fp_mon - c.tp_gt_fp_mon,
        fn_balance=c.fn_gt_fn_mon - c.tn_gt_fn_mon,
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

PER_IMAGE_CSV_HEADER = ["system", "alert", "tp", "fp", "fn", "tn", "precision", "recall", "mcc"]
PER_OBJECT_CSV_HEADER = [
    "system",
    "tp_gt_tp_mon", "tp_gt_fp_mon", "fp_gt_tp_mon", "fp_gt_fp_mon",
    "fn_gt_fn_mon", "tn_gt_fn_mon",
    "fp_balance", "fn_balance",
]


@dataclass(frozen=True)
class PerImageResult:
    system: str
    total_images: int
    fp_alert: BinaryCounts
    fn_alert: BinaryCounts


@dataclass(frozen=True)
class PerObjectResult:
    system: str
    confusion: ObjectConfusion
    balances: Balances


def round_ratio(value: float) -> float:
    """Round to 4 decimal places, half-even (report formatting convention)."""
    return float(Decimal(repr(value)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def _ratio_str(value: float) -> str:
    return str(Decimal(repr(value)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def _alert_block(counts: BinaryCounts) -> dict:
    precision, recall, mcc = binary_metrics(counts)
    return {
        "tp": counts.tp,
        "fp": counts.fp,
        "fn": counts.fn,
        "tn": counts.tn,
        "precision": round_ratio(precision),
        "recall": round_ratio(recall),
        "mcc": round_ratio(mcc),
    }


def per_image_report(result: PerImageResult, manifest: dict | None = None) -> dict:
    report = {
        "system": result.system,
        "total_images": result.total_images,
        "fp_alert": _alert_block(result.fp_alert),
        "fn_alert": _alert_block(result.fn_alert),
    }
    if manifest is not None:
        report["manifest"] = manifest
    return report


def per_object_report(result: PerObjectResult, manifest: dict | None = None) -> dict:
    report = {
        "system": result.system,
        "confusion": asdict(result.confusion),
        "balances": asdict(result.balances),
    }
    if manifest is not None:
        report["manifest"] = manifest
    return report


def render_report(result: PerImageResult | PerObjectResult, fmt: str, manifest: dict | None = None) -> str:
    """Render a result to deterministic JSON or CSV text."""
    if fmt == "json":
        if isinstance(result, PerImageResult):
            report = per_image_report(result, manifest)
        else:
            report = per_object_report(result, manifest)
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if isinstance(result, PerImageResult):
            writer.writerow(PER_IMAGE_CSV_HEADER)
            for name, counts in (("fp", result.fp_alert), ("fn", result.fn_alert)):
                precision, recall, mcc = binary_metrics(counts)
                writer.writerow(
                    [result.system, name, counts.tp, counts.fp, counts.fn, counts.tn,
                     _ratio_str(precision), _ratio_str(recall), _ratio_str(mcc)]
                )
        else:
            writer.writerow(PER_OBJECT_CSV_HEADER)
            c, b = result.confusion, result.balances
            writer.writerow(
                [result.system,
                 c.tp_gt_tp_mon, c.tp_gt_fp_mon, c.fp_gt_tp_mon, c.fp_gt_fp_mon,
                 c.fn_gt_fn_mon, c.tn_gt_fn_mon,
                 b.fp_balance, b.fn_balance]
            )
        return buf.getvalue()
    raise ValidationError(f"unknown report format: {fmt!r} (expected 'json' or 'csv')")


def emit_report(
    result: PerImageResult | PerObjectResult,
    fmt: str,
    path,
    manifest: dict | None = None,
) -> None:
    """Write a report file; identical inputs produce byte-identical output."""
    text = render_report(result, fmt, manifest)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write report to {path}: {exc}") from exc
