"""Brute-force reference implementations of every decision rule and metric.

Everything here is written as the most literal possible nested loops with
inline box arithmetic, on purpose: these functions share no computation with
the production modules, so agreement between the two on randomized corpora
is meaningful evidence. Do not "optimize" or fold them into the production
code; slowness is the point.
"""

from __future__ import annotations

import math
from typing import Sequence

from .datamodel import Detection, DetectionClass, GtAnnotation, Scene
from .evaluation import Balances, BinaryCounts, ObjectConfusion
from .monitor import AlertPair, MonitorVerdict
from .partition import GtPartition


def _inter(a, b) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def _iou(a, b) -> float:
    inter = _inter(a, b)
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0:
        return 0.0
    return inter / union


def oracle_per_image(
    persons: Sequence[Detection],
    parts: Sequence[Detection],
    alpha_fp: float,
    alpha_fn: float,
) -> AlertPair:
    alert_fp = False
    for person in persons:
        below_for_all = True
        for part in parts:
            if _inter(person.box, part.box) >= alpha_fp * (part.box.w * part.box.h):
                below_for_all = False
        if below_for_all:
            alert_fp = True
    alert_fn = False
    for part in parts:
        below_for_all = True
        for person in persons:
            if _inter(person.box, part.box) >= alpha_fn * (part.box.w * part.box.h):
                below_for_all = False
        if below_for_all:
            alert_fn = True
    return AlertPair(alert_fp=alert_fp, alert_fn=alert_fn)


def oracle_per_object(
    persons: Sequence[Detection],
    parts: Sequence[Detection],
    alpha_fp: float,
    alpha_fn: float,
) -> MonitorVerdict:
    tp_mon, fp_mon, fn_mon = [], [], []
    for person in persons:
        has_support = False
        for part in parts:
            if _inter(person.box, part.box) >= alpha_fp * (part.box.w * part.box.h):
                has_support = True
        if has_support:
            tp_mon.append(person)
        else:
            fp_mon.append(person)
    for part in parts:
        orphaned = True
        for person in persons:
            if _inter(person.box, part.box) >= alpha_fn * (part.box.w * part.box.h):
                orphaned = False
        if orphaned:
            fn_mon.append(part)
    return MonitorVerdict(
        tp_mon=tuple(tp_mon),
        fp_mon=tuple(fp_mon),
        fn_mon=tuple(fn_mon),
        alpha_fp=alpha_fp,
        alpha_fn=alpha_fn,
    )


def oracle_partition(
    persons: Sequence[Detection],
    gt_persons: Sequence[GtAnnotation],
    tau: float,
) -> GtPartition:
    tp, fp, fn = [], [], []
    for det in persons:
        validated = False
        for gt in gt_persons:
            if _iou(det.box, gt.box) > tau:
                validated = True
        if validated:
            tp.append(det)
        else:
            fp.append(det)
    for gt in gt_persons:
        missed = True
        for det in persons:
            if _iou(det.box, gt.box) > tau:
                missed = False
        if missed:
            fn.append(gt)
    return GtPartition(tp_gt=tuple(tp), fp_gt=tuple(fp), fn_gt=tuple(fn), tau=tau)


def oracle_metrics(
    scenes: Sequence[Scene],
    tau: float,
    alpha_fp: float,
    alpha_fn: float,
    ghost_all_classes: bool = False,
) -> tuple[BinaryCounts, BinaryCounts, ObjectConfusion, Balances]:
    """Recount every table-style output of a corpus from scratch."""
    fp_tp = fp_fp = fp_fn = fp_tn = 0
    fn_tp = fn_fp = fn_fn = fn_tn = 0
    c_tptp = c_tpfp = c_fptp = c_fpfp = c_fnfn = c_tnfn = 0

    for scene in scenes:
        gt_persons = [a for a in scene.gt if a.category is DetectionClass.PERSON]
        part = oracle_partition(scene.persons, gt_persons, tau)
        alert = oracle_per_image(scene.persons, scene.parts, alpha_fp, alpha_fn)
        verdict = oracle_per_object(scene.persons, scene.parts, alpha_fp, alpha_fn)

        has_fp = len(part.fp_gt) >= 1
        has_fn = len(part.fn_gt) >= 1
        if alert.alert_fp and has_fp:
            fp_tp += 1
        elif alert.alert_fp and not has_fp:
            fp_fp += 1
        elif not alert.alert_fp and has_fp:
            fp_fn += 1
        else:
            fp_tn += 1
        if alert.alert_fn and has_fn:
            fn_tp += 1
        elif alert.alert_fn and not has_fn:
            fn_fp += 1
        elif not alert.alert_fn and has_fn:
            fn_fn += 1
        else:
            fn_tn += 1

        for det in part.tp_gt:
            if any(det is v for v in verdict.tp_mon):
                c_tptp += 1
            if any(det is v for v in verdict.fp_mon):
                c_tpfp += 1
        for det in part.fp_gt:
            if any(det is v for v in verdict.tp_mon):
                c_fptp += 1
            if any(det is v for v in verdict.fp_mon):
                c_fpfp += 1
        for missed in part.fn_gt:
            found = False
            for orphan in verdict.fn_mon:
                if _inter(orphan.box, missed.box) >= alpha_fn * (orphan.box.w * orphan.box.h):
                    found = True
            if found:
                c_fnfn += 1
        anchors = scene.gt if ghost_all_classes else tuple(gt_persons)
        for orphan in verdict.fn_mon:
            ghost = True
            for ann in anchors:
                if _inter(ann.box, orphan.box) >= alpha_fn * (orphan.box.w * orphan.box.h):
                    ghost = False
            if ghost:
                c_tnfn += 1

    confusion = ObjectConfusion(
        tp_gt_tp_mon=c_tptp,
        tp_gt_fp_mon=c_tpfp,
        fp_gt_tp_mon=c_fptp,
        fp_gt_fp_mon=c_fpfp,
        fn_gt_fn_mon=c_fnfn,
        tn_gt_fn_mon=c_tnfn,
    )
    bal = Balances(
        fp_balance=confusion.fp_gt_fp_mon - confusion.tp_gt_fp_mon,
        fn_balance=confusion.fn_gt_fn_mon - confusion.tn_gt_fn_mon,
    )
    return (
        BinaryCounts(tp=fp_tp, fp=fp_fp, fn=fp_fn, tn=fp_tn),
        BinaryCounts(tp=fn_tp, fp=fn_fp, fn=fn_fn, tn=fn_tn),
        confusion,
        bal,
    )


def oracle_mcc(tp: int, fp: int, fn: int, tn: int) -> float:
    """Independently written MCC used to double-check sweep scoring."""
    d1, d2, d3, d4 = tp + fp, tp + fn, tn + fp, tn + fn
    if d1 == 0 or d2 == 0 or d3 == 0 or d4 == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(d1 * d2 * d3 * d4)
