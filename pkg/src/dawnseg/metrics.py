"""Segmentation and detection evaluation: DICE, AJI, DQ/SQ/PQ, Recall/Precision/F1.

All metrics are invariant to instance-id permutations and live in [0, 1].
Empty-vs-empty cases follow the convention that a perfect empty prediction is
not penalized (dice = 1, panoptic = 1, recall/precision = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import PointSet, ensure_same_shape


@dataclass(frozen=True)
class MatchResult:
    """Instance pairing bookkeeping behind AJI and DQ/SQ/PQ."""

    pairs: tuple[tuple[int, int, float], ...] = ()
    unmatched_gt: tuple[int, ...] = ()
    unmatched_pred: tuple[int, ...] = ()


@dataclass(frozen=True)
class MetricReport:
    """Per-image (or aggregated) metric row."""

    dice: float
    aji: float
    dq: float
    sq: float
    pq: float
    det_recall: float
    det_precision: float
    det_f1: float

    def to_dict(self) -> dict[str, float]:
        return {
            "DICE": self.dice,
            "AJI": self.aji,
            "DQ": self.dq,
            "SQ": self.sq,
            "PQ": self.pq,
            "Recall": self.det_recall,
            "Precision": self.det_precision,
            "F1": self.det_f1,
        }


def dice(pred: np.ndarray, gt: np.ndarray) -> float:
    """Pixel-overlap score ``2|P & G| / (|P| + |G|)``; 1.0 when both empty."""
    pred = np.asarray(pred) > 0
    gt = np.asarray(gt) > 0
    ensure_same_shape(pred, gt)
    denom = int(pred.sum()) + int(gt.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((pred & gt).sum()) / denom


def _intersection_table(
    pred: np.ndarray, gt: np.ndarray
) -> tuple[dict[int, int], dict[int, int], dict[tuple[int, int], int]]:
    """Areas per id and pairwise intersections between gt and pred instances."""
    pred = np.asarray(pred).astype(np.int64)
    gt = np.asarray(gt).astype(np.int64)
    ensure_same_shape(pred, gt)
    offset = int(pred.max()) + 1
    key = gt.ravel() * offset + pred.ravel()
    keys, counts = np.unique(key, return_counts=True)
    gt_areas: dict[int, int] = {}
    pred_areas: dict[int, int] = {}
    inter: dict[tuple[int, int], int] = {}
    for k, c in zip(keys.tolist(), counts.tolist()):
        g, p = divmod(k, offset)
        if g > 0:
            gt_areas[g] = gt_areas.get(g, 0) + c
        if p > 0:
            pred_areas[p] = pred_areas.get(p, 0) + c
        if g > 0 and p > 0:
            inter[(g, p)] = c
    return gt_areas, pred_areas, inter


def _aji_parts(pred: np.ndarray, gt: np.ndarray) -> tuple[int, int]:
    """Aggregated intersection and union behind AJI (see :func:`aji`)."""
    gt_areas, pred_areas, inter = _intersection_table(pred, gt)
    used: set[int] = set()
    c_total = 0
    u_total = 0
    for g in sorted(gt_areas):
        best_p = 0
        best_iou = 0.0
        for (gg, p), i in inter.items():
            if gg != g or p in used:
                continue
            iou = i / (gt_areas[g] + pred_areas[p] - i)
            if iou > best_iou or (iou == best_iou and best_p and p < best_p):
                best_iou = iou
                best_p = p
        if best_p and best_iou > 0.0:
            i = inter[(g, best_p)]
            c_total += i
            u_total += gt_areas[g] + pred_areas[best_p] - i
            used.add(best_p)
        else:
            u_total += gt_areas[g]
    for p, area in pred_areas.items():
        if p not in used:
            u_total += area
    return c_total, u_total


def aji(pred: np.ndarray, gt: np.ndarray) -> float:
    """Aggregated Jaccard index.

    Ground-truth instances are processed in ascending id order; each greedily
    takes the still-unused prediction maximizing IoU (ties broken by lower
    prediction id, zero-overlap candidates excluded). The score is the summed
    matched intersection over the summed matched union plus the areas of
    unused predictions and unmatched ground truth.
    """
    c_total, u_total = _aji_parts(pred, gt)
    return c_total / u_total if u_total else 1.0


def panoptic(
    pred: np.ndarray, gt: np.ndarray
) -> tuple[float, float, float, MatchResult]:
    """Detection/segmentation/panoptic quality under unique IoU > 0.5 matching.

    DQ = TP / (TP + FP/2 + FN/2), SQ = mean IoU over matched pairs (0 when
    none), PQ = DQ * SQ. Matching at IoU > 0.5 is automatically one-to-one.
    Both-empty inputs score (1, 1, 1).
    """
    gt_areas, pred_areas, inter = _intersection_table(pred, gt)
    pairs: list[tuple[int, int, float]] = []
    for (g, p), i in sorted(inter.items()):
        iou = i / (gt_areas[g] + pred_areas[p] - i)
        if iou > 0.5:
            pairs.append((g, p, iou))
    matched_gt = {g for g, _, _ in pairs}
    matched_pred = {p for _, p, _ in pairs}
    tp = len(pairs)
    fn = len(gt_areas) - len(matched_gt)
    fp = len(pred_areas) - len(matched_pred)
    result = MatchResult(
        tuple(pairs),
        tuple(sorted(set(gt_areas) - matched_gt)),
        tuple(sorted(set(pred_areas) - matched_pred)),
    )
    denom = tp + 0.5 * fp + 0.5 * fn
    if denom == 0:
        return 1.0, 1.0, 1.0, result
    dq = tp / denom
    sq = sum(iou for _, _, iou in pairs) / tp if tp else 0.0
    return dq, sq, dq * sq, result


def _match_points(
    pred: np.ndarray, gt: np.ndarray, radius: float
) -> list[tuple[int, int]]:
    """Greedy nearest-first point matching within ``radius`` (inclusive).

    Candidate pairs are sorted by (distance, gt index, pred index); each point
    is used at most once.
    """
    if len(pred) == 0 or len(gt) == 0:
        return []
    diff = gt[:, None, :].astype(np.float64) - pred[None, :, :].astype(np.float64)
    dist = np.sqrt((diff**2).sum(axis=2))
    gi, pi = np.nonzero(dist <= radius)
    order = sorted(zip(dist[gi, pi].tolist(), gi.tolist(), pi.tolist()))
    used_gt: set[int] = set()
    used_pred: set[int] = set()
    matches = []
    for _, g, p in order:
        if g in used_gt or p in used_pred:
            continue
        used_gt.add(g)
        used_pred.add(p)
        matches.append((g, p))
    return matches


def detection_scores(
    pred_centroids: PointSet, gt_points: PointSet, match_radius: float
) -> tuple[float, float, float]:
    """Recall, precision, and F1 of predicted centroids against point labels.

    Empty-set conventions: recall = 1 when there is no ground truth,
    precision = 1 when there are no predictions; F1 is the harmonic mean
    (0 when recall + precision = 0).
    """
    if match_radius <= 0:
        raise ValueError("match_radius must be positive")
    pred = pred_centroids.as_array()
    gt = gt_points.as_array()
    tp = len(_match_points(pred, gt, match_radius))
    recall = tp / len(gt) if len(gt) else 1.0
    precision = tp / len(pred) if len(pred) else 1.0
    f1 = (
        2.0 * recall * precision / (recall + precision)
        if recall + precision > 0
        else 0.0
    )
    return recall, precision, f1


def centroids(inst: np.ndarray) -> PointSet:
    """Per-instance pixel-mean coordinates, rounded half-up per axis."""
    inst = np.asarray(inst)
    h, w = inst.shape
    pts: list[tuple[int, int]] = []
    for inst_id in np.unique(inst):
        if inst_id <= 0:
            continue
        ys, xs = np.nonzero(inst == inst_id)
        cx = int(np.floor(xs.mean() + 0.5))
        cy = int(np.floor(ys.mean() + 0.5))
        pts.append((cx, cy))
    return PointSet(tuple(pts), w, h, allow_duplicates=True)


def report(
    pred_inst: np.ndarray,
    gt_inst: np.ndarray,
    gt_points: PointSet | None = None,
    match_radius: float = 11.0,
) -> MetricReport:
    """Full metric row for one image: overlap, instance, and detection scores.

    Detection scores compare predicted instance centroids against the point
    labels; when no points are given the ground-truth instance centroids
    stand in for them.
    """
    return report_from_parts(metric_parts(pred_inst, gt_inst, gt_points, match_radius))


def metric_parts(
    pred_inst: np.ndarray,
    gt_inst: np.ndarray,
    gt_points: PointSet | None = None,
    match_radius: float = 11.0,
) -> dict[str, float]:
    """Raw accumulators behind one image's metric row.

    Summing parts across images and calling :func:`report_from_parts` yields
    dataset-pooled metrics (as opposed to the mean of per-image rows).
    """
    pred_inst = np.asarray(pred_inst)
    gt_inst = np.asarray(gt_inst)
    ensure_same_shape(pred_inst, gt_inst)
    pred_fg = pred_inst > 0
    gt_fg = gt_inst > 0
    aji_c, aji_u = _aji_parts(pred_inst, gt_inst)
    _, _, _, match = panoptic(pred_inst, gt_inst)
    pts = gt_points if gt_points is not None else centroids(gt_inst)
    pred_pts = centroids(pred_inst)
    det_tp = len(_match_points(pred_pts.as_array(), pts.as_array(), match_radius))
    return {
        "dice_inter": float((pred_fg & gt_fg).sum()),
        "dice_sizes": float(pred_fg.sum() + gt_fg.sum()),
        "aji_c": float(aji_c),
        "aji_u": float(aji_u),
        "tp": float(len(match.pairs)),
        "fp": float(len(match.unmatched_pred)),
        "fn": float(len(match.unmatched_gt)),
        "sum_iou": float(sum(iou for _, _, iou in match.pairs)),
        "det_tp": float(det_tp),
        "n_gt_points": float(len(pts)),
        "n_pred_points": float(len(pred_pts)),
    }


def sum_parts(parts: "list[dict[str, float]]") -> dict[str, float]:
    total = dict.fromkeys(parts[0], 0.0) if parts else {}
    for p in parts:
        for k, v in p.items():
            total[k] += v
    return total


def report_from_parts(parts: dict[str, float]) -> MetricReport:
    """Metric row from (possibly summed) accumulators."""
    dice_val = (
        2.0 * parts["dice_inter"] / parts["dice_sizes"] if parts["dice_sizes"] else 1.0
    )
    aji_val = parts["aji_c"] / parts["aji_u"] if parts["aji_u"] else 1.0
    tp, fp, fn = parts["tp"], parts["fp"], parts["fn"]
    denom = tp + 0.5 * fp + 0.5 * fn
    if denom == 0:
        dq = sq = 1.0
    else:
        dq = tp / denom
        sq = parts["sum_iou"] / tp if tp else 0.0
    recall = parts["det_tp"] / parts["n_gt_points"] if parts["n_gt_points"] else 1.0
    precision = (
        parts["det_tp"] / parts["n_pred_points"] if parts["n_pred_points"] else 1.0
    )
    f1 = (
        2.0 * recall * precision / (recall + precision)
        if recall + precision > 0
        else 0.0
    )
    return MetricReport(
        dice=dice_val,
        aji=aji_val,
        dq=dq,
        sq=sq,
        pq=dq * sq,
        det_recall=recall,
        det_precision=precision,
        det_f1=f1,
    )
