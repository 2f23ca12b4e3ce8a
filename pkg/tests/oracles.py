"""Independent brute-force oracles the fast implementations are checked against.

Everything here favors obviousness over speed: explicit pixel loops, python
sets, exhaustive scans. None of it shares code with the library paths it
verifies.
"""

from __future__ import annotations

import numpy as np


def flood_fill_components(mask: np.ndarray) -> np.ndarray:
    """8-connected components by explicit stack-based flood fill."""
    mask = np.asarray(mask) > 0
    h, w = mask.shape
    out = np.zeros((h, w), dtype=np.int32)
    next_id = 0
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or out[sy, sx]:
                continue
            next_id += 1
            stack = [(sy, sx)]
            out[sy, sx] = next_id
            while stack:
                y, x = stack.pop()
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not out[ny, nx]:
                            out[ny, nx] = next_id
                            stack.append((ny, nx))
    return out


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Remap positive labels by first appearance in raster order (permutation
    normal form, so two labelings can be compared directly)."""
    labels = np.asarray(labels)
    mapping: dict[int, int] = {}
    out = np.zeros_like(labels, dtype=np.int32)
    for y in range(labels.shape[0]):
        for x in range(labels.shape[1]):
            v = int(labels[y, x])
            if v > 0:
                if v not in mapping:
                    mapping[v] = len(mapping) + 1
                out[y, x] = mapping[v]
    return out


def nearest_point_scan(points: "list[tuple[int, int]]", shape: tuple[int, int]) -> np.ndarray:
    """Exhaustive min-over-points Euclidean distance."""
    h, w = shape
    out = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            out[y, x] = min(
                np.sqrt((x - px) ** 2 + (y - py) ** 2) for px, py in points
            )
    return out


def naive_sobel(raster: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Direct 3x3 stencil evaluation with replicate borders."""
    h, w = raster.shape
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for a in range(3):
                for b in range(3):
                    yy = min(max(y + a - 1, 0), h - 1)
                    xx = min(max(x + b - 1, 0), w - 1)
                    acc += kernel[a, b] * raster[yy, xx]
            out[y, x] = acc
    return out


def _pixel_sets(inst: np.ndarray) -> dict[int, set]:
    sets: dict[int, set] = {}
    for y in range(inst.shape[0]):
        for x in range(inst.shape[1]):
            v = int(inst[y, x])
            if v > 0:
                sets.setdefault(v, set()).add((y, x))
    return sets


def dice_oracle(pred: np.ndarray, gt: np.ndarray) -> float:
    p = {(y, x) for y, x in zip(*np.nonzero(np.asarray(pred) > 0))}
    g = {(y, x) for y, x in zip(*np.nonzero(np.asarray(gt) > 0))}
    if not p and not g:
        return 1.0
    return 2.0 * len(p & g) / (len(p) + len(g))


def aji_oracle(pred: np.ndarray, gt: np.ndarray) -> float:
    """Greedy-per-GT AJI computed entirely with python sets."""
    gt_sets = _pixel_sets(np.asarray(gt))
    pred_sets = _pixel_sets(np.asarray(pred))
    if not gt_sets and not pred_sets:
        return 1.0
    used: set[int] = set()
    c = 0
    u = 0
    for g in sorted(gt_sets):
        best_p, best_iou = 0, 0.0
        for p in sorted(pred_sets):
            if p in used:
                continue
            inter = len(gt_sets[g] & pred_sets[p])
            if inter == 0:
                continue
            iou = inter / len(gt_sets[g] | pred_sets[p])
            if iou > best_iou:
                best_iou, best_p = iou, p
        if best_p:
            c += len(gt_sets[g] & pred_sets[best_p])
            u += len(gt_sets[g] | pred_sets[best_p])
            used.add(best_p)
        else:
            u += len(gt_sets[g])
    for p, pixels in pred_sets.items():
        if p not in used:
            u += len(pixels)
    return c / u if u else 1.0


def panoptic_oracle(pred: np.ndarray, gt: np.ndarray) -> tuple[float, float, float]:
    """DQ/SQ/PQ by checking every (gt, pred) candidate pair's IoU."""
    gt_sets = _pixel_sets(np.asarray(gt))
    pred_sets = _pixel_sets(np.asarray(pred))
    pairs = []
    for g, gs in gt_sets.items():
        for p, ps in pred_sets.items():
            inter = len(gs & ps)
            if inter == 0:
                continue
            iou = inter / len(gs | ps)
            if iou > 0.5:
                pairs.append((g, p, iou))
    tp = len(pairs)
    fp = len(pred_sets) - len({p for _, p, _ in pairs})
    fn = len(gt_sets) - len({g for g, _, _ in pairs})
    denom = tp + 0.5 * fp + 0.5 * fn
    if denom == 0:
        return 1.0, 1.0, 1.0
    dq = tp / denom
    sq = sum(i for _, _, i in pairs) / tp if tp else 0.0
    return dq, sq, dq * sq


def detection_oracle(
    pred: "list[tuple[int, int]]", gt: "list[tuple[int, int]]", radius: float
) -> tuple[float, float, float]:
    """Greedy nearest-first matching by explicit pair enumeration."""
    pairs = []
    for gi, (gx, gy) in enumerate(gt):
        for pi, (px, py) in enumerate(pred):
            dist = np.sqrt((gx - px) ** 2 + (gy - py) ** 2)
            if dist <= radius:
                pairs.append((dist, gi, pi))
    pairs.sort()
    used_g: set[int] = set()
    used_p: set[int] = set()
    tp = 0
    for _, gi, pi in pairs:
        if gi in used_g or pi in used_p:
            continue
        used_g.add(gi)
        used_p.add(pi)
        tp += 1
    recall = tp / len(gt) if gt else 1.0
    precision = tp / len(pred) if pred else 1.0
    f1 = 2 * recall * precision / (recall + precision) if recall + precision else 0.0
    return recall, precision, f1


def random_instance_pair(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random (pred, gt) instance-map pair on a small canvas.

    Ground truth is up to 6 disjoint random discs; the prediction perturbs it
    (global shift, dropped/merged/split instances, a spurious blob) and then
    permutes ids, exercising every branch of the matching metrics.
    """
    h = int(rng.integers(12, 33))
    w = int(rng.integers(12, 33))
    gt = np.zeros((h, w), dtype=np.int32)
    k = int(rng.integers(0, 7))
    ys, xs = np.mgrid[0:h, 0:w]
    for inst_id in range(1, k + 1):
        cy, cx = rng.integers(2, h - 2), rng.integers(2, w - 2)
        r = int(rng.integers(2, 5))
        sel = ((ys - cy) ** 2 + (xs - cx) ** 2 <= r * r) & (gt == 0)
        gt[sel] = inst_id

    pred = gt.copy()
    if rng.random() < 0.7:  # global shift
        sy, sx = int(rng.integers(-2, 3)), int(rng.integers(-2, 3))
        pred = np.roll(np.roll(pred, sy, axis=0), sx, axis=1)
    ids = [int(i) for i in np.unique(pred) if i > 0]
    if ids and rng.random() < 0.5:  # drop one
        pred[pred == ids[int(rng.integers(len(ids)))]] = 0
    ids = [int(i) for i in np.unique(pred) if i > 0]
    if len(ids) >= 2 and rng.random() < 0.4:  # merge two
        a, b = rng.choice(ids, 2, replace=False)
        pred[pred == int(a)] = int(b)
    ids = [int(i) for i in np.unique(pred) if i > 0]
    if ids and rng.random() < 0.4:  # split one by column
        target = int(ids[int(rng.integers(len(ids)))])
        sel_ys, sel_xs = np.nonzero(pred == target)
        if sel_xs.size > 1:
            cut = int(np.median(sel_xs))
            pred[(pred == target) & (xs > cut)] = max(ids) + 1
    if rng.random() < 0.4:  # spurious blob
        cy, cx = rng.integers(1, h - 1), rng.integers(1, w - 1)
        sel = ((ys - cy) ** 2 + (xs - cx) ** 2 <= 4) & (pred == 0)
        pred[sel] = pred.max() + 1
    # random id permutation
    ids = [int(i) for i in np.unique(pred) if i > 0]
    if ids:
        perm = rng.permutation(len(ids)) + 1
        remap = np.zeros(max(ids) + 1, dtype=np.int32)
        for old, new in zip(ids, perm):
            remap[old] = new
        pred = remap[pred]
    return pred.astype(np.int32), gt
