"""IoU costs, optimal assignment and the two-stage association cascade."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

# Cost carried by gated pairs; larger than any real 1 - IoU.
GATED_COST = 1e6


@dataclass
class Assignment:
    matches: list = field(default_factory=list)
    unmatched_tracks: list = field(default_factory=list)
    unmatched_dets: list = field(default_factory=list)
    total_cost: float = 0.0


def _as_xywh(box):
    if hasattr(box, "xywh"):
        return box.xywh()
    return np.asarray(box, dtype=float)


def iou(a, b):
    """IoU of two ``(x, y, w, h)`` boxes (or :class:`MappedBox` objects)."""
    return float(iou_matrix(_as_xywh(a)[None], _as_xywh(b)[None])[0, 0])


def pairwise_iou(a, b):
    """Elementwise IoU of broadcastable ``(..., 4)`` arrays of ``(x, y, w, h)`` boxes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    iw = np.minimum(a[..., 0] + a[..., 2], b[..., 0] + b[..., 2]) - np.maximum(a[..., 0], b[..., 0])
    ih = np.minimum(a[..., 1] + a[..., 3], b[..., 1] + b[..., 3]) - np.maximum(a[..., 1], b[..., 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    union = a[..., 2] * a[..., 3] + b[..., 2] * b[..., 3] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def iou_matrix(a, b):
    """Pairwise IoU between (N, 4) and (M, 4) arrays of ``(x, y, w, h)`` boxes."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    return pairwise_iou(a[:, None, :], b[None, :, :])


def hungarian(cost, gate=None):
    """Minimum-cost matching of size ``min(n, m)``.

    Pairs whose cost is ``>= gate`` are dropped from the result after solving.
    """
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape if cost.ndim == 2 else (0, 0)
    if n == 0 or m == 0:
        return Assignment([], list(range(n)), list(range(m)), 0.0)
    rows, cols = linear_sum_assignment(cost)
    matches = []
    total = 0.0
    for r, c in zip(rows.tolist(), cols.tolist()):
        if gate is not None and cost[r, c] >= gate:
            continue
        matches.append((r, c))
        total += float(cost[r, c])
    matched_r = {r for r, _ in matches}
    matched_c = {c for _, c in matches}
    return Assignment(
        matches,
        [r for r in range(n) if r not in matched_r],
        [c for c in range(m) if c not in matched_c],
        total,
    )


def gated_assignment(ious, iou_min=0.1):
    """Assign on cost ``1 - IoU`` from a precomputed IoU matrix; pairs below ``iou_min`` never match."""
    ious = np.asarray(ious, dtype=float)
    cost = np.where(ious >= iou_min, 1.0 - ious, GATED_COST)
    return hungarian(cost, gate=GATED_COST)


def gated_iou_assignment(track_boxes, det_boxes, iou_min=0.1):
    """Assign on cost ``1 - IoU``; pairs below ``iou_min`` can never match."""
    return gated_assignment(iou_matrix(track_boxes, det_boxes), iou_min)


def two_stage_from_iou(iou_high, iou_low, iou_min=0.1):
    """Two-stage cascade on precomputed (tracks x high) and (tracks x low) IoU matrices."""
    iou_high = np.asarray(iou_high, dtype=float)
    iou_low = np.asarray(iou_low, dtype=float)
    stage1 = gated_assignment(iou_high, iou_min)
    remaining = stage1.unmatched_tracks
    sub = gated_assignment(iou_low[remaining] if len(remaining) else np.zeros((0, iou_low.shape[1])), iou_min)
    stage2 = Assignment(
        [(remaining[r], c) for r, c in sub.matches],
        [remaining[r] for r in sub.unmatched_tracks],
        sub.unmatched_dets,
        sub.total_cost,
    )
    return stage1, stage2


def associate_two_stage(track_boxes, high_boxes, low_boxes, iou_min=0.1):
    """High-score detections first, then low-score ones for tracks left over.

    Returns ``(stage1, stage2)``. Indices in ``stage2.matches`` and
    ``stage2.unmatched_tracks`` refer to the original track list.
    """
    return two_stage_from_iou(iou_matrix(track_boxes, high_boxes), iou_matrix(track_boxes, low_boxes), iou_min)
