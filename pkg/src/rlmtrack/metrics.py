"""CLEAR-MOT accuracy, identity switches and IDF1."""

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .assoc import hungarian, iou_matrix
from .errors import RLMError


class UndefinedMetricError(RLMError, ZeroDivisionError):
    """MOTA is undefined without ground-truth objects."""


MATCH, SWITCH, FP, MISS = "MATCH", "SWITCH", "FP", "MISS"


@dataclass(frozen=True)
class Event:
    frame: int
    kind: str
    gt_id: int = None
    hyp_id: int = None
    iou: float = float("nan")


@dataclass
class EvalReport:
    mota: float
    idf1: float
    id_switches: int
    fp: int
    fn: int
    gt_count: int
    matches: int
    idtp: int = 0
    events: list = field(default_factory=list, repr=False)

    def as_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "events"}
        d["mota"] = None if np.isnan(self.mota) else float(self.mota)
        return d

    def table(self):
        keys = ["mota", "idf1", "id_switches", "fp", "fn", "gt_count", "matches"]
        head = " ".join(f"{k:>11}" for k in keys)
        vals = []
        for k in keys:
            v = getattr(self, k)
            vals.append(f"{v:>11.4f}" if isinstance(v, float) else f"{v:>11d}")
        return head + "\n" + " ".join(vals)


def _group(rows):
    out = defaultdict(list)
    for r in rows:
        out[r.frame].append(r)
    return out


def match_frames(gt_rows, hyp_rows, iou_thresh=0.5):
    """Per-frame CLEAR correspondences.

    Pairs matched in the previous frame are kept while their IoU stays at or
    above ``iou_thresh``; the rest are matched optimally on ``1 - IoU``.

    Returns:
        List of :class:`Event` in frame order.
    """
    gt_by, hyp_by = _group(gt_rows), _group(hyp_rows)
    events = []
    prev = {}  # gt id -> hyp id, matched in the previous frame
    last = {}  # gt id -> hyp id of its most recent match
    prev_frame = None
    for frame in sorted(set(gt_by) | set(hyp_by)):
        if prev_frame is None or frame != prev_frame + 1:
            prev = {}
        gts, hyps = gt_by.get(frame, []), hyp_by.get(frame, [])
        ious = iou_matrix([g.tlwh for g in gts], [h.tlwh for h in hyps])
        gi = {g.id: i for i, g in enumerate(gts)}
        hi = {h.id: j for j, h in enumerate(hyps)}
        pairs = []
        for g_id, h_id in prev.items():
            if g_id in gi and h_id in hi and ious[gi[g_id], hi[h_id]] >= iou_thresh:
                pairs.append((gi[g_id], hi[h_id]))
        used_g = {i for i, _ in pairs}
        used_h = {j for _, j in pairs}
        free_g = [i for i in range(len(gts)) if i not in used_g]
        free_h = [j for j in range(len(hyps)) if j not in used_h]
        if free_g and free_h:
            sub = ious[np.ix_(free_g, free_h)]
            cost = np.where(sub >= iou_thresh, 1.0 - sub, 1e6)
            res = hungarian(cost, gate=1e6)
            pairs += [(free_g[r], free_h[c]) for r, c in res.matches]
        cur = {}
        for i, j in sorted(pairs):
            g_id, h_id = gts[i].id, hyps[j].id
            kind = SWITCH if g_id in last and last[g_id] != h_id else MATCH
            events.append(Event(frame, kind, g_id, h_id, float(ious[i, j])))
            cur[g_id] = h_id
            last[g_id] = h_id
        matched_g = {i for i, _ in pairs}
        matched_h = {j for _, j in pairs}
        events += [Event(frame, MISS, gt_id=g.id) for i, g in enumerate(gts) if i not in matched_g]
        events += [Event(frame, FP, hyp_id=h.id) for j, h in enumerate(hyps) if j not in matched_h]
        prev, prev_frame = cur, frame
    return events


def _count(events, *kinds):
    return sum(1 for e in events if e.kind in kinds)


def id_switches(events):
    return _count(events, SWITCH)


def mota(events):
    gt_count = _count(events, MATCH, SWITCH, MISS)
    if gt_count == 0:
        raise UndefinedMetricError("no ground-truth objects")
    return 1.0 - (_count(events, FP) + _count(events, MISS) + _count(events, SWITCH)) / gt_count


def idf1_counts(gt_rows, hyp_rows, iou_thresh=0.5):
    """Return ``(idtp, idfp, idfn)`` under the best one-to-one id correspondence."""
    gt_ids = sorted({r.id for r in gt_rows})
    hyp_ids = sorted({r.id for r in hyp_rows})
    if not gt_ids or not hyp_ids:
        return 0, len(hyp_rows), len(gt_rows)
    gpos = {g: i for i, g in enumerate(gt_ids)}
    hpos = {h: j for j, h in enumerate(hyp_ids)}
    overlap = np.zeros((len(gt_ids), len(hyp_ids)))
    gt_by, hyp_by = _group(gt_rows), _group(hyp_rows)
    for frame in set(gt_by) & set(hyp_by):
        gts, hyps = gt_by[frame], hyp_by[frame]
        ok = iou_matrix([g.tlwh for g in gts], [h.tlwh for h in hyps]) >= iou_thresh
        for i, j in zip(*np.nonzero(ok)):
            overlap[gpos[gts[i].id], hpos[hyps[j].id]] += 1
    res = hungarian(-overlap)
    idtp = int(round(sum(overlap[r, c] for r, c in res.matches)))
    return idtp, len(hyp_rows) - idtp, len(gt_rows) - idtp


def idf1(gt_rows, hyp_rows, iou_thresh=0.5):
    idtp, idfp, idfn = idf1_counts(gt_rows, hyp_rows, iou_thresh)
    denom = 2 * idtp + idfp + idfn
    return 2 * idtp / denom if denom else 1.0


def evaluate(gt_rows, hyp_rows, iou_thresh=0.5):
    """Full report for one sequence."""
    events = match_frames(gt_rows, hyp_rows, iou_thresh)
    gt_count = _count(events, MATCH, SWITCH, MISS)
    idtp, idfp, idfn = idf1_counts(gt_rows, hyp_rows, iou_thresh)
    denom = 2 * idtp + idfp + idfn
    return EvalReport(
        mota=mota(events) if gt_count else float("nan"),
        idf1=2 * idtp / denom if denom else 1.0,
        id_switches=id_switches(events),
        fp=_count(events, FP),
        fn=_count(events, MISS),
        gt_count=gt_count,
        matches=_count(events, MATCH, SWITCH),
        idtp=idtp,
        events=events,
    )
