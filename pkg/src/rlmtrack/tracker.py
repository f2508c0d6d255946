"""Frame-by-frame tracking: score split, region density, ground mapping,
standardized boxes, prediction, two-stage association and track lifecycle."""

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum

import numpy as np

from . import geometry as geo
from .assoc import iou_matrix, pairwise_iou, two_stage_from_iou
from .density import DensityConfig, ModulationMode, accumulate, cell_of, effective_density
from .errors import ConfigError, InputFormatError
from .io import Detection, TrackRow, bottom_center, box_from_bottom_center, to_image_point
from .motion import IDENTITY, NoiseConfig, TrackState, apply_affine, init_state, predict_many, shift, update_many
from .normbox import RegionWidths, StdBoxConfig, clamp_aspect

log = logging.getLogger(__name__)


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"


@dataclass(frozen=True)
class TrackerConfig:
    tau_high: float = 0.6
    density: DensityConfig = field(default_factory=DensityConfig)
    stdbox: StdBoxConfig = field(default_factory=StdBoxConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    max_age: int = 30
    iou_min: float = 0.1
    n_confirm: int = 2
    # EMA weight of the newest detection for remembered pixel size and aspect.
    dims_alpha: float = 0.3
    # False: associate raw pixel boxes instead of mapped standardized boxes.
    use_rlm: bool = True

    def __post_init__(self):
        if not 0 < self.tau_high < 1:
            raise ConfigError("tau_high must lie in (0, 1)")
        if self.max_age < 1:
            raise ConfigError("max_age must be >= 1")
        if self.n_confirm < 1:
            raise ConfigError("n_confirm must be >= 1")
        if not 0 <= self.iou_min <= 1:
            raise ConfigError("iou_min must lie in [0, 1]")
        if not 0 < self.dims_alpha <= 1:
            raise ConfigError("dims_alpha must lie in (0, 1]")

    @classmethod
    def from_dict(cls, d):
        """Build a config from nested plain values; unknown keys are rejected."""
        nested = {"density": DensityConfig, "stdbox": StdBoxConfig, "noise": NoiseConfig}
        kwargs = {}
        known = {f.name for f in fields(cls)}
        for key, val in dict(d).items():
            if key not in known:
                raise ConfigError(f"unknown tracker option {key!r}")
            if key in nested:
                sub = nested[key]
                sub_known = {f.name for f in fields(sub)}
                bad = set(val) - sub_known
                if bad:
                    raise ConfigError(f"unknown {key} option(s): {', '.join(sorted(bad))}")
                val = sub(**val)
            kwargs[key] = val
        return cls(**kwargs)

    def to_dict(self):
        d = asdict(self)
        d["density"]["modulation_mode"] = self.density.modulation_mode.value
        return d

    def ablated(self, density_modulation=True, rlm=True, threshold_mode=None):
        """Copy with features switched off for ablation runs."""
        cfg = self
        if not density_modulation:
            cfg = replace(cfg, noise=replace(cfg.noise, kappa_rho=0.0))
        if threshold_mode is not None:
            cfg = replace(cfg, density=replace(cfg.density, modulation_mode=ModulationMode(threshold_mode)))
        if not rlm:
            cfg = replace(cfg, use_rlm=False)
        return cfg


@dataclass
class Track:
    id: int
    state: object
    status: TrackStatus
    pixel_dims: np.ndarray
    aspect: float
    last_score: float
    anchor_px: np.ndarray
    cell: int
    frames_since_update: int = 0
    hits: int = 1
    # Pixel-to-plane stretch at the last matched position (None in the pixel plane).
    scale: object = None


@dataclass
class StepStats:
    frames: int = 0
    detections: int = 0
    malformed: int = 0
    above_horizon: int = 0
    clamps: int = 0
    tracks_created: int = 0
    rows: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def _det_array(frame_dets):
    if isinstance(frame_dets, np.ndarray):
        return np.asarray(frame_dets, dtype=float).reshape(-1, 5)
    rows = []
    for d in frame_dets:
        if isinstance(d, Detection):
            rows.append((d.x, d.y, d.w, d.h, d.score))
        else:
            rows.append(tuple(d)[:5])
    return np.asarray(rows, dtype=float).reshape(-1, 5)


class Tracker:
    """One tracking session over a single sequence from a fixed camera."""

    def __init__(self, camera, config=TrackerConfig()):
        self.cam = camera
        self.cfg = config
        self.tracks = []
        self.frame = 0
        self.stats = StepStats()
        self._next_id = 1
        self._widths = RegionWidths(config.stdbox)
        self._y_horizon = geo.horizon_row(camera)
        self._max_map_y = geo.max_map_y(camera)
        self.density = None

    # -- plane helpers -------------------------------------------------------

    def _to_plane(self, pts):
        """Bottom-origin pixel points (N, 2) -> association-plane positions."""
        if not self.cfg.use_rlm:
            return pts.copy()
        mx, my = geo.map_point(self.cam, pts[:, 0], pts[:, 1])
        return np.column_stack([mx, my])

    def _from_plane(self, pos):
        """Association-plane positions (N, 2) -> bottom-origin pixel points."""
        if not self.cfg.use_rlm:
            return pos.copy()
        my = np.clip(pos[:, 1], 0.0, self._max_map_y)
        x, y = geo.unmap_point(self.cam, pos[:, 0], my)
        return np.column_stack([x, y])

    def _clip_to_image(self, pts):
        top = self._y_horizon if self.cfg.use_rlm else self.cam.img_h
        return np.column_stack([np.clip(pts[:, 0], 0, self.cam.img_w), np.clip(pts[:, 1], 0, top)])

    # -- main loop -----------------------------------------------------------

    def step(self, frame_dets, affine=None):
        """Process one frame; returns ``(track_id, (x, y, w, h), score)`` for emitted tracks.

        Boxes use a top-left image origin.
        """
        cfg, cam = self.cfg, self.cam
        self.frame += 1
        self.stats.frames += 1
        dets = _det_array(frame_dets)
        self.stats.detections += len(dets)

        ok = np.all(np.isfinite(dets), axis=1) & (dets[:, 2] > 0) & (dets[:, 3] > 0)
        if not np.all(ok):
            self.stats.malformed += int((~ok).sum())
            log.warning("frame %d: skipped %d malformed detections", self.frame, int((~ok).sum()))
            dets = dets[ok]
        boxes, scores = dets[:, :4], np.clip(dets[:, 4], 0.0, 1.0)

        # (1)-(3) score split, region density, density-adaptive low band
        high = scores > cfg.tau_high
        self.density = density = accumulate(boxes[high], scores[high], cam.img_w, cam.img_h, cfg.density)
        foot = bottom_center(boxes, cam.img_h).reshape(-1, 2)
        foot = np.column_stack([np.clip(foot[:, 0], 0, cam.img_w), np.clip(foot[:, 1], 0, cam.img_h)])
        cells = cell_of(cam.img_w, cam.img_h, foot[:, 0], foot[:, 1]) if len(foot) else np.zeros(0, int)
        rho_eff = effective_density(density.rho, cfg.density)
        if cfg.density.modulation_mode is ModulationMode.AS_WRITTEN:
            thr = rho_eff * cfg.density.tau_low
        else:
            thr = cfg.density.tau_low * (2.0 - rho_eff)
        low = ~high & (scores > thr[cells])
        keep = high | low
        if cfg.use_rlm:
            above = keep & (foot[:, 1] > self._y_horizon)
            if np.any(above):
                self.stats.above_horizon += int(above.sum())
                keep &= ~above

        idx = np.flatnonzero(keep)
        boxes, scores, foot, cells, high = boxes[idx], scores[idx], foot[idx], cells[idx], high[idx]
        aspects = boxes[:, 3] / boxes[:, 2]

        # (4) map bottom-centers and build association boxes
        pos = self._to_plane(foot) if len(idx) else np.zeros((0, 2))
        scales = geo.map_scale(cam, foot[:, 1]) if cfg.use_rlm and len(idx) else None
        if cfg.use_rlm:
            if len(idx):
                phis = geo.mean_phi(cam, foot[:, 1])
                widths = self._widths.update(cells, pos[:, 1], phis, rho_eff, cam.fps)
            else:
                widths = self._widths.current()
            w = widths[cells]
            h = w * clamp_aspect(aspects, cfg.stdbox)
        else:
            widths = None
            w, h = boxes[:, 2], boxes[:, 3]
        det_boxes = np.column_stack([pos[:, 0] - w / 2.0, pos[:, 1], w, h])

        # (5) camera-motion compensation, then prediction
        self._compensate(affine)
        if self.tracks:
            means, covs = predict_many(
                [t.state.mean for t in self.tracks],
                [t.state.cov for t in self.tracks],
                cfg.noise,
                self._track_scales(self.tracks),
            )
            for t, m, c in zip(self.tracks, means, covs):
                t.state = TrackState(m, c, float(density.rho[t.cell]))
        ious = self._association_ious(det_boxes)

        # (6) two-stage association
        hi_idx = np.flatnonzero(high)
        lo_idx = np.flatnonzero(~high)
        s1, s2 = two_stage_from_iou(ious[:, hi_idx], ious[:, lo_idx], cfg.iou_min)
        pairs = [(r, hi_idx[c]) for r, c in s1.matches] + [(r, lo_idx[c]) for r, c in s2.matches]

        # (7) lifecycle
        matched = {r for r, _ in pairs}
        if pairs:
            rows, dets_idx = np.array(pairs).T
            upd = [self.tracks[r] for r in rows]
            for t, d in zip(upd, dets_idx):
                t.scale = None if scales is None else scales[d]
            means, covs = update_many(
                [t.state.mean for t in upd],
                [t.state.cov for t in upd],
                pos[dets_idx],
                density.rho[cells[dets_idx]],
                cfg.noise,
                self._track_scales(upd),
            )
            for t, m, c, d in zip(upd, means, covs, dets_idx):
                t.state = TrackState(m, c, float(density.rho[cells[d]]))
        for r, d in pairs:
            t = self.tracks[r]
            a = cfg.dims_alpha
            t.pixel_dims = a * boxes[d, 2:4] + (1 - a) * t.pixel_dims
            t.aspect = a * aspects[d] + (1 - a) * t.aspect
            t.last_score = float(scores[d])
            t.anchor_px = foot[d].copy()
            t.cell = int(cells[d])
            t.frames_since_update = 0
            t.hits += 1
            if t.status is TrackStatus.TENTATIVE and t.hits >= cfg.n_confirm:
                t.status = TrackStatus.ACTIVE
            elif t.status is TrackStatus.LOST:
                t.status = TrackStatus.ACTIVE

        survivors = []
        for r, t in enumerate(self.tracks):
            if r in matched:
                survivors.append(t)
                continue
            if t.status is TrackStatus.TENTATIVE:
                continue
            t.status = TrackStatus.LOST
            t.frames_since_update += 1
            if t.frames_since_update <= cfg.max_age:
                survivors.append(t)
        emitted_tracks = [self.tracks[r] for r in sorted(matched)]

        for c in s1.unmatched_dets:
            d = hi_idx[c]
            status = TrackStatus.ACTIVE if cfg.n_confirm <= 1 else TrackStatus.TENTATIVE
            scale = None if scales is None else scales[d]
            t = Track(
                id=self._next_id,
                state=init_state(pos[d], cfg.noise, scale),
                status=status,
                pixel_dims=boxes[d, 2:4].copy(),
                aspect=float(aspects[d]),
                last_score=float(scores[d]),
                anchor_px=foot[d].copy(),
                cell=int(cells[d]),
                scale=scale,
            )
            self._next_id += 1
            self.stats.tracks_created += 1
            survivors.append(t)
            if status is TrackStatus.ACTIVE:
                emitted_tracks.append(t)
        self.tracks = survivors

        # (8) restore pixel boxes for confirmed tracks matched this frame
        out_tracks = [t for t in emitted_tracks if t.status is TrackStatus.ACTIVE]
        return self._emit(out_tracks)

    def _track_scales(self, tracks):
        if not self.cfg.use_rlm:
            return None
        return np.array([t.scale for t in tracks])

    def _compensate(self, affine):
        if affine is None or affine.is_identity or not self.tracks:
            return
        mean_pos = np.array([t.state.mean[:2] for t in self.tracks])
        px = self._clip_to_image(self._from_plane(mean_pos))
        moved = to_image_point(apply_affine(affine, to_image_point(px, self.cam.img_h)), self.cam.img_h)
        delta = self._to_plane(self._clip_to_image(moved)) - self._to_plane(px)
        for t, d in zip(self.tracks, delta):
            t.state = shift(t.state, d)

    def _association_ious(self, det_boxes):
        """IoU between every predicted track and every detection box.

        In the map plane each pair is compared at the detection's regional
        width, so both boxes of a pair share one width even when the track
        was last seen in another region.
        """
        n, m = len(self.tracks), len(det_boxes)
        if n == 0 or m == 0:
            return np.zeros((n, m))
        pos = np.array([t.state.mean[:2] for t in self.tracks])
        if not self.cfg.use_rlm:
            dims = np.array([t.pixel_dims for t in self.tracks])
            boxes = np.column_stack([pos[:, 0] - dims[:, 0] / 2.0, pos[:, 1], dims])
            return iou_matrix(boxes, det_boxes)
        w = det_boxes[None, :, 2]
        aspect = clamp_aspect(np.array([t.aspect for t in self.tracks]), self.cfg.stdbox)[:, None]
        trk = np.stack(np.broadcast_arrays(pos[:, None, 0] - w / 2.0, pos[:, None, 1], w, w * aspect), axis=-1)
        return pairwise_iou(trk, det_boxes[None, :, :])

    def _emit(self, tracks):
        if not tracks:
            return []
        cam = self.cam
        pos = np.array([t.state.mean[:2] for t in tracks])
        foot = self._from_plane(pos)
        dims = np.array([t.pixel_dims for t in tracks])
        b = box_from_bottom_center(foot, dims[:, 0], dims[:, 1], cam.img_h)
        x0 = np.clip(b[:, 0], 0, cam.img_w)
        y0 = np.clip(b[:, 1], 0, cam.img_h)
        x1 = np.clip(b[:, 0] + b[:, 2], 0, cam.img_w)
        y1 = np.clip(b[:, 1] + b[:, 3], 0, cam.img_h)
        clipped = (x0 != b[:, 0]) | (y0 != b[:, 1]) | (x1 != b[:, 0] + b[:, 2]) | (y1 != b[:, 1] + b[:, 3])
        self.stats.clamps += int(clipped.sum())
        out = []
        for t, bx in zip(tracks, np.column_stack([x0, y0, x1 - x0, y1 - y0])):
            out.append((t.id, tuple(float(v) for v in bx), t.last_score))
        out.sort(key=lambda r: r[0])
        self.stats.rows += len(out)
        return out


def run_sequence(camera, dets_by_frame, affines=None, config=TrackerConfig(), n_frames=None, tracker=None):
    """Track a whole sequence.

    Args:
        camera: CameraModel of the sequence.
        dets_by_frame: mapping ``frame -> detections`` or an iterable of
            ``(frame, detections)`` pairs with strictly ascending frames.
        affines: object with ``get(frame)`` returning the transform from the
            previous frame into ``frame`` (e.g. :class:`rlmtrack.io.AffineSequence`).
        n_frames: last frame to process; defaults to the last frame with detections.

    Returns:
        List of :class:`TrackRow` sorted by (frame, id).
    """
    items = list(dets_by_frame.items()) if hasattr(dets_by_frame, "items") else list(dets_by_frame)
    frames = [int(f) for f, _ in items]
    if any(f < 1 for f in frames):
        raise InputFormatError("frame numbers must be positive")
    if any(a >= b for a, b in zip(frames, frames[1:])):
        raise InputFormatError("frames must be strictly ascending")
    by_frame = dict(zip(frames, (d for _, d in items)))
    last = n_frames if n_frames is not None else (frames[-1] if frames else 0)
    trk = tracker if tracker is not None else Tracker(camera, config)
    rows = []
    for frame in range(1, last + 1):
        aff = affines.get(frame) if affines is not None else IDENTITY
        for tid, box, score in trk.step(by_frame.get(frame, ()), aff):
            rows.append(TrackRow(frame, tid, *box, score))
    return rows
