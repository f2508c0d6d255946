"""Readers and writers for MOTChallenge-style text files, camera configs and affine sidecars.

File boxes use a top-left image origin; the geometry code uses a bottom-left
origin. The conversion between the two lives only in this module.
"""

import io as _stdio
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputFormatError
from .geometry import CameraModel
from .motion import IDENTITY, AffineTransform

log = logging.getLogger(__name__)

CAMERA_KEYS = {
    "beta_v_deg": "beta_v",
    "beta_h_deg": "beta_h",
    "gamma_deg": "gamma",
    "cam_height": "cam_height",
    "img_w": "img_w",
    "img_h": "img_h",
    "fps": "fps",
}


@dataclass(frozen=True)
class Detection:
    frame: int
    x: float
    y: float
    w: float
    h: float
    score: float

    @property
    def tlwh(self):
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class TrackRow:
    """One output or ground-truth row: box in top-left image coordinates."""

    frame: int
    id: int
    x: float
    y: float
    w: float
    h: float
    score: float = 1.0

    @property
    def tlwh(self):
        return (self.x, self.y, self.w, self.h)


def _lines(source):
    if isinstance(source, (str, bytes)):
        source = _stdio.StringIO(source.decode() if isinstance(source, bytes) else source)
    for n, line in enumerate(source, start=1):
        line = line.strip()
        if line and not line.startswith("#"):
            yield n, line


def _fields(line, lineno, need):
    parts = [p.strip() for p in line.split(",")]
    if len(parts) < need:
        raise InputFormatError(f"expected at least {need} fields, got {len(parts)}", lineno)
    try:
        return [float(p) for p in parts[:need]], parts
    except ValueError as exc:
        raise InputFormatError(f"non-numeric field ({exc})", lineno) from None


def _frame_number(value, lineno):
    if value != int(value) or value < 1:
        raise InputFormatError(f"frame must be a positive integer, got {value}", lineno)
    return int(value)


def parse_mot_dets(source):
    """Group detection lines ``frame,id,x,y,w,h,score,...`` by frame.

    Returns a dict ``frame -> list[Detection]`` in ascending frame order with
    file order preserved inside each frame. Scores outside [0, 1] are clamped.
    """
    groups = defaultdict(list)
    for lineno, line in _lines(source):
        (frame, _id, x, y, w, h, score), _ = _fields(line, lineno, 7)
        frame = _frame_number(frame, lineno)
        if not 0.0 <= score <= 1.0:
            log.warning("line %d: score %g clamped into [0, 1]", lineno, score)
            score = min(max(score, 0.0), 1.0)
        groups[frame].append(Detection(frame, x, y, w, h, score))
    return {f: groups[f] for f in sorted(groups)}


def parse_mot_rows(source, gt=False):
    """Parse ``frame,id,x,y,w,h,score,...`` rows (results or ground truth).

    With ``gt=True`` the 7th column is a consider flag; rows flagged 0 and rows
    whose 8th column (class) is present and not 1 are skipped.
    """
    rows = []
    for lineno, line in _lines(source):
        vals, parts = _fields(line, lineno, 6)
        frame = _frame_number(vals[0], lineno)
        score = 1.0
        if len(parts) > 6:
            try:
                score = float(parts[6])
            except ValueError:
                raise InputFormatError("non-numeric score", lineno) from None
        if gt:
            if len(parts) > 6 and score == 0:
                continue
            if len(parts) > 7 and parts[7] not in ("", "-1") and float(parts[7]) != 1:
                continue
            score = 1.0
        rows.append(TrackRow(frame, int(vals[1]), *vals[2:6], score))
    return rows


def _fmt(v):
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def write_mot_results(rows, stream=None):
    """Serialize rows sorted by (frame, id); returns the text if ``stream`` is None."""
    keys = [(r.frame, r.id) for r in rows]
    if any(a >= b for a, b in zip(keys, keys[1:])):
        raise InputFormatError("result rows must be strictly sorted by (frame, id)")
    text = "".join(
        f"{r.frame},{r.id},{_fmt(r.x)},{_fmt(r.y)},{_fmt(r.w)},{_fmt(r.h)},{_fmt(r.score)},-1,-1,-1\n"
        for r in rows
    )
    if stream is None:
        return text
    stream.write(text)
    return None


def write_mot_dets(rows, stream=None):
    """Serialize detection rows with id -1, in ascending frame order (stable within a frame)."""
    rows = sorted(rows, key=lambda r: r.frame)
    text = "".join(
        f"{r.frame},-1,{_fmt(r.x)},{_fmt(r.y)},{_fmt(r.w)},{_fmt(r.h)},{_fmt(r.score)},-1,-1,-1\n" for r in rows
    )
    if stream is None:
        return text
    stream.write(text)
    return None


def write_gt_rows(rows, stream=None):
    """Serialize ground-truth rows with a consider flag, class 1, visibility 1."""
    text = "".join(
        f"{r.frame},{r.id},{_fmt(r.x)},{_fmt(r.y)},{_fmt(r.w)},{_fmt(r.h)},1,1,1\n" for r in rows
    )
    if stream is None:
        return text
    stream.write(text)
    return None


def bottom_center(box, img_h):
    """Bottom-center of a top-left ``(x, y, w, h)`` box in bottom-origin pixels.

    Works on a single box or an (N, 4) array.
    """
    b = np.asarray(box, dtype=float)
    return np.stack([b[..., 0] + b[..., 2] / 2.0, img_h - (b[..., 1] + b[..., 3])], axis=-1)


def box_from_bottom_center(point, w, h, img_h):
    """Top-left ``(x, y, w, h)`` box whose bottom-center is the bottom-origin ``point``."""
    p = np.asarray(point, dtype=float)
    px, py, w, h = np.broadcast_arrays(p[..., 0], p[..., 1], w, h)
    return np.stack([px - w / 2.0, img_h - py - h, w, h], axis=-1).astype(float)


def to_image_point(point, img_h):
    """Bottom-origin pixel point to top-left origin, or back (the map is an involution)."""
    p = np.asarray(point, dtype=float)
    return np.stack([p[..., 0], img_h - p[..., 1]], axis=-1)


def parse_camera_config(source):
    """Read ``key=value`` lines into a validated :class:`CameraModel`."""
    values = {}
    for lineno, line in _lines(source):
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CAMERA_KEYS:
            raise ConfigError(f"line {lineno}: unknown camera key {key!r}")
        try:
            values[CAMERA_KEYS[key]] = float(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} is not a number") from None
    for key, attr in CAMERA_KEYS.items():
        if attr not in values:
            raise ConfigError(f"camera config is missing required key {key!r}")
    return CameraModel(**values)


def format_camera_config(cam):
    return "".join(f"{k}={getattr(cam, a)!r}\n" for k, a in CAMERA_KEYS.items())


class AffineSequence:
    """Per-frame camera-motion transforms; frames without an entry are identity."""

    def __init__(self, transforms=None):
        self.transforms = dict(transforms or {})

    def get(self, frame):
        return self.transforms.get(frame, IDENTITY)

    def __len__(self):
        return len(self.transforms)


def parse_affine_file(source):
    """Read ``frame,a11,a12,a21,a22,b1,b2`` lines."""
    out = {}
    for lineno, line in _lines(source):
        vals, _ = _fields(line, lineno, 7)
        frame = _frame_number(vals[0], lineno)
        if not all(math.isfinite(v) for v in vals):
            raise InputFormatError("non-finite affine entry", lineno)
        try:
            out[frame] = AffineTransform(*vals[1:])
        except ConfigError:
            raise ConfigError(f"singular affine transform at frame {frame}") from None
    return AffineSequence(out)


def read_text(path):
    return Path(path).read_text(encoding="utf-8")


def write_text(path, text):
    Path(path).write_text(text, encoding="utf-8", newline="\n")
