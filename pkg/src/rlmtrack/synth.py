"""Synthetic pedestrian scenes and a ray-cast projection oracle.

Nothing here calls the mapping coefficients in :mod:`rlmtrack.geometry`; the
projection is rebuilt from the pinhole model so it can check that module.

Ground coordinates are ``(lateral, depth)``: ``lateral`` is the signed offset
from the optical axis plane, ``depth`` the distance along the ground from the
point where the bottom view ray meets it.
"""

from dataclasses import dataclass, field

import numpy as np

from .assoc import iou_matrix
from .errors import AboveHorizonError, ConfigError, GeometryDomainError
from .geometry import EPS_HORIZON_DEG, CameraModel
from .io import TrackRow


def _rad(deg):
    return np.radians(deg)


def _max_angle(cam):
    return min(cam.beta_v, 90.0 - cam.theta - EPS_HORIZON_DEG)


def _row_from_angle(cam, alpha):
    half = _rad(cam.beta_v / 2.0)
    return cam.img_h / 2.0 * (1.0 + np.tan(_rad(alpha) - half) / np.tan(half))


def _axial_depth(cam, forward, z=0.0):
    # Distance along the optical axis to a point at ``forward`` from the camera foot, height z.
    g = _rad(cam.gamma)
    return forward * np.cos(g) + (cam.cam_height - z) * np.sin(g)


def vertical_angle(cam, depth, z=0.0):
    """Vertical imaging angle (deg) of a point ``depth`` beyond the bottom-ray footprint at height ``z``."""
    h = cam.cam_height
    forward = np.asarray(depth, dtype=float) + h * np.tan(_rad(cam.theta))
    return np.degrees(np.arctan2(forward, h - np.asarray(z, dtype=float))) - cam.theta


def ray_cast_project(cam, depth, lateral, z=0.0, check=True):
    """Project a world point to bottom-origin pixel coordinates.

    Raises:
        AboveHorizonError: ground point beyond the mappable horizon.
        GeometryDomainError: point behind the bottom view ray.
    """
    depth = np.asarray(depth, dtype=float)
    lateral = np.asarray(lateral, dtype=float)
    if check and np.any(depth < 0):
        raise GeometryDomainError("point in front of the bottom view ray")
    alpha = vertical_angle(cam, depth, z)
    if check and np.any(alpha > _max_angle(cam)):
        raise AboveHorizonError("ground point beyond the horizon")
    y = _row_from_angle(cam, alpha)
    forward = depth + cam.cam_height * np.tan(_rad(cam.theta))
    psi = np.arctan2(lateral, _axial_depth(cam, forward, z))
    x = cam.img_w / 2.0 * (1.0 + np.tan(psi) / np.tan(_rad(cam.beta_h / 2.0)))
    return x, y


def ray_ground_distance(cam, alpha_v):
    """Ground distance between the bottom-ray footprint and the ray at ``alpha_v`` (deg).

    Intersects world-frame view rays with the ground plane.
    """
    alpha_v = np.asarray(alpha_v, dtype=float)
    g = _rad(cam.gamma)
    fwd = np.array([0.0, np.cos(g), -np.sin(g)])
    up = np.array([0.0, np.sin(g), np.cos(g)])
    centre = np.array([0.0, 0.0, cam.cam_height])

    def hit(elev):
        d = np.sin(elev)[..., None] * up + np.cos(elev)[..., None] * fwd
        t = -centre[2] / d[..., 2]
        if np.any(t <= 0):
            raise AboveHorizonError("ray does not meet the ground")
        return centre[1] + t * d[..., 1]

    half = _rad(cam.beta_v / 2.0)
    return hit(_rad(alpha_v) - half) - hit(np.asarray(-half))


@dataclass(frozen=True)
class Agent:
    """Pedestrian moving at constant ground velocity (ground units per frame)."""

    start: tuple
    velocity: tuple
    width: float = 0.5
    height: float = 1.7


@dataclass(frozen=True)
class ScenarioSpec:
    camera: CameraModel
    agents: tuple
    n_frames: int
    occlusion_iou: float = 0.3
    occluded_score: float = 0.35
    base_score: float = 0.9
    jitter_px: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        object.__setattr__(self, "agents", tuple(self.agents))


def agent_boxes(cam, agent, frames):
    """Pixel boxes ``(x, y, w, h)`` (top-left origin) for ``frames`` (1-based); NaN rows when out of view."""
    f = np.asarray(frames, dtype=float) - 1.0
    lat = agent.start[0] + agent.velocity[0] * f
    dep = agent.start[1] + agent.velocity[1] * f
    out = np.full((len(f), 4), np.nan)
    visible = (dep >= 0) & (vertical_angle(cam, np.maximum(dep, 0)) <= _max_angle(cam))
    if not np.any(visible):
        return out, dep
    lat, dep_v = lat[visible], dep[visible]
    x_foot, y_foot = ray_cast_project(cam, dep_v, lat)
    _, y_head = ray_cast_project(cam, dep_v, lat, z=agent.height, check=False)
    x_left, _ = ray_cast_project(cam, dep_v, lat - agent.width / 2.0)
    x_right, _ = ray_cast_project(cam, dep_v, lat + agent.width / 2.0)
    box = np.column_stack([x_left, cam.img_h - y_head, x_right - x_left, y_head - y_foot])
    in_frame = (x_foot >= 0) & (x_foot <= cam.img_w) & (y_foot >= 0) & (y_foot <= cam.img_h)
    box[~in_frame] = np.nan
    out[visible] = box
    return out, dep


def generate(spec):
    """Ground-truth and detection rows for a scenario.

    Returns:
        ``(gt_rows, det_rows)``, lists of :class:`rlmtrack.io.TrackRow`.
        Detection rows carry id -1.
    """
    cam = spec.camera
    rng = np.random.default_rng(spec.seed)
    frames = np.arange(1, spec.n_frames + 1)
    per_agent = [agent_boxes(cam, a, frames) for a in spec.agents]
    gt, dets = [], []
    for k, frame in enumerate(frames):
        boxes = np.array([b[k] for b, _ in per_agent]).reshape(-1, 4)
        depth = np.array([d[k] for _, d in per_agent])
        vis = np.flatnonzero(np.all(np.isfinite(boxes), axis=1))
        scores = np.full(len(spec.agents), spec.base_score)
        if len(vis) > 1:
            ious = iou_matrix(boxes[vis], boxes[vis])
            np.fill_diagonal(ious, 0.0)
            for i, j in zip(*np.nonzero(np.triu(ious > spec.occlusion_iou))):
                far = vis[i] if depth[vis[i]] > depth[vis[j]] else vis[j]
                scores[far] = spec.occluded_score
        for a in vis:
            gt.append(TrackRow(int(frame), int(a) + 1, *boxes[a], 1.0))
        noise = rng.normal(0.0, spec.jitter_px, size=(len(spec.agents), 4))
        for a in vis:
            b = boxes[a] + noise[a]
            b[2:] = np.maximum(b[2:], 1.0)
            dets.append(TrackRow(int(frame), -1, *b, float(scores[a])))
    return gt, dets


def rows_by_frame(rows):
    """Group rows into ``frame -> (N, 5)`` arrays of ``x, y, w, h, score``."""
    out = {}
    for r in rows:
        out.setdefault(r.frame, []).append((r.x, r.y, r.w, r.h, r.score))
    return {f: np.asarray(v, dtype=float) for f, v in sorted(out.items())}


def occluded_frames(spec):
    """Frames in which at least one agent is scored as occluded."""
    _, dets = generate(spec)
    return sorted({d.frame for d in dets if d.score == spec.occluded_score})


DEFAULT_CAMERA = CameraModel(beta_v=60.0, beta_h=90.0, gamma=15.0, cam_height=6.0, img_w=1920, img_h=1080, fps=30.0)


def crossing_preset(seed=0, camera=DEFAULT_CAMERA):
    """Two pedestrians swap sides 20 m out, the far one 1.4 m behind.

    Their paths meet at frame 31; the boxes overlap enough to mark the far
    agent as occluded for five frames (29-33).
    """
    speed = 0.05
    agents = (
        Agent(start=(-1.5, 20.0), velocity=(speed, 0.0)),
        Agent(start=(1.5, 21.4), velocity=(-speed, 0.0)),
    )
    return ScenarioSpec(camera, agents, n_frames=60, occlusion_iou=0.25, jitter_px=2.0, seed=seed)


def crossing_suite(n_seeds=20, camera=DEFAULT_CAMERA):
    """The crossing preset under ``n_seeds`` independent jitter draws (seeds 0..n-1)."""
    return [crossing_preset(seed=k, camera=camera) for k in range(n_seeds)]


def lanes_preset(seed=0, n_frames=100, n_agents=5, camera=DEFAULT_CAMERA):
    """``n_agents`` walkers in separate depth lanes, staggered sideways; boxes never overlap."""
    agents = [
        Agent(start=(-3.0 + 1.2 * k, 2.0 + 2.5 * k), velocity=(0.03, 0.0)) for k in range(n_agents)
    ]
    return ScenarioSpec(camera, tuple(agents), n_frames=n_frames, jitter_px=1.0, seed=seed)


def crowd_preset(seed=0, n_frames=1000, n_agents=20, camera=DEFAULT_CAMERA):
    """Many slow walkers spread over the ground; a throughput workload."""
    rng = np.random.default_rng(seed)
    agents = []
    for _ in range(n_agents):
        start = (rng.uniform(-4.0, 4.0), rng.uniform(1.0, 25.0))
        velocity = (rng.uniform(-0.004, 0.004), rng.uniform(-0.01, 0.01))
        agents.append(Agent(start=start, velocity=velocity))
    return ScenarioSpec(camera, tuple(agents), n_frames=n_frames, jitter_px=1.0, seed=seed)


PRESETS = {"crossing": crossing_preset, "lanes": lanes_preset, "crowd": crowd_preset}
