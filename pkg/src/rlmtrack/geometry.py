"""Relative location mapping between the image plane and a ground map plane.

Pixel coordinates here use a bottom-left origin: ``x`` grows to the right and
``y`` grows *up* from the bottom image row. Angles cross the public interface
in degrees. All functions accept scalars or numpy arrays and broadcast.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AboveHorizonError, ConfigError, GeometryDomainError, MapRangeError

# Margin kept between the largest mappable view ray and the horizon.
EPS_HORIZON_DEG = 0.5
# Smallest imaging angle used when evaluating the vertical coefficient (0/0 at zero).
ALPHA_FLOOR_DEG = 1e-9
# Absolute tolerance (map units) for the bisection inverse.
UNMAP_TOL = 1e-9
# Slack allowed on pixel-domain checks to absorb float round-off.
DOMAIN_SLACK = 1e-9


@dataclass(frozen=True)
class CameraModel:
    """Fixed camera used to project detections onto the ground map.

    Attributes:
        beta_v: vertical field of view (deg).
        beta_h: horizontal field of view (deg).
        gamma: angle between the optical axis and the ground (deg).
        cam_height: camera height above the ground, arbitrary length units.
        img_w, img_h: image size in pixels.
        fps: frame rate of the sequence.
    """

    beta_v: float
    beta_h: float
    gamma: float
    cam_height: float
    img_w: float
    img_h: float
    fps: float = 30.0

    def __post_init__(self):
        if not 0 < self.beta_v < 180:
            raise ConfigError(f"beta_v must lie in (0, 180), got {self.beta_v}")
        if not 0 < self.beta_h < 180:
            raise ConfigError(f"beta_h must lie in (0, 180), got {self.beta_h}")
        if not 0 <= self.gamma < 90:
            raise ConfigError(f"gamma must lie in [0, 90), got {self.gamma}")
        for name in ("cam_height", "img_w", "img_h", "fps"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.theta < 0:
            raise ConfigError(
                f"bottom view ray tilts behind vertical (theta={self.theta:.6g} deg); "
                "need gamma + beta_v/2 <= 90"
            )

    @property
    def theta(self):
        """Angle between the bottom view ray and the vertical (deg)."""
        return 90.0 - self.gamma - self.beta_v / 2.0

    @property
    def focal_v(self):
        """Vertical focal length in pixels implied by ``beta_v``."""
        return (self.img_h / 2.0) / np.tan(np.radians(self.beta_v / 2.0))

    @property
    def focal_h(self):
        """Horizontal focal length in pixels implied by ``beta_h``."""
        return (self.img_w / 2.0) / np.tan(np.radians(self.beta_h / 2.0))


def _check_range(values, upper, name):
    v = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < -DOMAIN_SLACK) or np.any(v > upper + DOMAIN_SLACK):
        raise GeometryDomainError(f"{name} outside [0, {upper}]")
    return np.clip(v, 0.0, upper)


def _angle_from_coord(coord, extent, fov):
    half = np.radians(fov / 2.0)
    ratio = 2.0 * coord / extent
    below = coord < extent / 2.0
    # Two branches kept separate so each endpoint is exact.
    lo = fov / 2.0 - np.degrees(np.arctan((1.0 - ratio) * np.tan(half)))
    hi = fov / 2.0 + np.degrees(np.arctan((ratio - 1.0) * np.tan(half)))
    return np.where(below, lo, hi)


def _coord_from_angle(alpha, extent, fov):
    half = np.radians(fov / 2.0)
    return extent / 2.0 * (1.0 + np.tan(np.radians(alpha) - half) / np.tan(half))


def imaging_angle_v(cam, y):
    """Vertical imaging angle (deg) of pixel row ``y``, measured from the bottom ray."""
    y = _check_range(y, cam.img_h, "y")
    return _angle_from_coord(y, cam.img_h, cam.beta_v)


def imaging_angle_h(cam, x):
    """Horizontal imaging angle (deg) of pixel column ``x``, measured from the left ray."""
    x = _check_range(x, cam.img_w, "x")
    return _angle_from_coord(x, cam.img_w, cam.beta_h)


def row_of_angle(cam, alpha_v):
    """Pixel row whose vertical imaging angle is ``alpha_v`` (inverse of the angle map)."""
    return _coord_from_angle(np.asarray(alpha_v, dtype=float), cam.img_h, cam.beta_v)


def _check_below_horizon(cam, alpha_v):
    if np.any(np.asarray(alpha_v) + cam.theta >= 90.0):
        raise AboveHorizonError("view ray at or above the horizon")


def phi_v(cam, alpha_v):
    """Vertical mapping coefficient at imaging angle ``alpha_v`` (deg)."""
    alpha_v = np.asarray(alpha_v, dtype=float)
    _check_below_horizon(cam, alpha_v)
    a = np.radians(np.maximum(alpha_v, ALPHA_FLOOR_DEG))
    th = np.radians(cam.theta)
    half = np.radians(cam.beta_v / 2.0)
    # Both tangent differences of the ratio carry a factor sin(a); cancelling it
    # leaves a form with no cancellation error near the bottom ray.
    return np.cos(half) * np.cos(a - half) / np.cos(a + th)


def phi_v_ratio(cam, alpha_v):
    """Vertical coefficient as the uncancelled tangent ratio (reference form, inaccurate near 0)."""
    alpha_v = np.asarray(alpha_v, dtype=float)
    _check_below_horizon(cam, alpha_v)
    a = np.radians(np.maximum(alpha_v, ALPHA_FLOOR_DEG))
    th = np.radians(cam.theta)
    half = np.radians(cam.beta_v / 2.0)
    num = np.cos(th) * (np.tan(a + th) - np.tan(th))
    den = np.where(a < half, np.tan(half) - np.tan(half - a), np.tan(half) + np.tan(a - half))
    return num / den


def phi_h(cam, alpha_v):
    """Lateral mapping coefficient; depends on the *vertical* imaging angle only."""
    alpha_v = np.asarray(alpha_v, dtype=float)
    _check_below_horizon(cam, alpha_v)
    a = np.radians(alpha_v)
    th = np.radians(cam.theta)
    half = np.radians(cam.beta_v / 2.0)
    return np.cos(np.abs(half - a)) * np.cos(th) / (np.cos(half) * np.cos(a + th))


def ground_distance(cam, alpha_v):
    """Ground distance from the bottom-ray footprint to the point seen at ``alpha_v``."""
    alpha_v = np.asarray(alpha_v, dtype=float)
    _check_below_horizon(cam, alpha_v)
    th = np.radians(cam.theta)
    return cam.cam_height * (np.tan(np.radians(alpha_v) + th) - np.tan(th))


@lru_cache(maxsize=64)
def horizon_angle(cam):
    """Largest mappable vertical imaging angle (deg)."""
    return min(cam.beta_v, 90.0 - cam.theta - EPS_HORIZON_DEG)


@lru_cache(maxsize=64)
def horizon_row(cam):
    """Pixel row (bottom origin) of :func:`horizon_angle`; equals ``img_h`` if fully below."""
    a_max = horizon_angle(cam)
    if a_max >= cam.beta_v:
        return float(cam.img_h)
    return float(row_of_angle(cam, a_max))


@lru_cache(maxsize=64)
def phi_max(cam):
    """Lateral coefficient at the horizon bound; fixes the map-plane x offset."""
    return float(phi_h(cam, horizon_angle(cam)))


def map_point(cam, x, y):
    """Map pixel ``(x, y)`` (bottom origin) to map-plane ``(X, Y)``.

    Raises:
        AboveHorizonError: if the row lies above :func:`horizon_row`.
    """
    x = _check_range(x, cam.img_w, "x")
    alpha = imaging_angle_v(cam, y)
    if np.any(alpha > horizon_angle(cam) + DOMAIN_SLACK):
        raise AboveHorizonError("pixel row above the mappable horizon")
    y = np.asarray(y, dtype=float)
    fh = phi_h(cam, alpha)
    mx = cam.img_w / 2.0 * (phi_max(cam) - fh) + x * fh
    my = y * phi_v(cam, alpha)
    return mx, my


@lru_cache(maxsize=64)
def max_map_y(cam):
    """Largest map-plane depth reachable below the horizon."""
    return float(map_point(cam, cam.img_w / 2.0, horizon_row(cam))[1])


def _row_closed_form(cam, my):
    # y * phi_v(alpha(y)) telescopes to focal_v * cos(theta) * (tan(alpha+theta) - tan(theta)).
    th = np.radians(cam.theta)
    t = my / (cam.focal_v * np.cos(th)) + np.tan(th)
    alpha = np.degrees(np.arctan(t)) - cam.theta
    return np.clip(row_of_angle(cam, alpha), 0.0, horizon_row(cam))


def _row_bisect(cam, my):
    lo = np.zeros_like(my)
    hi = np.full_like(my, horizon_row(cam))
    # The depth map is strictly increasing in the row, so halving always keeps the root.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        _, f = map_point(cam, cam.img_w / 2.0, mid)
        if np.all(np.abs(f - my) <= UNMAP_TOL):
            return mid
        below = f < my
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4 * np.spacing(np.maximum(hi, 1.0))):
            break
    _, flo = map_point(cam, cam.img_w / 2.0, lo)
    _, fhi = map_point(cam, cam.img_w / 2.0, hi)
    return np.where(np.abs(flo - my) <= np.abs(fhi - my), lo, hi)


def unmap_point(cam, mx, my, method="closed"):
    """Invert :func:`map_point`.

    ``method="closed"`` uses the algebraic inverse of the depth mapping;
    ``method="bisect"`` searches the monotone depth mapping numerically.
    The lateral coordinate is always recovered in closed form.

    Raises:
        MapRangeError: if ``my`` lies outside ``[0, max_map_y(cam)]``.
    """
    mx = np.asarray(mx, dtype=float)
    my = np.asarray(my, dtype=float)
    top = max_map_y(cam)
    tol = UNMAP_TOL + 1e-12 * top
    if np.any(~np.isfinite(my)) or np.any(my < -tol) or np.any(my > top + tol):
        raise MapRangeError(f"map depth outside [0, {top:.6g}]")
    my = np.clip(my, 0.0, top)
    if method == "closed":
        y = _row_closed_form(cam, my)
    elif method == "bisect":
        y = _row_bisect(cam, my)
    else:
        raise ValueError(f"unknown method {method!r}")
    fh = phi_h(cam, imaging_angle_v(cam, y))
    x = (mx - cam.img_w / 2.0 * (phi_max(cam) - fh)) / fh
    return x, y


def mean_phi(cam, y):
    """Mean of the two mapping coefficients at pixel row ``y``."""
    alpha = imaging_angle_v(cam, y)
    return 0.5 * (phi_v(cam, alpha) + phi_h(cam, alpha))


def map_scale(cam, y):
    """Per-axis stretch ``(dX/dx, dY/dy)`` of the mapping at pixel row ``y``.

    The lateral stretch is the lateral coefficient itself; the depth stretch
    is the derivative of the depth mapping, ``cos(theta) cos^2(a - bv/2) / cos^2(a + theta)``.
    """
    alpha = imaging_angle_v(cam, y)
    a = np.radians(alpha)
    th = np.radians(cam.theta)
    half = np.radians(cam.beta_v / 2.0)
    dy = np.cos(th) * np.cos(a - half) ** 2 / np.cos(a + th) ** 2
    return np.stack([phi_h(cam, alpha), dy], axis=-1)
