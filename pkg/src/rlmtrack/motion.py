"""Constant-velocity Kalman filter with density-modulated measurement noise,
and affine camera-motion compensation."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, RLMError

_F = np.array(
    [
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)
_H = np.eye(2, 4)


class FilterNumericError(RLMError, ArithmeticError):
    """Innovation covariance could not be inverted."""


@dataclass(frozen=True)
class NoiseConfig:
    """Noise scales per frame.

    Values are in the units of the filtered plane. The tracker passes a
    per-axis ``scale`` so they can be stated in pixel-equivalents there.
    ``init_pos_std`` sets the prior position spread of a new track; velocity
    starts ten times looser.
    """

    pos_std: float = 1.0
    vel_std: float = 0.5
    meas_std: float = 2.0
    kappa_rho: float = 1.0
    init_pos_std: float = 4.0

    def __post_init__(self):
        for name in ("pos_std", "vel_std", "meas_std", "kappa_rho", "init_pos_std"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    def process_cov(self, scale=None):
        q = np.array([self.pos_std**2] * 2 + [self.vel_std**2] * 2)
        if scale is not None:
            q = q * np.tile(np.square(scale), 2)
        return np.diag(q)


@dataclass
class TrackState:
    mean: np.ndarray
    cov: np.ndarray
    rho: float = 0.0

    @property
    def position(self):
        return self.mean[:2]


def init_state(position, cfg=NoiseConfig(), scale=None):
    """New state at ``position`` with zero velocity and a diagonal prior."""
    position = getattr(position, "bottom_center", position)
    mean = np.array([position[0], position[1], 0.0, 0.0], dtype=float)
    p = cfg.init_pos_std**2 * (np.ones(2) if scale is None else np.square(scale))
    cov = np.diag([p[0], p[1], 100.0 * p[0], 100.0 * p[1]])
    return TrackState(mean, cov)


def _symmetrize(cov):
    return 0.5 * (cov + np.swapaxes(cov, -1, -2))


def _scales(scale, n):
    if scale is None:
        return np.ones((n, 2))
    return np.broadcast_to(np.asarray(scale, dtype=float), (n, 2))


def predict_many(means, covs, cfg=NoiseConfig(), scales=None):
    """Batched :func:`predict` over (N, 4) means and (N, 4, 4) covariances."""
    means = np.asarray(means, dtype=float).reshape(-1, 4)
    covs = np.asarray(covs, dtype=float).reshape(-1, 4, 4)
    sq = np.square(_scales(scales, len(means)))
    q = np.array([cfg.pos_std**2] * 2 + [cfg.vel_std**2] * 2) * np.tile(sq, 2)
    covs = _F @ covs @ _F.T
    idx = np.arange(4)
    covs[:, idx, idx] += q
    return means @ _F.T, _symmetrize(covs)


def predict(s, rho_cell=0.0, cfg=NoiseConfig(), scale=None):
    """One unit-step constant-velocity prediction; records ``rho_cell`` for the update."""
    mean, cov = predict_many(s.mean[None], s.cov[None], cfg, None if scale is None else [scale])
    return TrackState(mean[0], cov[0], float(rho_cell))


def measurement_cov(rho_cell, cfg=NoiseConfig(), scale=None):
    """``meas_std**2 * (1 + kappa_rho * rho) * I``, optionally stretched per axis by ``scale``."""
    r = cfg.meas_std**2 * (1.0 + cfg.kappa_rho * rho_cell)
    if scale is None:
        return r * np.eye(2)
    return r * np.diag(np.square(scale))


def _gains(covs, rcovs):
    s = covs[:, :2, :2] + rcovs
    try:
        gains = np.swapaxes(np.linalg.solve(s, covs[:, :2, :]), -1, -2)
    except np.linalg.LinAlgError as exc:
        raise FilterNumericError("innovation covariance is singular") from exc
    if not np.all(np.isfinite(gains)):
        raise FilterNumericError("non-finite Kalman gain")
    return gains


def kalman_gain(cov, rho_cell, cfg=NoiseConfig(), scale=None):
    return _gains(np.asarray(cov, dtype=float)[None], measurement_cov(rho_cell, cfg, scale)[None])[0]


def update_many(means, covs, z, rhos, cfg=NoiseConfig(), scales=None):
    """Batched :func:`update`: N states, N measurements, N cell densities."""
    means = np.asarray(means, dtype=float).reshape(-1, 4)
    covs = np.asarray(covs, dtype=float).reshape(-1, 4, 4)
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    r = cfg.meas_std**2 * (1.0 + cfg.kappa_rho * np.asarray(rhos, dtype=float).reshape(-1))
    sq = np.square(_scales(scales, len(means)))
    rcovs = np.zeros((len(means), 2, 2))
    rcovs[:, 0, 0] = r * sq[:, 0]
    rcovs[:, 1, 1] = r * sq[:, 1]
    gains = _gains(covs, rcovs)
    means = means + np.einsum("nij,nj->ni", gains, z - means[:, :2])
    # Joseph form keeps the posterior PSD under round-off.
    ikh = np.broadcast_to(np.eye(4), covs.shape).copy()
    ikh[:, :, :2] -= gains
    covs = ikh @ covs @ np.swapaxes(ikh, -1, -2) + gains @ rcovs @ np.swapaxes(gains, -1, -2)
    return means, _symmetrize(covs)


def update(s, z, rho_cell=None, cfg=NoiseConfig(), scale=None):
    """Correct ``s`` with a measured map position ``z``.

    Denser regions inflate the measurement noise, so the filter leans on the
    motion model where occlusions corrupt detections.
    """
    if rho_cell is None:
        rho_cell = s.rho
    z = np.asarray(getattr(z, "bottom_center", z), dtype=float)
    mean, cov = update_many(s.mean[None], s.cov[None], z[None], [rho_cell], cfg, None if scale is None else [scale])
    return TrackState(mean[0], cov[0], float(rho_cell))


def shift(s, delta):
    """Translate the state mean by a map-plane offset; covariance untouched."""
    mean = s.mean.copy()
    mean[:2] += delta
    return TrackState(mean, s.cov, s.rho)


@dataclass(frozen=True)
class AffineTransform:
    """``p' = A p + b`` mapping frame k-1 pixel coordinates into frame k."""

    a11: float = 1.0
    a12: float = 0.0
    a21: float = 0.0
    a22: float = 1.0
    b1: float = 0.0
    b2: float = 0.0
    _m: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if abs(self.a11 * self.a22 - self.a12 * self.a21) <= 1e-12:
            raise ConfigError("affine linear part is singular")
        object.__setattr__(
            self, "_m", np.array([[self.a11, self.a12, self.b1], [self.a21, self.a22, self.b2]])
        )

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1], m[0, 2], m[1, 2])

    @property
    def matrix(self):
        """The 2x3 matrix ``[A | b]``."""
        return self._m.copy()

    @property
    def is_identity(self):
        return bool(np.array_equal(self._m, np.eye(2, 3)))

    def then(self, other):
        """Transform equal to applying ``self`` first, then ``other``."""
        a = other._m[:, :2] @ self._m[:, :2]
        b = other._m[:, :2] @ self._m[:, 2] + other._m[:, 2]
        return AffineTransform.from_matrix(np.column_stack([a, b]))


IDENTITY = AffineTransform()


def apply_affine(t, points):
    """Apply ``t`` to one ``(x, y)`` point or an (N, 2) array of points."""
    pts = np.asarray(points, dtype=float)
    return pts @ t._m[:, :2].T + t._m[:, 2]
