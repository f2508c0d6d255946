"""Standardized fixed-width boxes around mapped target positions."""

from dataclasses import dataclass

import numpy as np

from .density import N_CELLS
from .errors import ConfigError, GeometryDomainError


@dataclass(frozen=True)
class StdBoxConfig:
    c: float = 1.0 / 30.0
    w_min: float = 10.0
    w_max: float = 200.0
    aspect_min: float = 0.2
    aspect_max: float = 10.0
    ema_alpha: float = 0.3

    def __post_init__(self):
        if min(self.c, self.w_min, self.w_max, self.aspect_min, self.aspect_max) <= 0:
            raise ConfigError("standardized-box parameters must be positive")
        if not self.w_min < self.w_max:
            raise ConfigError("need w_min < w_max")
        if not self.aspect_min < self.aspect_max:
            raise ConfigError("need aspect_min < aspect_max")
        if not 0 < self.ema_alpha <= 1:
            raise ConfigError("ema_alpha must lie in (0, 1]")


@dataclass(frozen=True)
class MappedBox:
    """Box in the map plane anchored at its bottom center; extends toward +y."""

    bottom_center: tuple
    width: float
    height: float
    score: float = 1.0
    source_cell: int = 4

    @property
    def aspect(self):
        return self.height / self.width

    @property
    def area(self):
        return self.width * self.height

    def xywh(self):
        x, y = self.bottom_center
        return np.array([x - self.width / 2.0, y, self.width, self.height])


def avg_spacing(positions):
    """Mean gap between sorted positions, or ``None`` when fewer than two are given."""
    pos = np.sort(np.asarray(positions, dtype=float).reshape(-1))
    if len(pos) < 2:
        return None
    return float(np.diff(pos).sum() / (len(pos) - 1))


def std_width(l_arg, a_phi, a_rho, fps, cfg=StdBoxConfig()):
    """Standardized box width for one region, clamped to ``[w_min, w_max]``."""
    if l_arg < 0 or a_phi <= 0 or a_rho <= 0 or fps <= 0:
        raise GeometryDomainError("std_width needs l_arg >= 0 and positive a_phi, a_rho, fps")
    w = l_arg * a_phi / (a_rho * fps * cfg.c)
    return float(np.clip(w, cfg.w_min, cfg.w_max))


def clamp_aspect(aspect, cfg=StdBoxConfig()):
    return np.clip(aspect, cfg.aspect_min, cfg.aspect_max)


def make_std_box(p, w_bar, det_aspect, score, cell, cfg=StdBoxConfig()):
    """Box of width ``w_bar`` and height ``w_bar * aspect`` anchored at map point ``p``."""
    aspect = float(clamp_aspect(det_aspect, cfg))
    return MappedBox(
        bottom_center=(float(p[0]), float(p[1])),
        width=float(w_bar),
        height=float(w_bar) * aspect,
        score=float(score),
        source_cell=int(cell),
    )


class RegionWidths:
    """Per-region smoothed standardized width carried across frames of one sequence."""

    def __init__(self, cfg=StdBoxConfig()):
        self.cfg = cfg
        self.w_bar = np.full(N_CELLS, np.nan)

    def update(self, cells, depths, phis, a_rho, fps):
        """Fold one frame's targets into the per-region widths.

        Args:
            cells: region index per target.
            depths: map-plane depth per target.
            phis: mean mapping coefficient per target.
            a_rho: (9,) density per region, already floored above zero.
            fps: sequence frame rate.

        Returns:
            (9,) array of widths for this frame.
        """
        cells = np.asarray(cells, dtype=int)
        depths = np.asarray(depths, dtype=float)
        phis = np.asarray(phis, dtype=float)
        for n in np.unique(cells):
            sel = cells == n
            l_arg = avg_spacing(depths[sel])
            if l_arg is None:
                continue
            w = std_width(l_arg, float(phis[sel].mean()), float(a_rho[n]), fps, self.cfg)
            prev = self.w_bar[n]
            a = self.cfg.ema_alpha
            self.w_bar[n] = w if np.isnan(prev) else a * w + (1.0 - a) * prev
        return self.current()

    def current(self):
        return np.where(np.isnan(self.w_bar), self.cfg.w_max, self.w_bar)
