"""Target region density over a 3x3 image partition and adaptive low-score thresholds."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, GeometryDomainError

N_CELLS = 9


class ModulationMode(str, Enum):
    AS_WRITTEN = "as_written"
    INVERSE = "inverse"


@dataclass(frozen=True)
class DensityConfig:
    tau_low: float = 0.3
    rho_floor: float = 0.5
    varpi_top: float = 1.0
    varpi_bottom: float = 2.0
    modulation_mode: ModulationMode = ModulationMode.AS_WRITTEN

    def __post_init__(self):
        object.__setattr__(self, "modulation_mode", ModulationMode(self.modulation_mode))
        if not 0 < self.tau_low < 1:
            raise ConfigError(f"tau_low must lie in (0, 1), got {self.tau_low}")
        if not 0 < self.rho_floor <= 1:
            raise ConfigError(f"rho_floor must lie in (0, 1], got {self.rho_floor}")
        if not self.varpi_bottom >= self.varpi_top > 0:
            raise ConfigError("need varpi_bottom >= varpi_top > 0")


@dataclass(frozen=True)
class DensityMatrix:
    """Per-cell densities, row-major with row 0 at the top of the image."""

    rho: np.ndarray
    raw_rho: np.ndarray = field(default_factory=lambda: np.zeros(N_CELLS))

    def __post_init__(self):
        for name in ("rho", "raw_rho"):
            arr = np.array(getattr(self, name), dtype=float).reshape(N_CELLS)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def grid(self):
        return self.rho.reshape(3, 3)


def cell_of(img_w, img_h, x, y):
    """Row-major cell index of bottom-origin pixel ``(x, y)``.

    Boundary points go to the lower-index cell. Works elementwise on arrays.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(x > img_w) or np.any(y < 0) or np.any(y > img_h):
        raise GeometryDomainError("point outside the image")
    col = (x > img_w / 3.0).astype(int) + (x > 2.0 * img_w / 3.0)
    down = img_h - y  # distance from the top edge
    row = (down > img_h / 3.0).astype(int) + (down > 2.0 * img_h / 3.0)
    return row * 3 + col


def _cell_edges(extent):
    return np.array([0.0, extent / 3.0, 2.0 * extent / 3.0, float(extent)])


def varpi(img_h, top_dist, cfg):
    """Vertical weight at ``top_dist`` pixels below the top edge (linear ramp)."""
    frac = np.clip(np.asarray(top_dist, dtype=float) / img_h, 0.0, 1.0)
    return cfg.varpi_top + (cfg.varpi_bottom - cfg.varpi_top) * frac


def accumulate(boxes, scores, img_w, img_h, cfg=DensityConfig()):
    """Raw region densities from high-score boxes.

    Args:
        boxes: (N, 4) array of ``(x, y, w, h)`` with a top-left image origin.
        scores: (N,) detection scores.

    Returns:
        DensityMatrix whose ``raw_rho`` holds the weighted sums and ``rho``
        the normalized values.
    """
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    scores = np.asarray(scores, dtype=float).reshape(-1)
    raw = np.zeros(N_CELLS)
    if len(boxes):
        x0, y0 = boxes[:, 0], boxes[:, 1]
        x1, y1 = x0 + boxes[:, 2], y0 + boxes[:, 3]
        area = boxes[:, 2] * boxes[:, 3]
        xe, ye = _cell_edges(img_w), _cell_edges(img_h)
        # (N, 3) overlaps per column and per row band.
        ox0 = np.maximum(x0[:, None], xe[None, :-1])
        ox1 = np.minimum(x1[:, None], xe[None, 1:])
        oy0 = np.maximum(y0[:, None], ye[None, :-1])
        oy1 = np.minimum(y1[:, None], ye[None, 1:])
        ow = np.clip(ox1 - ox0, 0.0, None)
        oh = np.clip(oy1 - oy0, 0.0, None)
        weight = varpi(img_h, 0.5 * (oy0 + oy1), cfg)
        # frac[n, r, c] = share of box n inside row band r, column c.
        frac = oh[:, :, None] * ow[:, None, :] / area[:, None, None]
        contrib = frac * scores[:, None, None] * weight[:, :, None]
        raw = contrib.sum(axis=0).reshape(N_CELLS)
    return normalize(raw)


def normalize(raw):
    """Divide by the largest cell value; an all-zero input yields all ones."""
    raw = np.asarray(getattr(raw, "raw_rho", raw), dtype=float).reshape(N_CELLS)
    rho_max = raw.max()
    if rho_max <= 0:
        return DensityMatrix(rho=np.ones(N_CELLS), raw_rho=raw)
    return DensityMatrix(rho=raw / rho_max, raw_rho=raw)


def effective_density(rho, cfg=DensityConfig()):
    """Density clamped into ``[rho_floor, 1]``."""
    return np.clip(rho, cfg.rho_floor, 1.0)


def low_threshold(density, cell, cfg=DensityConfig()):
    """Score a low-band detection in ``cell`` must exceed to be kept."""
    rho = effective_density(density.rho[cell], cfg)
    if cfg.modulation_mode is ModulationMode.AS_WRITTEN:
        return rho * cfg.tau_low
    return cfg.tau_low * (2.0 - rho)
