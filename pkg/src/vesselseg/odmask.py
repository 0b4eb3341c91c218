"""Optic-disk suppression by background subtraction and complement."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import as_mask, as_raster


@dataclass(frozen=True)
class BackgroundParams:
    median_window: int = 20

    def __post_init__(self):
        if self.median_window < 3:
            raise ValueError("median_window must be >= 3")


def median_rank(window):
    """Sorted position of the median; the lower middle for even counts."""
    return (window * window - 1) // 2


def estimate_background(weighted, p=BackgroundParams()):
    """Sliding median background on 8-bit quantised intensities.

    For an even window ``w`` the window spans offsets ``-w//2 .. w//2 - 1``
    around the output pixel; borders are replicated.
    """
    weighted = as_raster(weighted)
    w = p.median_window
    if w > min(weighted.shape):
        raise ValueError(f"median window {w} exceeds image size {weighted.shape}")
    q = np.rint(np.clip(weighted, 0.0, 1.0) * 255.0).astype(np.uint8)
    med = ndimage.rank_filter(q, rank=median_rank(w), size=w, mode="nearest")
    return med.astype(np.float64) / 255.0


def threshold_mask(weighted, bg):
    """True where the image is at or below its background."""
    weighted = as_raster(weighted)
    bg = as_raster(bg)
    if weighted.shape != bg.shape:
        raise ValueError(f"shape mismatch {weighted.shape} vs {bg.shape}")
    return (weighted - bg) <= 0


def remove_od(edge, t):
    """Complement of the saturating difference ``edge - t``."""
    edge = as_raster(edge)
    t = as_mask(t, edge.shape)
    return 1.0 - np.clip(edge - t.astype(np.float64), 0.0, 1.0)
