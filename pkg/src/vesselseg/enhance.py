"""Contrast enhancement of the Lab lightness channel.

CLAHE lifts local contrast, Perona-Malik diffusion then smooths the noise
that the equalization amplified while keeping vessel edges.
"""

import math
from dataclasses import dataclass

import numpy as np

from .imgcore import as_raster, lab_to_rgb, rgb_to_lab


@dataclass(frozen=True)
class ClaheParams:
    tiles_x: int = 8
    tiles_y: int = 8
    clip_limit: float = 0.005
    n_bins: int = 256

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ValueError("CLAHE tile counts must be >= 1")
        if not 0.0 < self.clip_limit <= 1.0:
            raise ValueError(f"clip_limit must lie in (0, 1], got {self.clip_limit}")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")


@dataclass(frozen=True)
class DiffusionParams:
    iterations: int = 10
    kappa_conduction: float = 15.0 / 255.0
    lambda_step: float = 0.25
    conduction_kind: str = "exponential"

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.lambda_step <= 0.25:
            raise ValueError(f"lambda_step must lie in (0, 0.25], got {self.lambda_step}")
        if self.kappa_conduction <= 0:
            raise ValueError("kappa_conduction must be positive")
        if self.conduction_kind not in ("exponential", "rational"):
            raise ValueError(f"unknown conduction kind {self.conduction_kind!r}")


def _clip_count(n_pixels, p):
    # normalised clip limit: 0 -> flat histogram, 1 -> no clipping at all
    min_clip = math.ceil(n_pixels / p.n_bins)
    return min_clip + round(p.clip_limit * (n_pixels - min_clip))


def tile_mappings(bins, tiles_y, tiles_x, p):
    """Per-tile clipped-CDF lookup tables, shape (tiles_y, tiles_x, n_bins)."""
    h, w = bins.shape
    th, tw = h // tiles_y, w // tiles_x
    tile_id = (np.arange(h) // th)[:, None] * tiles_x + (np.arange(w) // tw)[None, :]
    hist = np.bincount((tile_id * p.n_bins + bins).ravel(),
                       minlength=tiles_y * tiles_x * p.n_bins)
    hist = hist.reshape(tiles_y, tiles_x, p.n_bins).astype(np.float64)

    n_pixels = th * tw
    clip = _clip_count(n_pixels, p)
    excess = np.maximum(hist - clip, 0.0).sum(axis=2, keepdims=True)
    hist = np.minimum(hist, clip) + excess / p.n_bins
    return np.cumsum(hist, axis=2) / n_pixels


def _interp_axis(n, tile, n_tiles, offset):
    pos = (np.arange(n) + offset + 0.5) / tile - 0.5
    pos = np.clip(pos, 0.0, n_tiles - 1)
    i0 = np.floor(pos).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_tiles - 1)
    return i0, i1, pos - i0


def clahe(img, p=ClaheParams()):
    """Contrast-limited adaptive histogram equalization of a [0, 1] raster.

    Tile mappings are clipped cumulative histograms, blended bilinearly
    between tile centres. A constant image has no contrast to redistribute
    and is returned unchanged.
    """
    img = as_raster(img)
    h, w = img.shape
    if p.tiles_y > h or p.tiles_x > w:
        raise ValueError(f"tile grid {p.tiles_y}x{p.tiles_x} exceeds image {h}x{w}")
    if img.min() == img.max():
        return img.copy()

    th, tw = -(-h // p.tiles_y), -(-w // p.tiles_x)
    pad_y, pad_x = th * p.tiles_y - h, tw * p.tiles_x - w
    top, left = pad_y // 2, pad_x // 2
    padded = np.pad(img, ((top, pad_y - top), (left, pad_x - left)), mode="symmetric")
    bins = np.rint(np.clip(padded, 0.0, 1.0) * (p.n_bins - 1)).astype(np.intp)
    lut = tile_mappings(bins, p.tiles_y, p.tiles_x, p)

    y0, y1, wy = _interp_axis(h, th, p.tiles_y, top)
    x0, x1, wx = _interp_axis(w, tw, p.tiles_x, left)
    b = bins[top:top + h, left:left + w]
    Y0, Y1 = y0[:, None], y1[:, None]
    X0, X1 = x0[None, :], x1[None, :]
    wy, wx = wy[:, None], wx[None, :]
    upper = (1.0 - wx) * lut[Y0, X0, b] + wx * lut[Y0, X1, b]
    lower = (1.0 - wx) * lut[Y1, X0, b] + wx * lut[Y1, X1, b]
    return np.clip((1.0 - wy) * upper + wy * lower, 0.0, 1.0)


def conduction(grad, p):
    r = (grad / p.kappa_conduction) ** 2
    if p.conduction_kind == "exponential":
        return np.exp(-r)
    return 1.0 / (1.0 + r)


def anisotropic_diffusion(img, p=DiffusionParams()):
    """Explicit 4-neighbour Perona-Malik diffusion with replicated borders."""
    u = as_raster(img).copy()
    lo, hi = u.min(), u.max()
    for _ in range(p.iterations):
        dv = np.diff(u, axis=0)
        dh = np.diff(u, axis=1)
        fv = conduction(dv, p) * dv
        fh = conduction(dh, p) * dh
        delta = np.zeros_like(u)
        delta[:-1, :] += fv
        delta[1:, :] -= fv
        delta[:, :-1] += fh
        delta[:, 1:] -= fh
        u += p.lambda_step * delta
    # the update is a convex combination for lambda <= 0.25; clip only round-off
    return np.clip(u, lo, hi)


def enhance_lab(lab, clahe_params=ClaheParams(), diffusion_params=DiffusionParams()):
    """Equalize and denoise the L plane of a Lab image; a and b are copied through."""
    lightness = np.clip(lab[..., 0] / 100.0, 0.0, 1.0)
    lightness = anisotropic_diffusion(clahe(lightness, clahe_params), diffusion_params)
    out = lab.copy()
    out[..., 0] = lightness * 100.0
    return out


def enhance_contrast(img, clahe_params=ClaheParams(), diffusion_params=DiffusionParams()):
    """sRGB -> Lab, enhance L, Lab -> sRGB."""
    return lab_to_rgb(enhance_lab(rgb_to_lab(img), clahe_params, diffusion_params))
