"""Wrapping-based fast discrete curvelet transform and detail boosting.

The frequency plane is split into concentric square coronae (Meyer-type
radial profile) and each corona into angular wedges. Every window product
``radial * angular`` is sampled on the FFT grid; the windows square-sum to
one, so by wrapping each wedge's support onto a small rectangle without
collisions the transform is a tight frame and its adjoint is its inverse.

Coefficients are a list over scales (0 = coarse, J-1 = finest) of lists of
complex 2-D arrays, one per wedge.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .imgcore import as_mask, as_raster, normalize01, save_png


@dataclass(frozen=True)
class CurveletParams:
    num_scales: int | None = None   # None: ceil(log2 N) - 3 for an N x N canvas
    num_angles_coarse: int = 16
    kappa_boost: float = 5.0
    inverse_mode: str = "signed"    # "signed" or "absolute" detail image before the product

    def __post_init__(self):
        if self.num_scales is not None and self.num_scales < 2:
            raise ValueError("num_scales must be >= 2")
        if self.num_angles_coarse < 4 or self.num_angles_coarse % 4:
            raise ValueError("num_angles_coarse must be a positive multiple of 4")
        if self.kappa_boost <= 0:
            raise ValueError("kappa_boost must be positive")
        if self.inverse_mode not in ("signed", "absolute"):
            raise ValueError(f"unknown inverse_mode {self.inverse_mode!r}")

    def scales_for(self, n):
        if self.num_scales is not None:
            return self.num_scales
        return max(2, math.ceil(math.log2(n)) - 3)


def _smooth_step(y):
    y = np.clip(y, 0.0, 1.0)
    return y ** 4 * (35.0 - 84.0 * y + 70.0 * y ** 2 - 20.0 * y ** 3)


def rising_edge(x):
    """0 below -1, 1 above 1, with rising_edge(x)**2 + rising_edge(-x)**2 == 1."""
    return np.sin(0.5 * np.pi * _smooth_step((np.asarray(x, dtype=np.float64) + 1.0) / 2.0))


def _lowpass_1d(k, m):
    # flat on |k| <= m, zero beyond 2m
    return rising_edge((1.5 * m - np.abs(k)) / (0.5 * m))


def angles_per_scale(num_scales, num_angles_coarse):
    counts = [1]
    for j in range(1, num_scales - 1):
        counts.append(num_angles_coarse * 2 ** math.ceil((j - 1) / 2))
    counts.append(1)
    return counts


def _wrap_layout(k1, k2):
    """Rectangle (rows, cols) and flat positions that wrap the points injectively."""
    best = None
    for a, b, swap in ((k1, k2, False), (k2, k1, True)):
        _, inv = np.unique(a, return_inverse=True)
        lo = np.full(inv.max() + 1, np.iinfo(np.int64).max)
        hi = np.full(inv.max() + 1, np.iinfo(np.int64).min)
        np.minimum.at(lo, inv, b)
        np.maximum.at(hi, inv, b)
        along = int(a.max() - a.min() + 1)
        across = int((hi - lo).max() + 1)
        if best is None or along * across < best[0]:
            best = (along * across, along, across, swap)
    _, along, across, swap = best
    rows, cols = (across, along) if swap else (along, across)
    flat = np.mod(k1, rows) * cols + np.mod(k2, cols)
    return (rows, cols), flat


class CurveletTransform:
    """Precomputed window tables for one canvas size; immutable once built."""

    def __init__(self, n, num_scales, num_angles_coarse=16):
        if n < 8 or n % 2:
            raise ValueError(f"canvas size must be even and >= 8, got {n}")
        self.n = n
        self.num_scales = num_scales
        self.num_angles_coarse = num_angles_coarse
        self.angles = angles_per_scale(num_scales, num_angles_coarse)

        k = np.rint(np.fft.fftfreq(n) * n).astype(np.int64)
        K1, K2 = np.meshgrid(k, k, indexing="ij")
        K1, K2 = K1.ravel(), K2.ravel()
        theta = np.mod(np.arctan2(K1, K2), 2 * np.pi)

        cutoffs = [n / 3.0 / 2 ** (num_scales - 1 - j) for j in range(num_scales - 1)]
        lowpass = [_lowpass_1d(K1, m) * _lowpass_1d(K2, m) for m in cutoffs]
        radial = [lowpass[0]]
        for j in range(1, num_scales - 1):
            radial.append(np.sqrt(np.maximum(lowpass[j] ** 2 - lowpass[j - 1] ** 2, 0.0)))
        radial.append(np.sqrt(np.maximum(1.0 - lowpass[-1] ** 2, 0.0)))

        # per wedge: (support index into the n*n grid, window values, shape, wrapped index)
        self._wedges = []
        for j, count in enumerate(self.angles):
            support = np.flatnonzero(radial[j] > 0)
            scale = []
            if count == 1:
                window = radial[j][support]
                scale.append(self._layout(support, window, K1, K2))
            else:
                width = 2 * np.pi / count
                overlap = width / 2
                for l in range(count):
                    t = np.mod(theta[support] - l * width + overlap, 2 * np.pi) - overlap
                    ang = rising_edge(t / overlap) * rising_edge((width - t) / overlap)
                    keep = ang > 0
                    idx = support[keep]
                    scale.append(self._layout(idx, radial[j][idx] * ang[keep], K1, K2))
            self._wedges.append(scale)

    @staticmethod
    def _layout(idx, window, K1, K2):
        shape, flat = _wrap_layout(K1[idx], K2[idx])
        if len(np.unique(flat)) != len(flat):
            raise AssertionError("wedge wrapping is not injective")
        return idx, window, shape, flat

    def shapes(self):
        return [[w[2] for w in scale] for scale in self._wedges]

    def window_energy(self):
        """Sum of squared windows over all wedges at each frequency (should be 1)."""
        total = np.zeros(self.n * self.n)
        for scale in self._wedges:
            for idx, window, _, _ in scale:
                total[idx] += window ** 2
        return total.reshape(self.n, self.n)

    def forward(self, x):
        X = np.fft.fft2(x, norm="ortho").ravel()
        coeffs = []
        for scale in self._wedges:
            out = []
            for idx, window, shape, flat in scale:
                a = np.zeros(shape[0] * shape[1], dtype=np.complex128)
                a[flat] = window * X[idx]
                out.append(np.fft.ifft2(a.reshape(shape), norm="ortho"))
            coeffs.append(out)
        return coeffs

    def inverse(self, coeffs):
        self.check_schedule(coeffs)
        X = np.zeros(self.n * self.n, dtype=np.complex128)
        for scale, cscale in zip(self._wedges, coeffs):
            for (idx, window, _, flat), c in zip(scale, cscale):
                a = np.fft.fft2(c, norm="ortho").ravel()
                X[idx] += window * a[flat]
        return np.fft.ifft2(X.reshape(self.n, self.n), norm="ortho")

    def check_schedule(self, coeffs):
        if len(coeffs) != self.num_scales:
            raise ValueError(f"expected {self.num_scales} scales, got {len(coeffs)}")
        for j, (scale, cscale) in enumerate(zip(self._wedges, coeffs)):
            if len(cscale) != len(scale):
                raise ValueError(f"scale {j}: expected {len(scale)} wedges, got {len(cscale)}")
            for l, (w, c) in enumerate(zip(scale, cscale)):
                if np.shape(c) != w[2]:
                    raise ValueError(f"wedge ({j}, {l}): expected shape {w[2]}, got {np.shape(c)}")


@lru_cache(maxsize=8)
def get_transform(n, num_scales, num_angles_coarse):
    return CurveletTransform(n, num_scales, num_angles_coarse)


def _transform_for(n, p):
    return get_transform(n, p.scales_for(n), p.num_angles_coarse)


def _check_canvas(img):
    img = as_raster(img)
    h, w = img.shape
    if h != w or h % 2:
        raise ValueError(f"curvelet input must be square with even size, got {h}x{w}")
    return img


def fdct_forward(img, p=CurveletParams()):
    img = _check_canvas(img)
    return _transform_for(img.shape[0], p).forward(img)


def fdct_inverse(coeffs, p=CurveletParams(), n=None):
    """Inverse transform; the canvas size defaults to the finest band's grid."""
    if n is None:
        n = np.shape(coeffs[-1][0])[0]
    x = _transform_for(n, p).inverse(coeffs)
    residue = np.abs(x.imag).max()
    scale = max(np.abs(x.real).max(), 1.0)
    if residue > 1e-8 * scale:
        # complex coefficients that did not come from a real image
        raise ValueError(f"inverse has a non-negligible imaginary part ({residue:.3g})")
    return x.real


def fdct_inverse_complex(coeffs, p=CurveletParams(), n=None):
    if n is None:
        n = np.shape(coeffs[-1][0])[0]
    return _transform_for(n, p).inverse(coeffs)


def boost_details(coeffs, kappa):
    """Zero the coarse band and multiply every detail wedge by ``kappa``."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    out = [[np.zeros_like(c) for c in coeffs[0]]]
    out.extend([c * kappa for c in scale] for scale in coeffs[1:])
    return out


def canvas_size(h, w):
    return 1 << max(3, math.ceil(math.log2(max(h, w))))


def detail_image(img, p=CurveletParams()):
    """Boosted detail of a raster of any shape via a zero-padded square canvas."""
    img = as_raster(img)
    h, w = img.shape
    n = canvas_size(h, w)
    top, left = (n - h) // 2, (n - w) // 2
    canvas = np.zeros((n, n))
    canvas[top:top + h, left:left + w] = img
    coeffs = boost_details(fdct_forward(canvas, p), p.kappa_boost)
    return fdct_inverse(coeffs, p)[top:top + h, left:left + w]


def edge_enhance(weighted, mask, p=CurveletParams()):
    """Vessel-edge image: boosted curvelet detail times the grey image, in [0, 1]."""
    weighted = as_raster(weighted)
    mask = as_mask(mask, weighted.shape)
    masked = np.where(mask, weighted, 0.0)
    detail = detail_image(masked, p)
    if p.inverse_mode == "absolute":
        detail = np.abs(detail)
    return np.where(mask, np.clip(detail * masked, 0.0, 1.0), 0.0)


def dump_coefficients(coeffs, out_dir):
    """Write |coefficient| maps per (scale, wedge) as PNG files."""
    out_dir = Path(out_dir)
    paths = []
    for j, scale in enumerate(coeffs):
        for l, c in enumerate(scale):
            path = out_dir / f"curvelet_s{j}_w{l:02d}.png"
            save_png(path, normalize01(np.abs(c)))
            paths.append(path)
    return paths
