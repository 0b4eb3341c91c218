"""Synthetic fundus phantoms with exact vessel ground truth."""

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

BACKGROUND_RGB = np.array([0.86, 0.46, 0.20])
VESSEL_ATTENUATION = np.array([0.62, 0.42, 0.55])   # multiplicative, per channel
DISK_RGB = np.array([1.0, 0.92, 0.62])


def _bezier(p, n):
    t = np.linspace(0.0, 1.0, n)[:, None]
    return ((1 - t) ** 3 * p[0] + 3 * (1 - t) ** 2 * t * p[1]
            + 3 * (1 - t) * t ** 2 * p[2] + t ** 3 * p[3])


def _tree_curves(rng, centre, radius, disk, n_vessels):
    """Control polygons radiating from the disk, each with (width, points)."""
    curves = []
    for _ in range(n_vessels):
        ang = rng.uniform(0, 2 * np.pi)
        length = rng.uniform(0.55, 1.25) * radius
        start = disk + rng.normal(0, 0.02 * radius, 2)
        bend = rng.uniform(-0.9, 0.9)
        d0 = np.array([np.sin(ang), np.cos(ang)])
        d1 = np.array([np.sin(ang + bend), np.cos(ang + bend)])
        p = np.stack([start,
                      start + d0 * length / 3,
                      start + (d0 + d1) / 2 * 2 * length / 3,
                      start + d1 * length])
        curves.append((rng.uniform(2.0, 5.0), p))
        # one thinner side branch per main vessel
        q = _bezier(p, 5)[rng.integers(1, 4)]
        bang = ang + bend * 0.5 + rng.choice([-1, 1]) * rng.uniform(0.5, 1.1)
        blen = rng.uniform(0.25, 0.55) * radius
        e0 = np.array([np.sin(bang), np.cos(bang)])
        e1 = np.array([np.sin(bang + rng.uniform(-0.6, 0.6)), np.cos(bang + rng.uniform(-0.6, 0.6))])
        pb = np.stack([q, q + e0 * blen / 3, q + (e0 + e1) * blen / 3, q + e1 * blen])
        curves.append((rng.uniform(1.0, 2.5), pb))
    return curves


def _smooth_noise(rng, size, sigma):
    field = ndimage.gaussian_filter(rng.normal(0, 1, (size, size)), sigma, mode="reflect")
    return field / (field.std() + 1e-12)


def make_phantom(seed, size=512, n_vessels=None, noise=0.02):
    """Render a phantom fundus; returns ``(rgb, truth)``.

    Bezier vessels 1-5 px wide (dark red-brown) over a textured orange
    background with smooth vignetting, a bright optic-disk blob, a circular
    field of view and additive Gaussian noise. ``truth`` is true on every
    pixel within half a vessel width of a centreline, inside the FOV.
    """
    if size < 64:
        raise ValueError("phantom size must be >= 64")
    rng = np.random.default_rng(seed)
    if n_vessels is None:
        n_vessels = int(rng.integers(6, 10))
    scale = size / 512.0

    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    centre = np.array([size / 2 - 0.5, size / 2 - 0.5])
    radius = 0.46 * size
    r = np.hypot(yy - centre[0], xx - centre[1])
    fov = r <= radius

    vignette = 1.0 - 0.25 * (r / radius) ** 2
    texture = 1.0 + 0.03 * _smooth_noise(rng, size, 12 * scale) + 0.015 * _smooth_noise(rng, size, 3 * scale)
    img = BACKGROUND_RGB[None, None, :] * (vignette * texture)[..., None]

    # optic disk offset along a random direction
    od_dir = rng.uniform(0, 2 * np.pi)
    disk = centre + 0.55 * radius * np.array([np.sin(od_dir), np.cos(od_dir)])
    disk_r = 0.075 * size
    dd = np.hypot(yy - disk[0], xx - disk[1])
    disk_alpha = np.clip((disk_r - dd) / (0.25 * disk_r) + 0.5, 0.0, 1.0)
    img = img * (1 - disk_alpha[..., None]) + DISK_RGB[None, None, :] * disk_alpha[..., None]

    truth = np.zeros((size, size), dtype=bool)
    darkness = np.zeros((size, size))
    pix = np.column_stack([yy.ravel(), xx.ravel()])
    for width, ctrl in _tree_curves(rng, centre, radius, disk, n_vessels):
        pts = _bezier(ctrl, max(64, int(np.abs(np.diff(ctrl, axis=0)).sum() * 2)))
        lo = np.floor(pts.min(axis=0) - width - 2).astype(int).clip(0, size - 1)
        hi = np.ceil(pts.max(axis=0) + width + 2).astype(int).clip(0, size - 1)
        box = ((pix[:, 0] >= lo[0]) & (pix[:, 0] <= hi[0])
               & (pix[:, 1] >= lo[1]) & (pix[:, 1] <= hi[1]))
        idx = np.flatnonzero(box)
        dist, _ = cKDTree(pts).query(pix[idx])
        half = width / 2
        truth.ravel()[idx[dist <= half]] = True
        # anti-aliased coverage; thin vessels are also fainter
        cover = np.clip(half + 0.5 - dist, 0.0, 1.0) * min(1.0, 0.55 + 0.15 * width)
        flat = darkness.ravel()
        flat[idx] = np.maximum(flat[idx], cover)
    truth &= fov

    img = img * (1.0 - darkness[..., None] * (1.0 - VESSEL_ATTENUATION[None, None, :]))
    img = img + rng.normal(0, noise, img.shape)
    img[~fov] = 0.0
    return np.clip(img, 0.0, 1.0), truth


def phantom_fov(size):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = size / 2 - 0.5
    return np.hypot(yy - c, xx - c) <= 0.46 * size
