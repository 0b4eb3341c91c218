"""Image containers, resizing, colour conversion and field-of-view masks.

Images are plain numpy arrays: a raster is ``(H, W)`` float64 in [0, 1], an
sRGB image is ``(H, W, 3)`` float64 in [0, 1], a Lab image is ``(H, W, 3)``
with L in [0, 100], and masks are ``(H, W)`` bool.
"""

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .components import largest_component
from .errors import DegenerateMaskError, ImageReadError

# sRGB primaries, D65 white, IEC 61966-2-1
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
# white taken from the matrix itself so (1, 1, 1) lands exactly on a = b = 0
D65_WHITE = _RGB_TO_XYZ.sum(axis=1)

_EPS = (6.0 / 29.0) ** 3
_KAPPA = 1.0 / (3.0 * (6.0 / 29.0) ** 2)

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


def as_raster(img):
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D raster, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("raster has zero size")
    return arr


def as_rgb(img):
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("image has zero size")
    return arr


def as_mask(mask, shape=None):
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape[:2]):
        raise ValueError(f"mask shape {m.shape} does not match image shape {tuple(shape[:2])}")
    return m


def _bilinear_axis(n_in, n_out):
    # pixel-centre alignment, same convention as OpenCV INTER_LINEAR
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    i0 = np.floor(pos).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w = pos - i0
    return i0, i1, w


def resize_bilinear(arr, target_w, target_h):
    """Bilinear resize of an (H, W) or (H, W, C) array to (target_h, target_w)."""
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target size must be positive, got {target_w}x{target_h}")
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape[:2]
    if h < 1 or w < 1:
        raise ValueError("source image has zero size")
    r0, r1, wr = _bilinear_axis(h, target_h)
    c0, c1, wc = _bilinear_axis(w, target_w)
    extra = (None,) * (arr.ndim - 2)
    wr = wr[(slice(None), None) + extra]
    wc = wc[(None, slice(None)) + extra]
    top = arr[r0][:, c0] * (1.0 - wc) + arr[r0][:, c1] * wc
    bot = arr[r1][:, c0] * (1.0 - wc) + arr[r1][:, c1] * wc
    return top * (1.0 - wr) + bot * wr


def resize_image(img, target_w, target_h):
    """Resize an sRGB image with bilinear interpolation; output clamped to [0, 1]."""
    img = as_rgb(img)
    return np.clip(resize_bilinear(img, target_w, target_h), 0.0, 1.0)


def resize_nearest(mask, target_w, target_h):
    """Nearest-neighbour resize, used for masks and label images."""
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target size must be positive, got {target_w}x{target_h}")
    mask = np.asarray(mask)
    h, w = mask.shape[:2]
    rows = np.minimum(((np.arange(target_h) + 0.5) * h / target_h).astype(np.intp), h - 1)
    cols = np.minimum(((np.arange(target_w) + 0.5) * w / target_w).astype(np.intp), w - 1)
    return mask[rows][:, cols]


def srgb_to_linear(c):
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c):
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * np.power(np.maximum(c, 0.0031308), 1 / 2.4) - 0.055)


def _lab_f(t):
    return np.where(t > _EPS, np.cbrt(t), t * _KAPPA + 4.0 / 29.0)


def _lab_finv(f):
    return np.where(f > 6.0 / 29.0, f ** 3, (f - 4.0 / 29.0) / _KAPPA)


def rgb_to_lab(img):
    """sRGB in [0, 1] to CIELab under D65."""
    img = as_rgb(img)
    xyz = srgb_to_linear(img) @ _RGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)
    lab = np.empty_like(img)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_to_rgb(lab):
    """CIELab (D65) to sRGB; out-of-gamut channels are clamped to [0, 1]."""
    lab = as_rgb(lab)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = _lab_finv(np.stack([fx, fy, fz], axis=-1)) * D65_WHITE
    rgb = linear_to_srgb(xyz @ _XYZ_TO_RGB.T)
    return np.clip(rgb, 0.0, 1.0)


def weighted_grayscale(img):
    """Luma-weighted grey level 0.299 R + 0.587 G + 0.114 B."""
    img = as_rgb(img)
    wr, wg, wb = GRAY_WEIGHTS
    # this summation order makes equal channels map to themselves exactly
    return wr * img[..., 0] + (wg * img[..., 1] + wb * img[..., 2])


def _check_mask(mask, source):
    if not mask.any():
        raise DegenerateMaskError(f"field-of-view mask from {source} has no true pixels")
    return mask


def read_image(path):
    """Decode an image file to float64 in [0, 1]; RGB files give (H, W, 3)."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "1":
                return np.asarray(im).astype(np.float64)
            if mode == "L":
                return np.asarray(im).astype(np.float64) / 255.0
            if mode in ("I;16", "I"):
                return np.asarray(im).astype(np.float64) / 65535.0
            if mode == "F":
                return np.clip(np.asarray(im).astype(np.float64), 0.0, 1.0)
            arr = np.asarray(im.convert("RGB"))
    except FileNotFoundError as exc:
        raise ImageReadError(f"image not found: {path}") from exc
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageReadError(f"cannot decode image {path}: {exc}") from exc
    return arr.astype(np.float64) / 255.0


def read_rgb(path):
    arr = read_image(path)
    if arr.ndim == 2:
        arr = np.repeat(arr[..., None], 3, axis=2)
    return arr


def read_gray(path):
    arr = read_image(path)
    if arr.ndim == 3:
        arr = weighted_grayscale(arr)
    return arr


def load_fov_mask(path):
    """Read a field-of-view mask file; any nonzero pixel is inside."""
    arr = read_image(path)
    if arr.ndim == 3:
        arr = arr.max(axis=2)
    return _check_mask(arr > 0, path)


def estimate_fov_mask(img, threshold=0.1):
    """Field of view from the red channel: threshold, keep the largest blob, fill holes."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    img = as_rgb(img)
    bright = img[..., 0] > threshold
    if not bright.any():
        raise DegenerateMaskError("no pixel exceeds the field-of-view threshold")
    mask = ndimage.binary_fill_holes(largest_component(bright, connectivity=8))
    return _check_mask(mask, "estimate")


def extend_outside(raster, mask, sigma=8.0):
    """Replace out-of-mask pixels by a smooth continuation of the in-mask values.

    Each outside pixel first copies its nearest inside pixel; the copied
    region is then Gaussian-smoothed so the continuation carries no texture.
    """
    raster = as_raster(raster)
    mask = as_mask(mask, raster.shape)
    if mask.all():
        return raster.copy()
    if not mask.any():
        raise DegenerateMaskError("cannot extend from an empty mask")
    _, (iy, ix) = ndimage.distance_transform_edt(~mask, return_indices=True)
    filled = raster[iy, ix]
    smooth = ndimage.gaussian_filter(filled, sigma, mode="nearest")
    return np.where(mask, raster, smooth)


def to_uint8(raster):
    return np.round(np.clip(raster, 0.0, 1.0) * 255.0).astype(np.uint8)


def normalize01(raster):
    raster = np.asarray(raster, dtype=np.float64)
    lo, hi = float(raster.min()), float(raster.max())
    if hi <= lo:
        return np.zeros_like(raster)
    return (raster - lo) / (hi - lo)


def save_png(path, arr):
    """Write a [0, 1] raster, RGB image or bool mask as an 8-bit PNG."""
    arr = np.asarray(arr)
    if arr.dtype == bool:
        arr = arr.astype(np.float64)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(arr)).save(path, format="PNG")
