"""End-to-end segmentation of one fundus image."""

from dataclasses import dataclass, field

import numpy as np

from .config import REFERENCE_AREA, PipelineConfig
from .curvelet import edge_enhance
from .enhance import enhance_contrast
from .errors import StageError
from .fcm import cluster_pixels, select_cluster
from .imgcore import (as_mask, estimate_fov_mask, extend_outside, resize_image, resize_nearest,
                      weighted_grayscale)
from .odmask import estimate_background, remove_od, threshold_mask
from .postproc import postprocess

# debug dump names, in pipeline order
STAGE_NAMES = ("resized", "enhanced", "weighted", "edge", "od_removed", "fcm", "final")


@dataclass
class Segmentation:
    mask: np.ndarray                 # final vessel mask at working resolution
    fov: np.ndarray                  # field of view at working resolution
    native_fov: np.ndarray
    stages: dict = field(default_factory=dict)
    fcm_result: object = None

    @property
    def native_shape(self):
        return self.native_fov.shape

    def native_mask(self):
        return to_native(self.mask, self.native_fov)


def to_native(mask, native_fov):
    """Nearest-neighbour upsampling to native size, restricted to the native FOV."""
    h, w = native_fov.shape
    return resize_nearest(mask, w, h) & native_fov


class _Stage:
    def __init__(self, name, image_id):
        self.name, self.image_id = name, image_id

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, self.image_id, exc) from exc
        return False


def prepare(rgb, fov, config, image_id="image"):
    """Resize to working resolution; returns (resized, working fov, native fov)."""
    with _Stage("fov", image_id):
        if fov is None:
            fov = estimate_fov_mask(rgb, config.fov_threshold)
        fov = as_mask(fov, rgb.shape)
    with _Stage("resize", image_id):
        resized = resize_image(rgb, config.working_width, config.working_height)
        fov_w = resize_nearest(fov, config.working_width, config.working_height)
    return resized, fov_w, fov


def vessel_gray(resized, fov, config, image_id="image"):
    """Contrast-enhanced weighted grey image, polarity applied, zero outside the FOV."""
    with _Stage("enhance", image_id):
        enhanced = enhance_contrast(resized, config.clahe, config.diffusion)
    with _Stage("grayscale", image_id):
        gray = weighted_grayscale(enhanced)
        if config.vessel_polarity == "bright":
            gray = 1.0 - gray
        gray = np.where(fov, gray, 0.0)
    return enhanced, gray


def _stage_input(gray, fov, config):
    if config.fov_fill == "extend":
        return extend_outside(gray, fov), np.ones_like(fov)
    return gray, fov


def od_removed(gray, fov, config, image_id="image"):
    """Edge enhancement followed by optic-disk suppression; the FCM input."""
    src, support = _stage_input(gray, fov, config)
    with _Stage("edge", image_id):
        edge = np.where(fov, edge_enhance(src, support, config.curvelet), 0.0)
    with _Stage("od_removal", image_id):
        bg = estimate_background(src, config.background)
        out = remove_od(edge, threshold_mask(src, bg))
    return edge, out


def scaled_morph(config):
    area = config.working_width * config.working_height
    return config.morph.scaled_to(area / REFERENCE_AREA)


def segment_rgb(rgb, config=PipelineConfig(), fov=None, image_id="image", keep_stages=False):
    """Run every stage on an in-memory sRGB image."""
    resized, fov_w, fov = prepare(rgb, fov, config, image_id)
    enhanced, gray = vessel_gray(resized, fov_w, config, image_id)
    edge, out = od_removed(gray, fov_w, config, image_id)
    with _Stage("fcm", image_id):
        labels, result = cluster_pixels(out, fov_w, config.fcm)
        vessel = select_cluster(labels, result, config.cluster_select)
    with _Stage("postprocess", image_id):
        final = postprocess(vessel, fov_w, scaled_morph(config))
    seg = Segmentation(final, fov_w, fov, fcm_result=result)
    if keep_stages:
        seg.stages = dict(zip(STAGE_NAMES, (resized, enhanced, gray, edge, out, vessel, final)))
    return seg
