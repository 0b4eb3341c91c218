"""Unsupervised retinal vessel segmentation from colour fundus images."""

from .config import PipelineConfig
from .errors import DegenerateDataError, DegenerateMaskError, ImageReadError, StageError
from .pipeline import Segmentation, segment_rgb
from .runner import run_dataset, segment_one, sweep

__all__ = ["PipelineConfig", "DegenerateDataError", "DegenerateMaskError", "ImageReadError", "StageError",
           "Segmentation", "segment_rgb", "run_dataset", "segment_one", "sweep"]
__version__ = "0.1.0"
