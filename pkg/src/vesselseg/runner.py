"""Dataset runs, reports and parameter sweeps."""

import csv
import dataclasses
import itertools
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as config_io
from .config import PipelineConfig
from .errors import StageError
from .fcm import ClusterSelect, cluster_pixels, select_cluster, write_trace_csv
from .imgcore import load_fov_mask, normalize01, read_gray, read_rgb, resize_nearest, save_png, weighted_grayscale
from .metrics import Metrics, confusion, mean_metrics, metrics, save_overlay, write_metrics_csv
from .pipeline import _Stage, od_removed, prepare, scaled_morph, segment_rgb, to_native, vessel_gray
from .postproc import postprocess

log = logging.getLogger(__name__)

# published DRIVE test-set figures, printed next to achieved numbers
REFERENCE_METRICS = Metrics(sensitivity=0.7386, specificity=0.9769, accuracy=0.9518)
SWEEP_AXES = ("kappa", "rank", "min_area", "dilation_radius")


def load_inputs(image_path, fov_path=None, truth_path=None, image_id="image"):
    """Decode image, optional FOV mask and optional truth; failures raise StageError('load')."""
    with _Stage("load", image_id):
        rgb = read_rgb(image_path)
        fov = load_fov_mask(fov_path) if fov_path else None
        truth = read_gray(truth_path) > 0.5 if truth_path else None
    if truth is not None and truth.shape != rgb.shape[:2]:
        raise StageError("load", image_id,
                         ValueError(f"truth {truth_path} has shape {truth.shape}, image {rgb.shape[:2]}"))
    return rgb, fov, truth


def _dump_stages(seg, image_id, out_dir):
    for name, arr in seg.stages.items():
        arr = np.asarray(arr)
        if arr.dtype != bool and arr.ndim == 2:
            arr = normalize01(arr)
        save_png(out_dir / f"{image_id}_{name}.png", arr)


def segment_one(image_path, config=PipelineConfig(), fov_path=None, image_id=None, out_dir=None):
    """Segment one image file; writes ``<id>_mask.png`` (native size) when an output dir is set."""
    image_id = image_id or Path(image_path).stem
    rgb, fov, _ = load_inputs(image_path, fov_path, image_id=image_id)
    seg = segment_rgb(rgb, config, fov, image_id, keep_stages=config.debug_stages)
    out_dir = out_dir if out_dir is not None else config.output_dir
    if out_dir is not None:
        out_dir = Path(out_dir)
        save_png(out_dir / f"{image_id}_mask.png", seg.native_mask())
        if config.debug_stages:
            _dump_stages(seg, image_id, out_dir / "stages")
            write_trace_csv(seg.fcm_result, out_dir / "stages" / f"{image_id}_fcm_trace.csv")
    return seg


def score(mask, native_fov, fov_w, truth, config):
    """Confusion counts of a working-resolution mask at the configured evaluation resolution."""
    if config.eval_resolution == "native":
        return confusion(to_native(mask, native_fov), truth, native_fov)
    t = resize_nearest(truth, config.working_width, config.working_height)
    return confusion(mask, t, fov_w)


@dataclass
class ImageOutcome:
    image_id: str
    counts: object = None      # ConfusionCounts, None without truth or on failure
    seconds: float = 0.0
    error: str | None = None

    @property
    def metrics(self):
        return None if self.counts is None else metrics(self.counts)


@dataclass
class RunReport:
    outcomes: list
    mean: Metrics | None

    @property
    def failures(self):
        return [o for o in self.outcomes if o.error is not None]


def _fmt(x):
    return "nan" if x is None or math.isnan(x) else f"{x:.4f}"


def summary_text(report):
    done = len(report.outcomes) - len(report.failures)
    lines = [f"images: {len(report.outcomes)}  segmented: {done}  failed: {len(report.failures)}"]
    if report.mean is not None:
        m, r = report.mean, REFERENCE_METRICS
        lines += ["            SN      SP      Acc",
                  f"achieved   {_fmt(m.sensitivity)}  {_fmt(m.specificity)}  {_fmt(m.accuracy)}",
                  f"reference  {_fmt(r.sensitivity)}  {_fmt(r.specificity)}  {_fmt(r.accuracy)}"]
    return "\n".join(lines) + "\n"


def _run_record(rec, config, out_dir):
    t0 = time.perf_counter()
    try:
        rgb, fov, truth = load_inputs(rec.image_path, rec.fov_path, rec.truth_path, rec.image_id)
        seg = segment_rgb(rgb, config, fov, rec.image_id, keep_stages=config.debug_stages)
        native = seg.native_mask()
        save_png(out_dir / "masks" / f"{rec.image_id}_mask.png", native)
        if config.debug_stages:
            _dump_stages(seg, rec.image_id, out_dir / "stages")
            write_trace_csv(seg.fcm_result, out_dir / "stages" / f"{rec.image_id}_fcm_trace.csv")
        counts = None
        if truth is not None:
            counts = score(seg.mask, seg.native_fov, seg.fov, truth, config)
            save_overlay(out_dir / "overlays" / f"{rec.image_id}_overlay.png",
                         native, truth, seg.native_fov, weighted_grayscale(rgb))
        return ImageOutcome(rec.image_id, counts, time.perf_counter() - t0)
    except StageError as exc:
        log.error("%s", exc)
        return ImageOutcome(rec.image_id, None, time.perf_counter() - t0, str(exc))


def write_report(report, out_dir):
    out_dir = Path(out_dir)
    rows = [(o.image_id, o.counts, o.metrics) for o in report.outcomes]
    write_metrics_csv(out_dir / "metrics.csv", rows, report.mean)
    with open(out_dir / "failures.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_id", "error"])
        for o in report.failures:
            w.writerow([o.image_id, o.error])
    # wall-clock times vary run to run, so they live apart from the metrics
    with open(out_dir / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_id", "seconds"])
        for o in report.outcomes:
            w.writerow([o.image_id, f"{o.seconds:.3f}"])
    (out_dir / "summary.txt").write_text(summary_text(report))


def run_dataset(manifest, config=PipelineConfig(), out_dir=None, threads=1):
    """Segment every record, evaluate where truth exists and write the report files."""
    if not manifest.records:
        raise ValueError("manifest has no records")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    out_dir = Path(out_dir if out_dir is not None else config.output_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        outcomes = list(pool.map(lambda r: _run_record(r, config, out_dir), manifest.records))
    scored = [o.metrics for o in outcomes if o.counts is not None]
    report = RunReport(outcomes, mean_metrics(scored) if scored else None)
    write_report(report, out_dir)
    return report


def apply_point(config, point):
    """Config with one sweep grid point substituted."""
    morph = config.morph
    if "min_area" in point:
        morph = dataclasses.replace(morph, min_component_area=int(point["min_area"]))
    if "dilation_radius" in point:
        morph = dataclasses.replace(morph, dilation_radius=int(point["dilation_radius"]))
    curvelet = config.curvelet
    if "kappa" in point:
        curvelet = dataclasses.replace(curvelet, kappa_boost=float(point["kappa"]))
    select = ClusterSelect(int(point["rank"])) if "rank" in point else config.cluster_select
    return config.replace(curvelet=curvelet, cluster_select=select, morph=morph)


def expand_grid(grid, config=PipelineConfig()):
    """Cartesian product of the grid axes; missing axes take the config's value."""
    unknown = set(grid) - set(SWEEP_AXES)
    if unknown:
        raise ValueError(f"unknown sweep axes {sorted(unknown)}; expected a subset of {SWEEP_AXES}")
    defaults = {"kappa": config.curvelet.kappa_boost, "rank": config.cluster_select.rank,
                "min_area": config.morph.min_component_area,
                "dilation_radius": config.morph.dilation_radius}
    axes = []
    for name in SWEEP_AXES:
        values = list(grid.get(name, [defaults[name]]))
        if not values:
            raise ValueError(f"sweep axis {name!r} is empty")
        axes.append(values)
    return [dict(zip(SWEEP_AXES, combo)) for combo in itertools.product(*axes)]


def _sweep_record(rec, config, points):
    # kappa-independent stages are computed once per image
    rgb, fov, truth = load_inputs(rec.image_path, rec.fov_path, rec.truth_path, rec.image_id)
    resized, fov_w, fov = prepare(rgb, fov, config, rec.image_id)
    _, gray = vessel_gray(resized, fov_w, config, rec.image_id)
    clustered = {}
    counts = []
    for point in points:
        cfg = apply_point(config, point)
        key = point["kappa"]
        if key not in clustered:
            _, out = od_removed(gray, fov_w, cfg, rec.image_id)
            with _Stage("fcm", rec.image_id):
                clustered[key] = cluster_pixels(out, fov_w, cfg.fcm)
        labels, result = clustered[key]
        with _Stage("fcm", rec.image_id):
            vessel = select_cluster(labels, result, cfg.cluster_select)
        with _Stage("postprocess", rec.image_id):
            final = postprocess(vessel, fov_w, scaled_morph(cfg))
        counts.append(score(final, fov, fov_w, truth, cfg))
    return counts


@dataclass
class SweepRow:
    point: dict
    mean: Metrics


def sweep(manifest, config=PipelineConfig(), grid=None, out_dir=None, threads=1):
    """Evaluate every grid point on a truth-bearing manifest, ranked by mean accuracy."""
    if not grid:
        raise ValueError("sweep grid is empty")
    points = expand_grid(grid, config)
    if not manifest.records:
        raise ValueError("manifest has no records")
    if not manifest.has_truth:
        raise ValueError("sweep needs ground truth for every record")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        per_image = list(pool.map(lambda r: _sweep_record(r, config, points), manifest.records))
    rows = [SweepRow(point, mean_metrics(metrics(img[i]) for img in per_image))
            for i, point in enumerate(points)]
    # stable sort keeps grid order among ties
    rows.sort(key=lambda r: -r.mean.accuracy if not math.isnan(r.mean.accuracy) else math.inf)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(SWEEP_AXES) + ["sn", "sp", "acc"])
            for r in rows:
                w.writerow([r.point[a] for a in SWEEP_AXES]
                           + [f"{v:.6f}" for v in (r.mean.sensitivity, r.mean.specificity, r.mean.accuracy)])
        config_io.save(apply_point(config, rows[0].point), out_dir / "best_config.json")
    return rows


def load_grid(text_or_path):
    """Sweep grid from a JSON object mapping axis names to value lists."""
    p = Path(text_or_path)
    data = json.loads(p.read_text() if p.is_file() else text_or_path)
    if not isinstance(data, dict):
        raise ValueError("sweep grid must be a JSON object")
    return data
