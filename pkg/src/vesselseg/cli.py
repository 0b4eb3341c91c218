"""Command-line entry point: ``vesselseg <subcommand> ...``.

Exit codes: 0 success, 1 one or more images failed, 2 invalid invocation.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import config as config_io
from .config import PipelineConfig
from .dataset import IMAGE_SUFFIXES, DatasetManifest, ManifestRecord, convert_to_png, ingest_drive
from .errors import StageError
from .imgcore import save_png
from .phantom import make_phantom, phantom_fov
from .runner import load_grid, run_dataset, segment_one, summary_text, sweep

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("vesselseg")


class UsageError(Exception):
    pass


def _config(args):
    cfg = config_io.load(args.config) if args.config else PipelineConfig()
    if getattr(args, "debug_stages", False):
        cfg = cfg.replace(debug_stages=True)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(fcm=dataclasses.replace(cfg.fcm, seed=args.seed))
    if getattr(args, "output", None):
        cfg = cfg.replace(output_dir=str(args.output))
    return cfg


def _manifest(path, split):
    """Manifest from a JSON file, a DRIVE root, or a plain directory of images."""
    path = Path(path)
    if path.is_file():
        return DatasetManifest.load(path).validate()
    if not path.is_dir():
        raise UsageError(f"input does not exist: {path}")
    if (path / split / "images").is_dir():
        return ingest_drive(path, split).validate()
    images = sorted(p for p in path.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not images:
        raise UsageError(f"no images found in {path}")
    return DatasetManifest([ManifestRecord(p.stem, str(p)) for p in images]).validate()


def cmd_segment(args):
    cfg = _config(args)
    seg = segment_one(args.input, cfg, fov_path=args.fov, out_dir=args.output)
    frac = seg.mask[seg.fov].mean()
    print(f"{Path(args.input).stem}: vessel fraction {frac:.4f} of FOV -> {args.output}")
    return EXIT_OK


def cmd_run(args):
    cfg = _config(args)
    manifest = _manifest(args.input, args.split)
    report = run_dataset(manifest, cfg, args.output, threads=args.threads)
    sys.stdout.write(summary_text(report))
    return EXIT_PARTIAL if report.failures else EXIT_OK


def cmd_ingest(args):
    manifest = ingest_drive(args.input, args.split).validate()
    if args.to_png:
        manifest = convert_to_png(manifest, args.to_png)
    out = Path(args.output)
    target = out / f"{args.split}_manifest.json" if out.suffix != ".json" else out
    manifest.save(target)
    print(f"{len(manifest)} records -> {target}")
    return EXIT_OK


def cmd_phantom(args):
    out = Path(args.output)
    records = []
    for k in range(args.count):
        seed = args.seed + k
        rgb, truth = make_phantom(seed, args.size, n_vessels=args.vessels)
        name = f"phantom_{seed:03d}"
        save_png(out / f"{name}.png", rgb)
        save_png(out / f"{name}_truth.png", truth)
        save_png(out / f"{name}_fov.png", phantom_fov(args.size))
        records.append(ManifestRecord(name, f"{name}.png", f"{name}_truth.png", f"{name}_fov.png"))
    DatasetManifest(records).save(out / "manifest.json")
    print(f"{args.count} phantoms -> {out}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args)
    manifest = _manifest(args.input, args.split)
    rows = sweep(manifest, cfg, load_grid(args.grid), args.output, threads=args.threads)
    print("kappa  rank  min_area  dilation  SN      SP      Acc")
    for r in rows:
        p, m = r.point, r.mean
        print(f"{p['kappa']:<6g} {p['rank']:<5d} {p['min_area']:<9d} {p['dilation_radius']:<9d} "
              f"{m.sensitivity:.4f}  {m.specificity:.4f}  {m.accuracy:.4f}")
    return EXIT_OK


def cmd_init_config(args):
    text = config_io.dumps(PipelineConfig())
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="vesselseg", description="Retinal vessel segmentation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (see init-config)")
        p.add_argument("--input", required=True)
        p.add_argument("--output", required=True)
        p.add_argument("--seed", type=int, default=None, help="FCM seed override")

    p = sub.add_parser("segment", help="segment one image")
    common(p)
    p.add_argument("--fov", help="FOV mask file; estimated when absent")
    p.add_argument("--debug-stages", action="store_true")
    p.set_defaults(func=cmd_segment)

    for name, func, helptext in (("run", cmd_run, "segment and evaluate a dataset"),
                                 ("sweep", cmd_sweep, "grid search over tuning parameters")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--split", default="test", help="DRIVE split when --input is a DRIVE root")
        if name == "run":
            p.add_argument("--debug-stages", action="store_true")
        else:
            p.add_argument("--grid", required=True, help="JSON object or file, e.g. '{\"kappa\": [2, 5]}'")
        p.set_defaults(func=func)

    p = sub.add_parser("ingest", help="build a manifest from a DRIVE tree")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="manifest .json path or directory")
    p.add_argument("--split", default="test")
    p.add_argument("--to-png", metavar="DIR", help="also re-encode every file as PNG under DIR")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("phantom", help="write synthetic phantoms and a manifest")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--vessels", type=int, default=None)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("init-config", help="print or write the default config")
    p.add_argument("--output")
    p.set_defaults(func=cmd_init_config)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
