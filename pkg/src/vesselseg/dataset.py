"""Dataset manifests and DRIVE directory ingestion."""

import json
import logging
import re
from dataclasses import asdict, dataclass
from pathlib import Path

from PIL import Image

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".tif", ".tiff", ".png", ".gif", ".bmp", ".ppm", ".jpg", ".jpeg")
DRIVE_SPLITS = ("test", "training")
_ID = re.compile(r"^(\d+)_")


@dataclass(frozen=True)
class ManifestRecord:
    image_id: str
    image_path: str
    truth_path: str | None = None
    fov_path: str | None = None


@dataclass
class DatasetManifest:
    records: list

    def __len__(self):
        return len(self.records)

    def validate(self):
        ids = [r.image_id for r in self.records]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ValueError(f"duplicate image ids in manifest: {dupes}")
        for r in self.records:
            for kind in ("image_path", "truth_path", "fov_path"):
                p = getattr(r, kind)
                if p is not None and not Path(p).is_file():
                    raise ValueError(f"{r.image_id}: {kind} does not exist: {p}")
        return self

    @property
    def has_truth(self):
        return bool(self.records) and all(r.truth_path for r in self.records)

    def to_json(self):
        return json.dumps({"records": [asdict(r) for r in self.records]}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text, base_dir=None):
        data = json.loads(text)
        def resolve(p):
            # relative paths are relative to the manifest file
            if p is None or base_dir is None or Path(p).is_absolute():
                return p
            return str(Path(base_dir) / p)

        records = []
        for item in data["records"]:
            rec = ManifestRecord(**item)
            records.append(ManifestRecord(rec.image_id, resolve(rec.image_path),
                                          resolve(rec.truth_path), resolve(rec.fov_path)))
        return cls(records)

    def save(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_json(path.read_text(), base_dir=path.parent)


def _by_id(directory):
    found = {}
    for p in sorted(directory.iterdir()):
        m = _ID.match(p.name)
        if p.is_file() and m and p.suffix.lower() in IMAGE_SUFFIXES:
            found.setdefault(m.group(1), p)
    return found


def ingest_drive(root, split="test"):
    """Pair DRIVE images with manual segmentations and FOV masks by numeric id.

    Expects ``<root>/<split>/images``, ``<root>/<split>/1st_manual`` and,
    optionally, ``<root>/<split>/mask``. Without ``mask/`` the records carry
    no FOV path and the mask is estimated from each image downstream.
    """
    if split not in DRIVE_SPLITS:
        raise ValueError(f"split must be one of {DRIVE_SPLITS}, got {split!r}")
    base = Path(root) / split
    images_dir, manual_dir, mask_dir = base / "images", base / "1st_manual", base / "mask"
    for d in (images_dir, manual_dir):
        if not d.is_dir():
            raise ValueError(f"DRIVE layout: missing directory {d}")
    images, manuals = _by_id(images_dir), _by_id(manual_dir)
    if not images:
        raise ValueError(f"DRIVE layout: no images in {images_dir}")
    masks = {}
    if mask_dir.is_dir():
        masks = _by_id(mask_dir)
    else:
        log.warning("%s has no mask/ directory; FOV masks will be estimated", base)

    unpaired = sorted(set(images) ^ set(manuals))
    if unpaired:
        raise ValueError(f"DRIVE layout: images and manual segmentations unpaired for ids {unpaired}")
    if masks and sorted(set(images) - set(masks)):
        raise ValueError(f"DRIVE layout: no FOV mask for ids {sorted(set(images) - set(masks))}")

    records = [ManifestRecord(f"{i}_{split}", str(images[i]), str(manuals[i]),
                              str(masks[i]) if i in masks else None)
               for i in sorted(images, key=int)]
    return DatasetManifest(records)


def convert_to_png(manifest, out_dir):
    """Losslessly re-encode every file of a manifest as PNG; returns the new manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def conv(path, suffix):
        if path is None:
            return None
        target = out_dir / f"{Path(path).stem}{suffix}.png"
        with Image.open(path) as im:
            im.save(target, format="PNG")
        return str(target)

    return DatasetManifest([
        ManifestRecord(r.image_id, conv(r.image_path, ""), conv(r.truth_path, ""),
                       conv(r.fov_path, "")) for r in manifest.records])
