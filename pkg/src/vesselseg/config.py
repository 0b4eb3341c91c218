"""Pipeline configuration and its JSON form."""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .curvelet import CurveletParams
from .enhance import ClaheParams, DiffusionParams
from .fcm import ClusterSelect, FcmParams
from .odmask import BackgroundParams
from .postproc import MorphParams

REFERENCE_AREA = 500 * 500   # min_component_area is stated at this resolution


@dataclass(frozen=True)
class PipelineConfig:
    clahe: ClaheParams = field(default_factory=ClaheParams)
    diffusion: DiffusionParams = field(default_factory=DiffusionParams)
    curvelet: CurveletParams = field(default_factory=CurveletParams)
    background: BackgroundParams = field(default_factory=BackgroundParams)
    fcm: FcmParams = field(default_factory=FcmParams)
    cluster_select: ClusterSelect = field(default_factory=ClusterSelect)
    morph: MorphParams = field(default_factory=MorphParams)
    working_width: int = 500
    working_height: int = 500
    # "bright": vessel stages see the complemented grey image, "dark": as is
    vessel_polarity: str = "bright"
    # "extend": continue the image smoothly past the FOV rim before the
    # curvelet and background stages, "zero": leave the outside at 0
    fov_fill: str = "extend"
    fov_threshold: float = 0.1
    eval_resolution: str = "native"   # or "working" (truth downsampled)
    output_dir: str | None = None
    debug_stages: bool = False

    def __post_init__(self):
        if self.working_width < 1 or self.working_height < 1:
            raise ValueError("working resolution must be positive")
        if self.vessel_polarity not in ("bright", "dark"):
            raise ValueError(f"unknown vessel_polarity {self.vessel_polarity!r}")
        if self.fov_fill not in ("extend", "zero"):
            raise ValueError(f"unknown fov_fill {self.fov_fill!r}")
        if self.eval_resolution not in ("native", "working"):
            raise ValueError(f"unknown eval_resolution {self.eval_resolution!r}")
        if not 0.0 < self.fov_threshold < 1.0:
            raise ValueError("fov_threshold must lie in (0, 1)")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name not in data:
                continue
            value = data.pop(f.name)
            sub = _SECTIONS.get(f.name)
            if sub is not None:
                if not isinstance(value, dict):
                    raise ValueError(f"config section {f.name!r} must be an object")
                known = {g.name for g in dataclasses.fields(sub)}
                unknown = set(value) - known
                if unknown:
                    raise ValueError(f"unknown keys in {f.name!r}: {sorted(unknown)}")
                value = sub(**value)
            kwargs[f.name] = value
        if data:
            raise ValueError(f"unknown config keys: {sorted(data)}")
        return cls(**kwargs)


_SECTIONS = {
    "clahe": ClaheParams,
    "diffusion": DiffusionParams,
    "curvelet": CurveletParams,
    "background": BackgroundParams,
    "fcm": FcmParams,
    "cluster_select": ClusterSelect,
    "morph": MorphParams,
}


def dumps(config):
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def loads(text):
    return PipelineConfig.from_dict(json.loads(text))


def save(config, path):
    Path(path).write_text(dumps(config))


def load(path):
    return loads(Path(path).read_text())
