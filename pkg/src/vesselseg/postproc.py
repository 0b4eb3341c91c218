"""Morphological repair and connected-component filtering of vessel masks."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .components import component_areas, label
from .imgcore import as_mask

# 3x3 neighbour offsets in bit order (bit k <-> _NEIGHBOURS[k])
_NEIGHBOURS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


@dataclass(frozen=True)
class MorphParams:
    dilation_radius: int = 0
    do_bridge: bool = True
    min_component_area: int = 30
    connectivity: int = 8

    def __post_init__(self):
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")
        if self.min_component_area < 0:
            raise ValueError("min_component_area must be >= 0")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")

    def scaled_to(self, area_ratio):
        """Copy with min_component_area scaled for a different working resolution."""
        return MorphParams(self.dilation_radius, self.do_bridge,
                           int(round(self.min_component_area * area_ratio)), self.connectivity)


def disk_offsets(radius):
    """Offsets of a digital disk; radius 1 is the full 3x3 square."""
    r = int(radius)
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    inside = dy ** 2 + dx ** 2 <= (r + 0.5) ** 2
    return list(zip(dy[inside].tolist(), dx[inside].tolist()))


def _shifted(mask, dy, dx):
    """mask shifted so out[y, x] = mask[y + dy, x + dx], false outside."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    if abs(dy) >= h or abs(dx) >= w:
        return out
    ys, yd = (slice(dy, h), slice(0, h - dy)) if dy >= 0 else (slice(0, h + dy), slice(-dy, h))
    xs, xd = (slice(dx, w), slice(0, w - dx)) if dx >= 0 else (slice(0, w + dx), slice(-dx, w))
    out[yd, xd] = mask[ys, xs]
    return out


def dilate(mask, radius):
    mask = as_mask(mask)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    out = mask.copy()
    for dy, dx in disk_offsets(radius):
        if dy or dx:
            out |= _shifted(mask, dy, dx)
    return out


def _neighbour_components(code):
    """Number of 8-connected groups among the set neighbours, centre excluded."""
    on = [k for k in range(8) if code >> k & 1]
    seen = set()
    groups = 0
    for start in on:
        if start in seen:
            continue
        groups += 1
        stack = [start]
        seen.add(start)
        while stack:
            a = stack.pop()
            ay, ax = _NEIGHBOURS[a]
            for b in on:
                by, bx = _NEIGHBOURS[b]
                if b not in seen and max(abs(ay - by), abs(ax - bx)) == 1:
                    seen.add(b)
                    stack.append(b)
    return groups


@lru_cache(maxsize=1)
def bridge_table():
    """256-entry table: does a false centre with this neighbourhood get bridged?"""
    return np.array([_neighbour_components(c) >= 2 for c in range(256)], dtype=bool)


def neighbourhood_codes(mask):
    code = np.zeros(mask.shape, dtype=np.intp)
    for k, (dy, dx) in enumerate(_NEIGHBOURS):
        code |= _shifted(mask, dy, dx).astype(np.intp) << k
    return code


def bridge(mask):
    """Set false pixels whose true neighbours fall into two or more separate groups."""
    mask = as_mask(mask)
    return mask | bridge_table()[neighbourhood_codes(mask)]


def filter_components(mask, min_area, connectivity=8):
    """Drop connected components smaller than ``min_area`` pixels."""
    mask = as_mask(mask)
    if min_area <= 0:
        return mask.copy()
    labels, count = label(mask, connectivity)
    if count == 0:
        return mask.copy()
    keep = component_areas(labels, count) >= min_area
    keep[0] = False
    return keep[labels]


def postprocess(mask, fov, p=MorphParams()):
    """bridge -> dilate -> component filter -> restrict to the field of view."""
    mask = as_mask(mask)
    fov = as_mask(fov, mask.shape)
    if p.do_bridge:
        mask = bridge(mask)
    mask = dilate(mask, p.dilation_radius)
    mask = filter_components(mask, p.min_component_area, p.connectivity)
    return mask & fov
