"""Fuzzy C-means clustering of pixel intensities.

Alternating optimisation of the fuzzified within-cluster objective

    Q = sum_i w_i sum_j u_ij**m (v_i - c_j)**2,   sum_j u_ij = 1,

with optional per-sample weights ``w_i`` so a 256-bin intensity histogram can
stand in for the full pixel list.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError
from .imgcore import as_mask, as_raster


@dataclass(frozen=True)
class FcmParams:
    num_clusters: int = 3
    fuzzifier: float = 2.0
    max_iters: int = 100
    tol: float = 1e-5
    seed: int = 0
    init_kind: str = "quantile"

    def __post_init__(self):
        if self.num_clusters < 1:
            raise ValueError("num_clusters must be >= 1")
        if not self.fuzzifier > 1.0:
            raise ValueError("fuzzifier must be > 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.init_kind not in ("quantile", "random"):
            raise ValueError(f"unknown init_kind {self.init_kind!r}")


@dataclass(frozen=True)
class ClusterSelect:
    """Which cluster is the vessel class: index into centres sorted ascending."""
    rank: int = 0


@dataclass
class FcmResult:
    centers: np.ndarray
    memberships: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False

    def hard_labels(self):
        return np.argmax(self.memberships, axis=1)


def weighted_quantile(values, weights, q):
    """Inverted-CDF quantile: smallest value whose cumulative weight reaches q."""
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cum = np.cumsum(w)
    pos = np.searchsorted(cum, q * cum[-1], side="left")
    return v[min(pos, len(v) - 1)]


def update_memberships(v, centers, m):
    d2 = (v[:, None] - centers[None, :]) ** 2
    zero = d2 == 0
    hit = zero.any(axis=1)
    u = np.empty_like(d2)
    if (~hit).any():
        dd = d2[~hit]
        # normalise by the row minimum so the power never overflows
        ratio = dd / dd.min(axis=1, keepdims=True)
        inv = ratio ** (-1.0 / (m - 1.0))
        u[~hit] = inv / inv.sum(axis=1, keepdims=True)
    if hit.any():
        # sample sitting on a centre belongs to it alone (first such centre)
        one_hot = np.zeros((int(hit.sum()), len(centers)))
        one_hot[np.arange(one_hot.shape[0]), np.argmax(zero[hit], axis=1)] = 1.0
        u[hit] = one_hot
    return u


def update_centers(v, w, u, m):
    um = (u ** m) * w[:, None]
    den = um.sum(axis=0)
    if np.any(den <= 0):
        raise DegenerateDataError("a cluster lost all of its membership")
    return (um * v[:, None]).sum(axis=0) / den


def objective(v, w, u, centers, m):
    return float(((u ** m) * w[:, None] * (v[:, None] - centers[None, :]) ** 2).sum())


def initial_centers(v, w, p):
    C = p.num_clusters
    c = np.array([weighted_quantile(v, w, (j + 1) / (C + 1)) for j in range(C)])
    if len(np.unique(c)) < C:
        lo, hi = v.min(), v.max()
        c = lo + (np.arange(C) + 0.5) * (hi - lo) / C
    return c


def fcm_cluster(samples, p=FcmParams(), weights=None):
    """Cluster 1-D samples; returns centres, memberships and the objective trace."""
    v = np.asarray(samples, dtype=np.float64).ravel()
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    if w.shape != v.shape:
        raise ValueError("weights must match samples")
    if not np.all(np.isfinite(v)):
        raise ValueError("samples must be finite")
    C, m = p.num_clusters, p.fuzzifier
    if len(v) < C:
        raise ValueError(f"need at least {C} samples, got {len(v)}")
    if C > 1 and v.min() == v.max():
        raise DegenerateDataError("all samples are identical")
    if len(np.unique(v)) < C:
        raise DegenerateDataError(f"fewer than {C} distinct sample values")

    if p.init_kind == "random":
        rng = np.random.default_rng(p.seed)
        u = rng.random((len(v), C))
        u /= u.sum(axis=1, keepdims=True)
    else:
        u = update_memberships(v, initial_centers(v, w, p), m)

    trace = []
    converged = False
    it = 0
    for it in range(1, p.max_iters + 1):
        centers = update_centers(v, w, u, m)
        trace.append(objective(v, w, u, centers, m))
        u_new = update_memberships(v, centers, m)
        delta = np.abs(u_new - u).max()
        u = u_new
        if delta < p.tol:
            converged = True
            break
    return FcmResult(centers, u, trace, it, converged)


def intensity_histogram(values, n_bins=256):
    """Occupied 8-bit bins: (bin index per value, bin means, bin counts, occupied bins)."""
    q = np.rint(np.clip(values, 0.0, 1.0) * (n_bins - 1)).astype(np.intp)
    counts = np.bincount(q, minlength=n_bins)
    sums = np.bincount(q, weights=values, minlength=n_bins)
    occupied = np.flatnonzero(counts)
    return q, sums[occupied] / counts[occupied], counts[occupied], occupied


def cluster_pixels(img, mask, p=FcmParams()):
    """FCM over in-mask intensities (histogram-weighted).

    Returns ``(labels, result)``: ``labels`` is -1 outside the mask and the
    hard cluster index inside it.
    """
    img = as_raster(img)
    mask = as_mask(mask, img.shape)
    vals = img[mask]
    if vals.size == 0:
        raise DegenerateDataError("no pixels inside the mask")
    q, reps, counts, occupied = intensity_histogram(vals)
    if len(reps) < p.num_clusters:
        raise DegenerateDataError(
            f"only {len(reps)} distinct intensity levels for {p.num_clusters} clusters")
    result = fcm_cluster(reps, p, weights=counts)
    bin_label = np.full(256, -1, dtype=np.intp)
    bin_label[occupied] = result.hard_labels()
    labels = np.full(img.shape, -1, dtype=np.intp)
    labels[mask] = bin_label[q]
    return labels, result


def select_cluster(labels, result, select=ClusterSelect()):
    order = np.argsort(result.centers, kind="stable")
    if not 0 <= select.rank < len(order):
        raise ValueError(f"cluster rank {select.rank} out of range for {len(order)} clusters")
    return labels == order[select.rank]


def classify_pixels(img, mask, p=FcmParams(), select=ClusterSelect()):
    """Binary vessel mask: pixels whose strongest membership is the selected cluster."""
    labels, result = cluster_pixels(img, mask, p)
    return select_cluster(labels, result, select)


def write_trace_csv(result, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "objective"])
        for i, q in enumerate(result.objective_trace, start=1):
            writer.writerow([i, repr(q)])
