"""Connected-component labeling of binary images.

Two-pass labeling over horizontal runs: the first pass records run-to-run
adjacency in a union-find forest, the second resolves every run to its root
and paints the label image.
"""

import numpy as np


def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def _runs(mask):
    """Return (rows, starts, ends) of the horizontal true runs, end exclusive."""
    padded = np.zeros((mask.shape[0], mask.shape[1] + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    d = np.diff(padded, axis=1)
    rows, starts = np.nonzero(d == 1)
    _, ends = np.nonzero(d == -1)
    return rows, starts, ends


def label(mask, connectivity=8):
    """Label connected components of a boolean image.

    Returns ``(labels, count)`` where ``labels`` is an int32 image with 0 for
    background and 1..count numbered in raster order of each component's
    first pixel.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("label expects a 2-D mask")
    labels = np.zeros(mask.shape, dtype=np.int32)
    rows, starts, ends = _runs(mask)
    n = len(rows)
    if n == 0:
        return labels, 0

    # 8-connectivity lets runs touch diagonally across one column
    slack = 1 if connectivity == 8 else 0
    parent = list(range(n))
    row_first = np.searchsorted(rows, np.arange(mask.shape[0] + 1))

    for r in range(1, mask.shape[0]):
        a0, a1 = row_first[r - 1], row_first[r]
        b0, b1 = row_first[r], row_first[r + 1]
        i, j = a0, b0
        while i < a1 and j < b1:
            if starts[i] < ends[j] + slack and starts[j] < ends[i] + slack:
                ri, rj = _find(parent, i), _find(parent, j)
                if ri != rj:
                    if ri < rj:
                        parent[rj] = ri
                    else:
                        parent[ri] = rj
            # advance whichever run finishes first
            if ends[i] < ends[j]:
                i += 1
            else:
                j += 1

    roots = np.fromiter((_find(parent, k) for k in range(n)), dtype=np.int64, count=n)
    # roots are the smallest run index in each set, so raster order is preserved
    _, compact = np.unique(roots, return_inverse=True)
    run_label = compact.astype(np.int32) + 1
    for k in range(n):
        labels[rows[k], starts[k]:ends[k]] = run_label[k]
    return labels, int(run_label.max())


def component_areas(labels, count):
    """Pixel count of each label 1..count (index 0 holds the background)."""
    return np.bincount(labels.ravel(), minlength=count + 1)


def largest_component(mask, connectivity=8):
    labels, count = label(mask, connectivity)
    if count == 0:
        return np.zeros_like(np.asarray(mask, dtype=bool))
    areas = component_areas(labels, count)
    areas[0] = 0
    return labels == int(np.argmax(areas))
