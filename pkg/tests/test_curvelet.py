import numpy as np
import pytest
from scipy import ndimage

from vesselseg.curvelet import (CurveletParams, CurveletTransform, angles_per_scale, boost_details,
                                detail_image, dump_coefficients, edge_enhance, fdct_forward, fdct_inverse,
                                fdct_inverse_complex, get_transform, rising_edge)


def _energy(coeffs):
    return sum(float(np.sum(np.abs(c) ** 2)) for scale in coeffs for c in scale)


def _disk(n, frac=0.43):
    yy, xx = np.mgrid[0:n, 0:n]
    c = n / 2 - 0.5
    return (yy - c) ** 2 + (xx - c) ** 2 <= (frac * n) ** 2


def test_rising_edge_partition():
    x = np.linspace(-1.5, 1.5, 301)
    r = rising_edge(x)
    assert np.allclose(r ** 2 + rising_edge(-x) ** 2, 1.0, atol=1e-14)
    assert np.all(r[x <= -1] == 0) and np.all(r[x >= 1] == 1)
    assert np.all(np.diff(r) >= 0)


def test_wedge_schedule():
    assert angles_per_scale(6, 16) == [1, 16, 32, 32, 64, 1]
    assert CurveletParams().scales_for(512) == 6
    t = get_transform(512, 6, 16)
    assert [len(s) for s in t.shapes()] == [1, 16, 32, 32, 64, 1]
    assert t.shapes()[-1] == [(512, 512)]


@pytest.mark.parametrize("n", [16, 64, 128, 256])
def test_windows_partition_unity(n):
    t = get_transform(n, CurveletParams().scales_for(n), 16)
    assert np.abs(t.window_energy() - 1.0).max() < 1e-12


@pytest.mark.parametrize("n", [64, 128])
def test_round_trip_and_energy(n):
    x = np.random.default_rng(n).standard_normal((n, n))
    c = fdct_forward(x)
    y = fdct_inverse(c)
    assert np.linalg.norm(y - x) / np.linalg.norm(x) < 1e-8
    assert abs(_energy(c) / np.sum(x ** 2) - 1) < 1e-6


def test_zero_in_zero_out():
    c = fdct_forward(np.zeros((64, 64)))
    assert _energy(c) == 0.0
    assert np.array_equal(fdct_inverse(c), np.zeros((64, 64)))


def test_linearity():
    rng = np.random.default_rng(5)
    x1, x2 = rng.random((64, 64)), rng.random((64, 64))
    a, b = 0.7, -2.3
    c1, c2 = fdct_forward(x1), fdct_forward(x2)
    comb = fdct_forward(a * x1 + b * x2)
    err = max(np.abs(u - (a * v + b * w)).max() for s, s1, s2 in zip(comb, c1, c2)
              for u, v, w in zip(s, s1, s2))
    assert err < 1e-10
    # inverse linearity on arbitrary complex coefficients
    d1 = [[rng.standard_normal(c.shape) + 1j * rng.standard_normal(c.shape) for c in s] for s in c1]
    d2 = [[rng.standard_normal(c.shape) + 1j * rng.standard_normal(c.shape) for c in s] for s in c1]
    lhs = fdct_inverse_complex([[a * u + b * v for u, v in zip(s1, s2)] for s1, s2 in zip(d1, d2)])
    rhs = a * fdct_inverse_complex(d1) + b * fdct_inverse_complex(d2)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_impulse_localises_at_grid_centre():
    n = 128
    x = np.zeros((n, n))
    x[n // 2, n // 2] = 1.0
    for scale in fdct_forward(x):
        for w in scale:
            r, c = w.shape
            i, j = np.unravel_index(np.argmax(np.abs(w)), w.shape)
            dy = min(abs(i - r / 2), r - abs(i - r / 2))
            dx = min(abs(j - c / 2), c - abs(j - c / 2))
            assert max(dy, dx) <= 3


def test_inverse_rejects_wrong_layout():
    c = fdct_forward(np.random.default_rng(0).random((64, 64)))
    with pytest.raises(ValueError):
        fdct_inverse(c[:-1], n=64)
    c[1][0] = c[1][0][:-1]
    with pytest.raises(ValueError):
        fdct_inverse(c, n=64)
    with pytest.raises(ValueError):
        fdct_forward(np.zeros((64, 62)))
    with pytest.raises(ValueError):
        CurveletTransform(63, 3)


def test_inverse_flags_complex_residue():
    c = fdct_forward(np.random.default_rng(1).random((64, 64)))
    c[1][3] = c[1][3] * 1j
    with pytest.raises(ValueError):
        fdct_inverse(c)


def test_boost_details():
    c = fdct_forward(np.random.default_rng(2).random((64, 64)))
    one = boost_details(c, 1.0)
    assert np.all(one[0][0] == 0)
    assert all(np.array_equal(u, v) for s, t in zip(one[1:], c[1:]) for u, v in zip(s, t))
    two = boost_details(c, 2.0)
    assert all(np.array_equal(u, 2 * v) for s, t in zip(two[1:], c[1:]) for u, v in zip(s, t))
    twice = boost_details(boost_details(c, 3.0), 1.5)
    once = boost_details(c, 4.5)
    assert np.all(twice[0][0] == 0)
    assert all(np.allclose(u, v, rtol=1e-15, atol=0) for s, t in zip(twice, once) for u, v in zip(s, t))
    with pytest.raises(ValueError):
        boost_details(c, 0.0)


def test_constant_image_has_no_detail():
    x = np.full((128, 128), 0.37)
    out = fdct_inverse(boost_details(fdct_forward(x), 5.0))
    assert np.abs(out).max() < 1e-3


def test_detail_image_any_shape():
    img = np.random.default_rng(3).random((50, 70))
    d = detail_image(img)
    assert d.shape == img.shape and np.isfinite(d).all()


def test_edge_enhance_range_and_support():
    rng = np.random.default_rng(4)
    img = rng.random((100, 100))
    mask = _disk(100)
    for mode in ("signed", "absolute"):
        e = edge_enhance(img, mask, CurveletParams(inverse_mode=mode))
        assert e.min() >= 0.0 and e.max() <= 1.0
        assert np.all(e[~mask] == 0)


def test_edge_enhance_constant_disk_decays_inward():
    n = 128
    mask = _disk(n)
    depth = ndimage.distance_transform_edt(mask)
    e = edge_enhance(np.full((n, n), 0.6), mask)
    rim = e[(depth > 0) & (depth <= 4)].max()
    assert e[depth > 32].max() < 0.5 * rim
    assert e[depth > 48].max() < 0.1 * rim


@pytest.mark.xfail(strict=True, reason="the coarse band spans ~5 cycles per canvas, so the boosted "
                   "rim step rings across most of the disk (interior max ~0.06 at 24 px, kappa 5)")
def test_edge_enhance_constant_disk_interior_negligible():
    n = 128
    mask = _disk(n)
    depth = ndimage.distance_transform_edt(mask)
    e = edge_enhance(np.full((n, n), 0.6), mask)
    # "near the rim": within one coarse-band period (3 * 2**(J-1) px) of the boundary
    assert e[depth > 24].max() < 1e-2


def test_edge_enhance_highlights_curve():
    n = 128
    yy, xx = np.mgrid[0:n, 0:n]
    curve = np.abs(yy - (64 + 20 * np.sin(xx / 15))) <= 1.5
    mask = _disk(n)
    inner = ndimage.binary_erosion(mask, iterations=12)
    dark_curve = np.where(curve, 0.3, 0.8)
    # the pipeline feeds this stage the complemented grey image, so vessels arrive bright
    e = edge_enhance(1.0 - dark_curve, mask)
    on = e[curve & inner].mean()
    off = e[~curve & inner].mean()
    assert on >= 5 * off


def test_dump_coefficients(tmp_path):
    c = fdct_forward(np.random.default_rng(6).random((32, 32)))
    paths = dump_coefficients(c, tmp_path)
    assert len(paths) == sum(len(s) for s in c)
    assert all(p.is_file() for p in paths)
