"""Acceptance criteria; each test prints one PASS/FAIL line to the terminal."""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from vesselseg import config as config_io
from vesselseg.config import PipelineConfig
from vesselseg.curvelet import CurveletParams, fdct_forward, fdct_inverse, get_transform
from vesselseg.dataset import ingest_drive
from vesselseg.enhance import DiffusionParams, anisotropic_diffusion
from vesselseg.fcm import FcmParams, cluster_pixels, fcm_cluster
from vesselseg.metrics import confusion, dice, metrics
from vesselseg.phantom import make_phantom, phantom_fov
from vesselseg.pipeline import segment_rgb
from vesselseg.postproc import bridge, dilate, filter_components
from vesselseg.runner import REFERENCE_METRICS, run_dataset, sweep

DRIVE_ENV = "VESSELSEG_DRIVE_ROOT"


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
        assert ok, detail
    return emit


def test_criterion_1_curvelet_round_trip(report):
    worst_err, worst_energy = 0.0, 0.0
    rng = np.random.default_rng(1)
    for n in (64, 128, 256):
        for _ in range(3):
            x = rng.standard_normal((n, n))
            c = fdct_forward(x)
            worst_err = max(worst_err, np.linalg.norm(fdct_inverse(c) - x) / np.linalg.norm(x))
            energy = sum(float(np.sum(np.abs(w) ** 2)) for s in c for w in s)
            worst_energy = max(worst_energy, abs(energy / np.sum(x ** 2) - 1))
    # cold timing: window tables are rebuilt inside the timed region
    get_transform.cache_clear()
    x = rng.standard_normal((256, 256))
    t0 = time.perf_counter()
    fdct_inverse(fdct_forward(x, CurveletParams()))
    seconds = time.perf_counter() - t0
    ok = worst_err < 1e-8 and worst_energy < 1e-6 and seconds < 2.0
    report(1, "curvelet round trip", ok,
           f"max rel err {worst_err:.2e}, max |energy ratio - 1| {worst_energy:.2e}, 256^2 round trip {seconds:.3f}s")


def test_criterion_2_fcm_oracle(report):
    rng = np.random.default_rng(2)
    worst_c = worst_u = worst_rows = 0.0
    monotone = True
    for k in range(20):
        n = int(rng.integers(10, 201))
        C = int(rng.integers(1, 4))
        centres = rng.uniform(0, 1, C)
        v = centres[rng.integers(0, C, n)] + rng.normal(0, rng.uniform(0.02, 0.3), n)
        r = fcm_cluster(v, FcmParams(num_clusters=C))
        c, u, trace = oracles.fcm(v, C)
        worst_c = max(worst_c, np.abs(r.centers - c).max())
        worst_u = max(worst_u, np.abs(r.memberships - u).max())
        worst_rows = max(worst_rows, np.abs(r.memberships.sum(axis=1) - 1).max())
        t = np.array(r.objective_trace)
        monotone &= bool(np.all(np.diff(t) <= 1e-12 * t[0]))
    ok = worst_c < 1e-9 and worst_u < 1e-9 and worst_rows < 1e-9 and monotone
    report(2, "FCM vs direct iteration oracle", ok,
           f"20 datasets, max |dc| {worst_c:.1e}, max |du| {worst_u:.1e}, "
           f"row-sum err {worst_rows:.1e}, objective non-increasing: {monotone}")


def test_criterion_3_histogram_fcm(report):
    rng = np.random.default_rng(3)
    same = True
    worst = 0.0
    for _ in range(10):
        levels = rng.uniform(0.1, 0.9, 3)
        raw = levels[rng.integers(0, 3, (32, 32))] + rng.normal(0, 0.04, (32, 32))
        img = np.rint(np.clip(raw, 0, 1) * 255) / 255
        mask = np.ones_like(img, dtype=bool)
        labels, hist = cluster_pixels(img, mask)
        pix = fcm_cluster(img.ravel())
        worst = max(worst, np.abs(np.sort(hist.centers) - np.sort(pix.centers)).max())
        # compare partitions through the sorted-centre order, not raw labels
        rank_h = np.argsort(np.argsort(hist.centers))[labels.ravel()]
        rank_p = np.argsort(np.argsort(pix.centers))[pix.hard_labels()]
        same &= bool(np.array_equal(rank_h, rank_p))
    ok = same and worst < 1e-9
    report(3, "histogram FCM equals per-pixel FCM", ok,
           f"10 images 32x32, identical partitions: {same}, max centre diff {worst:.1e}")


def test_criterion_4_morphology_oracles(report):
    rng = np.random.default_rng(4)
    bad = {"dilate": 0, "bridge": 0, "filter": 0}
    for k in range(200):
        m = rng.random((64, 64)) < rng.uniform(0.05, 0.6)
        r = int(rng.integers(0, 3))
        area = int(rng.integers(0, 30))
        conn = int(rng.choice([4, 8]))
        bad["dilate"] += not np.array_equal(dilate(m, r), oracles.dilate(m, r))
        bad["bridge"] += not np.array_equal(bridge(m), oracles.bridge(m))
        bad["filter"] += not np.array_equal(filter_components(m, area, conn),
                                            oracles.filter_components(m, area, conn))
    ok = not any(bad.values())
    report(4, "morphology/CCA vs brute force", ok, f"200 masks 64x64, mismatches {bad}")


def test_criterion_5_confusion_oracle(report):
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(100):
        shape = tuple(rng.integers(5, 60, 2))
        p, t, f = (rng.random(shape) < rng.uniform(0.05, 0.95) for _ in range(3))
        c = confusion(p, t, f)
        mismatches += (c.tp, c.tn, c.fp, c.fn) != oracles.confusion(p, t, f)
    report(5, "confusion counts vs pixel loop", mismatches == 0, f"100 triples, mismatches {mismatches}")


def test_criterion_6_diffusion_max_principle(report):
    rng = np.random.default_rng(6)
    violations = 0
    for _ in range(100):
        shape = tuple(rng.integers(3, 80, 2))
        img = rng.uniform(-1, 2) + rng.uniform(0.01, 3) * rng.random(shape) ** rng.uniform(0.2, 4)
        p = DiffusionParams(iterations=int(rng.integers(1, 60)), kappa_conduction=float(rng.uniform(0.005, 2)),
                            lambda_step=float(rng.uniform(0.01, 0.25)),
                            conduction_kind=str(rng.choice(["exponential", "rational"])))
        out = anisotropic_diffusion(img, p)
        violations += not (out.min() >= img.min() and out.max() <= img.max())
    report(6, "diffusion max principle", violations == 0, f"100 draws, violations {violations}")


def test_criterion_7_phantom_end_to_end(report):
    cfg = PipelineConfig()
    dices = []
    for seed in range(10):
        rgb, truth = make_phantom(seed, 512)
        seg = segment_rgb(rgb, cfg)
        dices.append(dice(confusion(seg.native_mask(), truth, phantom_fov(512))))
    rgb, truth = make_phantom(100, 512, n_vessels=0)
    seg = segment_rgb(rgb, cfg)
    sp = metrics(confusion(seg.native_mask(), truth, phantom_fov(512))).specificity
    ok = float(np.mean(dices)) >= 0.70 and sp >= 0.98
    report(7, "phantom end to end", ok,
           f"mean Dice {np.mean(dices):.4f} (min {min(dices):.4f}) over 10 phantoms 512^2, "
           f"zero-vessel SP {sp:.4f}")


@pytest.mark.skipif(not os.environ.get(DRIVE_ENV), reason=f"set {DRIVE_ENV} to a DRIVE root to run")
def test_criterion_8_drive_reproduction(report, tmp_path):
    root = Path(os.environ[DRIVE_ENV])
    train, test = ingest_drive(root, "training").validate(), ingest_drive(root, "test").validate()
    grid = {"kappa": [2.0, 5.0, 10.0, 20.0], "rank": [0, 1, 2]}
    rows = sweep(train, PipelineConfig(), grid, tmp_path / "sweep", threads=os.cpu_count() or 1)
    best = config_io.load(tmp_path / "sweep" / "best_config.json")
    t0 = time.perf_counter()
    rep = run_dataset(test, best, tmp_path / "test", threads=1)
    per_image = (time.perf_counter() - t0) / len(test)
    m, r = rep.mean, REFERENCE_METRICS
    ok = (len(rep.outcomes) == 20 and not rep.failures and m.accuracy >= 0.93
          and m.sensitivity >= 0.65 and m.specificity >= 0.95 and per_image < 60)
    report(8, "DRIVE test split after training sweep", ok,
           f"best {rows[0].point}; achieved SN {m.sensitivity:.4f} SP {m.specificity:.4f} "
           f"Acc {m.accuracy:.4f} vs reference SN {r.sensitivity} SP {r.specificity} Acc {r.accuracy}; "
           f"{per_image:.1f}s/image")


def test_criterion_8_skip_notice(capsys):
    if os.environ.get(DRIVE_ENV):
        pytest.skip("DRIVE run requested; see the criterion 8 test")
    with capsys.disabled():
        print(f"\n[SKIP] criterion 8: DRIVE reproduction -- no dataset; set {DRIVE_ENV}=<DRIVE root>")


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "vesselseg", *args], capture_output=True, text=True)


def test_criterion_9_determinism(report, tmp_path):
    ph = tmp_path / "ph"
    assert _cli("phantom", "--output", str(ph), "--count", "4", "--seed", "20").returncode == 0
    codes = []
    for threads in ("1", "8"):
        codes.append(_cli("run", "--input", str(ph / "manifest.json"), "--output", str(tmp_path / f"t{threads}"),
                          "--threads", threads, "--seed", "0").returncode)
    a, b = tmp_path / "t1", tmp_path / "t8"
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file() and p.name != "timings.csv")
    differ = [str(f) for f in files if (a / f).read_bytes() != (b / f).read_bytes()]
    masks = [f for f in files if f.name.endswith("_mask.png")]
    ok = codes == [0, 0] and not differ and len(masks) == 4 and (a / "metrics.csv").is_file()
    report(9, "determinism across thread counts", ok,
           f"exit codes {codes}, {len(files)} files compared ({len(masks)} masks), differing: {differ or 'none'}")
