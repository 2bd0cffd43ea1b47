#!/usr/bin/env python3
"""End-to-end smoke test of the ctflow_py extension module.

Builds the cdylib if needed, imports it, and drives a miniature version of
the whole pipeline: analytic flow, vessel masks, ground-truth synthesis,
fan-beam scanning, filtered backprojection, a short sinogram-domain
training run, and the statistics helpers.

Usage: python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_and_import():
    lib = REPO / "target" / "release" / "libctflow_py.so"
    if not lib.exists():
        print("building ctflow-py (release)...")
        subprocess.run(
            ["cargo", "build", "-p", "ctflow-py", "--release"],
            cwd=REPO,
            check=True,
        )
    stage = Path(tempfile.mkdtemp(prefix="ctflow_py_"))
    shutil.copy(lib, stage / "ctflow_py.so")
    sys.path.insert(0, str(stage))
    import ctflow_py

    return ctflow_py


def approx(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    m = build_and_import()
    print(f"ctflow_py {m.__version__}")

    # rotation-speed threshold from the advection timescale argument
    f = m.threshold(0.37, 7.33, 5.0)
    approx(f, 3.962, 0.01)
    assert 3.5 <= f <= 4.1
    print(f"threshold: {f:.3f} Hz")

    # analytic pulsatile channel flow
    p = m.FlowParams.reference()
    approx(p.reynolds(), 1184.0, 1.0)
    approx(p.strouhal(), 0.3665, 0.001)
    approx(p.womersley_alpha(), 20.83, 0.01)
    assert abs(p.velocity(0.5, 1.0)) < 1e-12, "no-slip at the wall"
    peak = max(
        p.velocity(y / 100.0 - 0.5, t * p.cycle_period() / 64.0)
        for y in range(101)
        for t in range(64)
    )
    approx(peak, 1.0, 0.01)
    print(f"flow: Re={p.reynolds():.1f} St={p.strouhal():.4f} peak={peak:.4f}")

    # vessel masks
    vessel = m.Vessel.bifurcation(1.5)
    (ny, nx), lumen, roi = vessel.rasterize(640, 40.0)
    n_lumen = sum(lumen)
    n_roi = sum(roi)
    assert 0 < n_roi < n_lumen < ny * nx
    print(f"bifurcation mask: {n_lumen} lumen px, {n_roi} ROI px on {ny}x{nx}")

    # ground truth synthesis (desk scale, two boluses per cycle)
    desk = m.FlowParams(beta=1.0 / math.pi)
    movie = m.synthesize_channel(desk, 144, 10.0, 12)
    nt, gny, gnx = movie.shape()
    assert (nt, gny, gnx) == (12, 144, 144)
    c = movie.field_bytes("c")
    assert len(c) == nt * gny * gnx * 4
    try:
        import numpy as np

        arr = np.frombuffer(c, dtype=np.float32).reshape(nt, gny, gnx)
        assert arr.min() >= -1e-6 and arr.max() <= 1.0 + 1e-6
        print(f"movie: c in [{arr.min():.4f}, {arr.max():.4f}]")
    except ImportError:
        print("movie: numpy unavailable, skipped array check")

    # movie round trip through the artifact store
    store = Path(tempfile.mkdtemp(prefix="ctflow_store_")) / "movie"
    movie.save(str(store))
    back = m.FieldMovie.load(str(store))
    assert back.shape() == movie.shape()
    assert back.field_bytes("c") == c
    print(f"artifact store round trip: {back!r}")

    # scan and reconstruct
    sino = m.scan_movie(movie, 96, 80, 4.0, 0.0, 1)
    nv, nc = sino.shape()
    assert (nv, nc) == (80, 96)
    angles = sino.view_angles()
    approx(angles[1] - angles[0], 2.0 * math.pi / 80, 1e-9)
    (rny, rnx), img = m.fbp_frame(sino, 144)
    assert len(img) == rny * rnx * 4
    print(f"scan: {sino!r}; fbp frame {rny}x{rnx}")

    # pulsed-mode gating
    gated = sino.with_pulse_gating(10, 0.5)
    mask = gated.pulse_mask()
    assert sum(mask) == 40 and mask[:10] == [True] * 10 and mask[10:20] == [False] * 10
    print(f"pulse gating: {sum(mask)}/{len(mask)} views on")

    # short sinogram-domain training run: the loss must decrease
    history, rmse = m.train_field("sinoflow", movie, sino=sino, iterations=300, seed=1)
    first, last = history[0][3], history[-1][3]
    assert last < first, f"loss did not decrease: {first} -> {last}"
    print(f"training: L {first:.3e} -> {last:.3e}, conc RMSE {rmse:.3f}")

    # statistics fixtures
    t, p_raw, p_adj, sig = m.paired_ttest([1, 2, 3, 4, 5, 6], [0] * 6, 1)
    approx(t, 4.5826, 5e-4)
    approx(p_raw, 0.0059, 2e-4)
    assert sig
    t10 = m.paired_ttest([1, 2, 3, 4, 5, 6], [0] * 6, 10)
    approx(t10[2], min(1.0, 10 * p_raw), 1e-12)
    tw, pw = m.welch([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert tw == 0.0 and pw == 1.0
    print(f"stats: paired t={t:.4f} p={p_raw:.4f}")

    # deterministic Poisson counts
    a = m.poisson_counts([1e4] * 1000, 100, 7)
    b = m.poisson_counts([1e4] * 1000, 100, 7)
    assert a == b
    mean = sum(a) / len(a)
    approx(mean / 1e4, 1.0, 0.02)
    print(f"poisson: mean ratio {mean / 1e4:.4f}, deterministic")

    # CNR of a noise-free image is infinite
    image = [1.0] * 200 + [0.0] * 200
    assert math.isinf(m.cnr(image, list(range(150)), list(range(200, 350))))
    print("cnr: noise-free sentinel ok")

    print("SMOKE TEST PASSED")


if __name__ == "__main__":
    main()
