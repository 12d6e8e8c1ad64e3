"""Exit criteria for the package, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary under "acceptance criteria".
"""

import math
import random
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from mosaicforge.config import PipelineConfig
from mosaicforge.engine import PLAIN, SELECT, augment_once
from mosaicforge.geometry import BBox, SpliceCenter, largest_quadrant, quadrant_layout
from mosaicforge.annotations import parse_yolo_line, serialize_yolo_line
from mosaicforge.pipeline import generate, output_digest
from mosaicforge.sampling import RandomStream, draw_gate
from mosaicforge.synthetic import MIXED_COUNTS, mixed_density_dataset, palettes_for
from mosaicforge.verify import GOLDEN_DIGEST, REFERENCE_CONFIG, soundness_violations

pytestmark = pytest.mark.acceptance


def record(name, passed, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    return passed


@pytest.fixture(scope="module")
def dataset():
    # two images per box count in {0, 5, 10, 50}, all 160x120
    return mixed_density_dataset(counts=MIXED_COUNTS, repeats=2)


def test_select_rule_guarantee(dataset):
    cfg = PipelineConfig(output_size=160, select_prob=1.0)
    stream = RandomStream(101)
    n, hits = 10_000, 0
    start = time.perf_counter()
    for _ in range(n):
        # placement only depends on the plan; pixels are not composed here
        plan = augment_once(dataset, cfg, stream, render=False).plan
        images = [dataset[i] for i in plan.dataset_indices]
        density = [Fraction(len(im.boxes), im.width * im.height) for im in images]
        densest = density.index(max(density))  # list.index -> lowest index on ties
        c, L = plan.center, plan.canvas_side
        areas = [c.cx * c.cy, (L - c.cx) * c.cy, c.cx * (L - c.cy), (L - c.cx) * (L - c.cy)]
        if plan.mode == SELECT and plan.quadrant_of(densest) == areas.index(max(areas)):
            hits += 1
    elapsed = time.perf_counter() - start
    ok = hits == n and elapsed < 60
    assert record("select-rule guarantee", ok, f"{hits}/{n} plans honor densest->largest, {elapsed:.1f}s (< 60s)")


@pytest.mark.parametrize("S", [0.1, 0.4, 0.8])
def test_gate_calibration(S):
    stream = RandomStream(202)
    start = time.perf_counter()
    fraction = sum(draw_gate(stream, S) for _ in range(10_000)) / 10_000
    elapsed = time.perf_counter() - start
    ok = abs(fraction - S) <= 0.02 and elapsed < 10
    assert record(f"gate calibration S={S}", ok, f"observed {fraction:.4f} (|diff| <= 0.02), {elapsed:.2f}s (< 10s)")


def test_s0_reduction(dataset):
    cfg = PipelineConfig(output_size=160, select_prob=0.0)
    stream = RandomStream(303)
    n = 10_000
    modes = Counter()
    pairs = Counter()
    for _ in range(n):
        plan = augment_once(dataset, cfg, stream, render=False).plan
        modes[plan.mode] += 1
        pairs.update((a.image_index, a.quadrant) for a in plan.assignments)
    sigma = math.sqrt(n * 0.25 * 0.75)
    worst = max(abs(pairs[i, q] - n / 4) for i in range(4) for q in range(4))
    ok = modes[PLAIN] == n and worst <= 3 * sigma
    assert record("S=0 reduction", ok, f"{modes[PLAIN]}/{n} plain; max |count - n/4| = {worst:.0f} <= 3 sigma = {3 * sigma:.0f}")


def test_label_soundness(dataset):
    palettes = palettes_for(len(dataset))
    cfg = PipelineConfig(output_size=160, select_prob=0.4)
    stream = RandomStream(404)
    violations = boxes = 0
    for _ in range(1_000):
        result = augment_once(dataset, cfg, stream)
        boxes += len(result.boxes)
        violations += soundness_violations(result, palettes)
    ok = violations == 0 and boxes > 0
    assert record("label soundness", ok, f"{violations} violations, 5x5 inset grid over {boxes} boxes in 1000 mosaics")


def test_density_shift(dataset):
    start = time.perf_counter()
    samples = {}
    for S, seed in ((0.0, 505), (1.0, 506)):
        cfg = PipelineConfig(output_size=160, select_prob=S)
        stream = RandomStream(seed)
        samples[S] = np.array([len(augment_once(dataset, cfg, stream).boxes) for _ in range(1_000)])
    test = stats.ttest_ind(samples[1.0], samples[0.0], equal_var=False, alternative="greater")
    elapsed = time.perf_counter() - start
    m0, m1 = samples[0.0].mean(), samples[1.0].mean()
    ok = m1 > m0 and test.pvalue < 0.01 and elapsed < 300
    assert record(
        "density shift",
        ok,
        f"mean objects S=1 {m1:.2f} vs S=0 {m0:.2f}, Welch p={test.pvalue:.2e} (< 0.01), {elapsed:.1f}s (< 300s)",
    )


def test_determinism(tmp_path):
    ds = mixed_density_dataset()
    generate(ds, REFERENCE_CONFIG, tmp_path / "a")
    generate(ds, REFERENCE_CONFIG, tmp_path / "b")

    def tree(root):
        return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}

    identical = tree(tmp_path / "a") == tree(tmp_path / "b")
    digest = output_digest(tmp_path / "a")
    ok = identical and digest == GOLDEN_DIGEST
    assert record("determinism", ok, f"byte-identical={identical}, digest {digest[:16]}... golden {GOLDEN_DIGEST[:16]}...")


def brute_force_largest(cx, cy, side):
    ys, xs = np.mgrid[0:side, 0:side]
    quadrant = (xs >= cx).astype(int) + 2 * (ys >= cy).astype(int)
    counts = np.bincount(quadrant.ravel(), minlength=4)
    return int(np.argmax(counts)), counts


def test_geometry_exactness():
    rng = random.Random(606)
    L = 1280
    sums_ok = all(
        sum(quadrant_layout(SpliceCenter(rng.randint(0, L), rng.randint(0, L)), L).areas) == L * L
        for _ in range(10_000)
    )
    agree = 0
    for _ in range(1_000):
        # centers on a 20 px lattice so the 1280 canvas scales exactly to 64x64
        cx, cy = 20 * rng.randint(0, 64), 20 * rng.randint(0, 64)
        expected, counts = brute_force_largest(cx // 20, cy // 20, 64)
        layout = quadrant_layout(SpliceCenter(cx, cy), L)
        if largest_quadrant(layout) == expected and list(layout.areas) == [400 * int(c) for c in counts]:
            agree += 1
    ok = sums_ok and agree == 1_000
    assert record("geometry exactness", ok, f"area sums exact={sums_ok}; brute-force agreement {agree}/1000")


def test_yolo_round_trip():
    rng = random.Random(707)
    n = 10_000
    first_pass_ok = fixed_point = 0
    for _ in range(n):
        W, H = rng.randint(1, 8192), rng.randint(1, 8192)
        x1, y1 = rng.randrange(W), rng.randrange(H)
        box = BBox(rng.randrange(100), x1, y1, rng.randint(x1 + 1, W), rng.randint(y1 + 1, H))
        once = parse_yolo_line(serialize_yolo_line(box, W, H), W, H)
        twice = parse_yolo_line(serialize_yolo_line(once, W, H), W, H)
        if once.class_id == box.class_id and all(abs(a - b) <= 1 for a, b in zip(once.as_tuple(), box.as_tuple())):
            first_pass_ok += 1
        if twice == once:
            fixed_point += 1
    ok = first_pass_ok == n and fixed_point == n
    assert record("YOLO round trip", ok, f"first pass within 1 px {first_pass_ok}/{n}; fixed point {fixed_point}/{n}")
