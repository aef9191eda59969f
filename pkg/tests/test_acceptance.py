"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they execute.
"""

import dataclasses
import json
import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy import ndimage

import dynocc as dy
from dynocc.flowops import flow_gradient_magnitude
from dynocc.ordering import decide_foreground_side
from dynocc.pipeline import PipelineConfig, read_annotations, run_pipeline
from dynocc.synthetic import default_scene, render_scene, write_scene
from tests.test_thinning import random_blobs, reference_thin


def check(number: int, description: str, passed: bool) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"[acceptance] criterion {number}: {status} - {description}")
    assert passed, f"criterion {number} failed: {description}"


@pytest.fixture(scope="module")
def scene():
    return render_scene(default_scene())


@pytest.fixture(scope="module")
def gt_run(tmp_path_factory, scene):
    """Pipeline run over serialized frames with ground-truth flow injected."""
    root = tmp_path_factory.mktemp("gt_run")
    paths = write_scene(scene, root, baseline=2)
    config = PipelineConfig.from_dict(
        {
            "frames": str(paths["frames_dir"]),
            "out": str(root / "annotations.jsonl"),
            "flow_source": "flo-dir",
            "flow_dir": str(paths["flow_dir"]),
            "seed": 0,
            "overlay_dir": str(root / "overlays"),
            "sampling": {"keep_rate": 1.0},
        }
    )
    start = time.perf_counter()
    summary = run_pipeline(config)
    elapsed = time.perf_counter() - start
    return {
        "root": root,
        "config": config,
        "summary": summary,
        "elapsed": elapsed,
        "annotations": read_annotations(config.out),
    }


def aggregate_scores(annotations, ground_truth):
    totals = {"pos_total": 0, "pos_correct": 0, "neg_total": 0, "neg_correct": 0}
    for annotation in annotations:
        scores = dy.score_pairs(annotation.pairs, ground_truth.layer_maps[int(annotation.frame)])
        for key in totals:
            totals[key] += scores[key]
    pos = totals["pos_correct"] / totals["pos_total"] if totals["pos_total"] else 1.0
    neg = totals["neg_correct"] / totals["neg_total"] if totals["neg_total"] else 1.0
    return pos, neg, totals


def test_criterion_1_synthetic_end_to_end(scene, gt_run):
    annotations = gt_run["annotations"]
    summary = gt_run["summary"]
    pos, neg, totals = aggregate_scores(annotations, scene.ground_truth)
    per_frame = [len(a.pairs) for a in annotations]
    seconds_per_frame = gt_run["elapsed"] / max(summary["frames_annotated"], 1)
    ok = (
        summary["frames_annotated"] == 6
        and min(per_frame) >= 40
        and pos >= 0.99
        and neg >= 0.99
        and seconds_per_frame < 1.0
    )
    check(
        1,
        f"end-to-end: {min(per_frame)} pairs/frame min, pos={pos:.4f}, "
        f"neg={neg:.4f}, {seconds_per_frame:.3f}s/frame",
        ok,
    )


def test_criterion_2_boundary_quality(scene):
    gt = scene.ground_truth
    worst_precision = 1.0
    worst_recall = 1.0
    for t in range(2, 8):
        mask = dy.detect_boundaries(gt.flow(t, -2), gt.flow(t, 2))
        scores = dy.score_boundaries(mask, gt.boundary_masks[t], tolerance=2)
        worst_precision = min(worst_precision, scores["precision"])
        worst_recall = min(worst_recall, scores["recall"])
    ok = worst_precision >= 0.95 and worst_recall >= 0.70
    check(
        2,
        f"boundaries at 2 px: precision>={worst_precision:.4f}, recall>={worst_recall:.4f}",
        ok,
    )


def test_criterion_3_estimated_flow_robustness(tmp_path, scene):
    paths = write_scene(scene, tmp_path, baseline=2)
    config = PipelineConfig.from_dict(
        {
            "frames": str(paths["frames_dir"]),
            "out": str(tmp_path / "annotations.jsonl"),
            "flow_source": "internal",
            "seed": 0,
            "sampling": {"keep_rate": 1.0},
            "block_matching": {"block_size": 9, "radius": 10},
        }
    )
    summary = run_pipeline(config)
    annotations = read_annotations(config.out)
    pos, _, totals = aggregate_scores(annotations, scene.ground_truth)
    ok = summary["frames_annotated"] == 6 and totals["pos_total"] > 0 and pos >= 0.95
    check(3, f"block-matching flow: pos={pos:.4f} over {totals['pos_total']} pairs", ok)


def test_criterion_4_fusion_unit_fidelity():
    # f_prev varies along x (score 2*a*x), f_next along y (score 2*c*y);
    # the prescribed winner at (x, y) follows from 2*a*x vs 2*c*y exactly
    size = 64
    a, c = 0.2, 0.3
    xs, ys = np.meshgrid(np.arange(size, dtype=float), np.arange(size, dtype=float))
    f_prev = np.zeros((size, size, 2))
    f_prev[..., 0] = a * xs**2 / 2.0
    f_next = np.zeros((size, size, 2))
    f_next[..., 1] = c * ys**2 / 2.0
    mag_prev = flow_gradient_magnitude(f_prev)
    mag_next = flow_gradient_magnitude(f_next)
    fused = dy.fuse_confidence(f_prev, f_next)
    cases = [
        ((30, 10), True), ((40, 5), True), ((50, 20), True), ((36, 8), True),
        ((60, 30), True), ((10, 30), False), ((5, 40), False), ((20, 50), False),
        ((8, 36), False), ((30, 60), False),
    ]
    ok = True
    for (x, y), expect_prev in cases:
        source = mag_prev if expect_prev else mag_next
        ok = ok and bool(fused.from_prev[y, x]) is expect_prev
        ok = ok and fused.values[y, x] == source[y, x]
    check(4, "confidence fusion selects the prescribed side at all 10 pixels", ok)


def test_criterion_5_thinning_suite():
    ok = True
    for seed in range(20):
        blobs = random_blobs(seed)
        skeleton = dy.thin(blobs)
        ok = ok and not (skeleton & ~blobs).any()
        ok = ok and np.array_equal(dy.thin(skeleton), skeleton)
        eight = np.ones((3, 3), dtype=int)
        ok = ok and (
            ndimage.label(blobs, structure=eight)[1]
            == ndimage.label(skeleton, structure=eight)[1]
        )
    bar = np.zeros((9, 26), dtype=bool)
    bar[3:6, 3:23] = True
    expected = reference_thin(bar)
    frozen = np.zeros_like(bar)
    frozen[4, 4:22] = True
    ok = ok and np.array_equal(expected, frozen)
    ok = ok and np.array_equal(dy.thin(bar), frozen)
    check(5, "thinning: idempotent, subset, component-preserving, exact centerline", ok)


def test_criterion_6_loss_metric_oracles():
    rng = np.random.default_rng(606)
    ok = abs(dy.query_loss(1.0, 1.0, 1) - math.log(2.0)) < 1e-9
    ok = ok and abs(dy.query_loss(1.0, 0.5, 0) - 0.25) < 1e-9

    for _ in range(100):
        depth = rng.normal(size=(5, 5))
        count = int(rng.integers(1, 60))
        queries = dy.QuerySet(
            i=np.stack([rng.integers(0, 5, count), rng.integers(0, 5, count)], axis=1),
            j=np.stack([rng.integers(0, 5, count), rng.integers(0, 5, count)], axis=1),
            o=rng.choice([-1, 0, 1], size=count),
        )
        naive = sum(
            dy.query_loss(
                depth[queries.i[k][1], queries.i[k][0]],
                depth[queries.j[k][1], queries.j[k][0]],
                int(queries.o[k]),
            )
            for k in range(count)
        )
        ok = ok and abs(dy.ranking_loss(depth, queries) - naive) < 1e-12

    h = 1e-6
    for _ in range(20):
        gap = float(rng.uniform(-5, 5))
        for o in (-1, 0, 1):
            numeric = (dy.query_loss(gap + h, 0.0, o) - dy.query_loss(gap - h, 0.0, o)) / (2 * h)
            ok = ok and abs(dy.query_loss_gradient(gap, 0.0, o) - numeric) < 1e-6

    count = 1000
    queries = dy.QuerySet(
        i=np.zeros((count, 2), dtype=int),
        j=np.ones((count, 2), dtype=int),
        o=rng.choice([-1, 0, 1], size=count),
        weights=rng.integers(1, 6, count).astype(float),
    )
    predicted = rng.choice([-1, 0, 1], size=count)
    num = den = 0.0
    for k in range(count):
        den += float(queries.weights[k])
        if int(predicted[k]) != int(queries.o[k]):
            num += float(queries.weights[k])
    ok = ok and dy.whdr(predicted, queries) == num / den
    check(6, "loss closed forms, naive-sum, gradient, and brute-force disagreement", ok)


def test_criterion_7_classifier_properties():
    c = 20
    delta = 0.5
    ok = True
    for c1p, c2p, c1n, c2n in product(range(c + 1), repeat=4):
        margin = Fraction(1, 2)
        side1 = Fraction(c1p - c2p, c) > margin and Fraction(c1n - c2n, c) > margin
        side2 = Fraction(c2p - c1p, c) > margin and Fraction(c2n - c1n, c) > margin
        expected = 1 if side1 else 2 if side2 else None
        got = decide_foreground_side((c1p, c2p), (c1n, c2n), c, delta)
        ok = ok and got == expected
        # mutual exclusion
        ok = ok and not (side1 and side2)
        # side-swap antisymmetry
        swapped = decide_foreground_side((c2p, c1p), (c2n, c1n), c, delta)
        ok = ok and swapped == (None if got is None else 3 - got)
        # two-way gating: a one-direction winner alone never classifies
        if (c1p - c2p) / c > delta and not (c1n - c2n) / c > delta:
            ok = ok and got is None
    check(7, "margin rule matches exact-rational brute force over all 21^4 count combos", ok)


def test_criterion_8_determinism_and_format(tmp_path, scene, gt_run):
    config = gt_run["config"]
    rerun = dataclasses.replace(
        config,
        out=str(tmp_path / "again.jsonl"),
        overlay_dir=str(tmp_path / "overlays"),
    )
    run_pipeline(rerun)
    same_jsonl = (
        (tmp_path / "again.jsonl").read_bytes()
        == (gt_run["root"] / "annotations.jsonl").read_bytes()
    )
    first_overlays = sorted((gt_run["root"] / "overlays").iterdir())
    second_overlays = sorted((tmp_path / "overlays").iterdir())
    same_overlays = [p.name for p in first_overlays] == [p.name for p in second_overlays] and all(
        a.read_bytes() == b.read_bytes() for a, b in zip(first_overlays, second_overlays)
    )

    rng = np.random.default_rng(808)
    flo_ok = True
    for _ in range(100):
        height = int(rng.integers(1, 12))
        width = int(rng.integers(1, 12))
        field = rng.standard_normal((height, width, 2)).astype(np.float32)
        flo_ok = flo_ok and np.array_equal(dy.read_flo(dy.write_flo(field)), field)

    drop_ok = True
    for n, expected in ((0, 0), (1, 0), (9, 0), (10, 1), (1000, 100)):
        pairs = [dy.DepthPair((k, 0), (k, 1), 1) for k in range(n)]
        kept = dy.random_drop(pairs, 0.10, np.random.default_rng(1))
        drop_ok = drop_ok and len(kept) == expected

    ok = same_jsonl and same_overlays and flo_ok and drop_ok
    check(8, "byte-identical reruns, bit-exact flow round trips, exact drop counts", ok)


def test_criterion_9_degenerate_safety(tmp_path):
    from dynocc.cli import main as cli_main
    from dynocc.flowio import save_frame_png
    from dynocc.synthetic import SceneSpec, Sprite

    static_spec = SceneSpec(
        width=96,
        height=96,
        frame_count=6,
        background_seed=3,
        sprites=(Sprite(x=30, y=30, width=30, height=30, layer=0, velocity=(0, 0), texture_seed=5),),
    )
    static_root = tmp_path / "static"
    paths = write_scene(render_scene(static_spec), static_root, baseline=2)
    config_path = static_root / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "frames": str(paths["frames_dir"]),
                "out": str(static_root / "annotations.jsonl"),
                "flow_source": "flo-dir",
                "flow_dir": str(paths["flow_dir"]),
            }
        )
    )
    rc = cli_main(["--config", str(config_path)])
    static_annotations = read_annotations(static_root / "annotations.jsonl")
    static_ok = rc == 0 and all(len(a.pairs) == 0 for a in static_annotations)

    flat_dir = tmp_path / "flat_frames"
    flat_dir.mkdir()
    for t in range(6):
        save_frame_png(np.full((48, 48), 0.5), flat_dir / f"{t:05d}.png")
    flat_config = PipelineConfig.from_dict(
        {
            "frames": str(flat_dir),
            "out": str(tmp_path / "flat.jsonl"),
            "flow_source": "internal",
            "block_matching": {"block_size": 5, "radius": 3},
        }
    )
    summary = run_pipeline(flat_config)
    flat_annotations = read_annotations(flat_config.out)
    flat_ok = (
        summary["pairs_total"] == 0
        and all(a.stats["segments_classified"] == 0 for a in flat_annotations)
    )
    ok = static_ok and flat_ok
    check(9, "static clip: zero pairs, exit 0; flat textures: zero classified segments", ok)
