"""Acceptance criteria, one test per criterion, each printing PASS/FAIL.

The paper-number reproduction run needs the real challenge dataset and is
skipped unless LESIONKIT_ISIC_DIR points at it; everything else is
desk-scale and runs in CI.
"""

import os

import numpy as np
import pytest

from lesionkit.candidates import SOURCE_ORDER
from lesionkit.cluster import kmeans_rgb, learn_prototypes
from lesionkit.ensemble import segmentation_report
from lesionkit.features import (
    FEATURE_LENGTH,
    TOTAL_ATTRIBUTES,
    cross_validate,
    featurize,
    fit,
    learn_edges,
    stratified_folds,
)
from lesionkit.raster import BinaryMask, RasterImage
from lesionkit.regions import connected_regions, convex_hull_mask, distance_transform
from lesionkit.shapedesc import (
    RadialSignature,
    boundary_descriptor,
    distribution_descriptor,
    radial_signature,
    sym_axis_descriptors,
)
from lesionkit.synthetic import make_dataset
from lesionkit.cli import main

from conftest import disk_mask
from oracles import distance_oracle, flood_fill_components, hull_mask_oracle
from test_features import signal_bundle


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------


@pytest.mark.skipif(
    "LESIONKIT_ISIC_DIR" not in os.environ,
    reason="paper-number reproduction needs the user-supplied challenge dataset",
)
def test_paper_number_reproduction():
    """Conditional reference run against the real training data."""
    from lesionkit.dataset import ingest, load_image, load_truth

    root = os.environ["LESIONKIT_ISIC_DIR"]
    manifest = ingest(root, "isic")
    entries = manifest.with_truth()
    half = len(entries) // 10 or 1
    store = learn_prototypes(
        [(load_image(e, 512), load_truth(e, 512)) for e in entries[:half]], seed=0
    )
    data = [
        (e.image_id, load_image(e, 512), load_truth(e, 512)) for e in entries[half:]
    ]
    rep = segmentation_report(data, store, seed=0)
    report(
        "paper: ensemble accuracy within 0.05 of 0.79",
        abs(rep.ensemble_accuracy - 0.79) <= 0.05,
        f"got {rep.ensemble_accuracy:.3f}",
    )
    report(
        "paper: max-per-image within 0.05 of 0.86",
        abs(rep.max_per_image_accuracy - 0.86) <= 0.05,
        f"got {rep.max_per_image_accuracy:.3f}",
    )
    report(
        "paper: gray type within 0.06 of 0.67",
        abs(rep.per_type["gray"] - 0.67) <= 0.06,
        f"got {rep.per_type['gray']:.3f}",
    )


# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def desk_suite():
    train = make_dataset(10, root_seed=1000)
    store = learn_prototypes([(s.image, s.truth) for s in train], seed=0)
    samples = make_dataset(200, root_seed=0)
    data = [(s.image_id, s.image, s.truth) for s in samples]
    rep = segmentation_report(data, store, seed=1)
    return rep


def test_desk_scale_segmentation_suite(desk_suite):
    rep = desk_suite
    best_type = max(rep.per_type.values())
    report(
        "desk: ensemble >= every type average - 0.02",
        rep.ensemble_accuracy >= best_type - 0.02,
        f"ensemble {rep.ensemble_accuracy:.3f} vs best type {best_type:.3f}",
    )
    per_image_ok = all(
        max(row["ensemble"], max(row[s] for s in SOURCE_ORDER)) + 1e-12
        >= row["ensemble"]
        for row in rep.per_image
    )
    max_rows = [
        max(row["ensemble"], max(row[s] for s in SOURCE_ORDER)) for row in rep.per_image
    ]
    report(
        "desk: max-per-image >= ensemble on every image",
        per_image_ok and len(rep.per_image) == 200 and not rep.errors,
        f"{len(rep.per_image)} images, mean max {np.mean(max_rows):.3f}",
    )


# ---------------------------------------------------------------------------


def test_oracle_equivalence():
    rng = np.random.default_rng(12345)
    cases = 0
    for _ in range(1000):
        w = int(rng.integers(1, 13))
        h = int(rng.integers(1, 13))
        bits = rng.random((h, w)) < float(rng.uniform(0.2, 0.8))
        if not bits.any():
            bits[rng.integers(h), rng.integers(w)] = True
        mask = BinaryMask(bits)

        got = sorted(r.pixel_set() for r in connected_regions(mask, min_area=1))
        want = sorted(frozenset(c) for c in flood_fill_components(bits))
        assert got == want, "connected_regions diverged from flood fill"

        hull = convex_hull_mask(connected_regions(mask, min_area=1), w, h)
        assert np.array_equal(hull.bits, hull_mask_oracle(bits)), "hull diverged"

        dist = distance_transform(mask)
        assert np.array_equal(dist.values, distance_oracle(bits)), "distance diverged"
        cases += 1
    report("oracles: regions/hull/distance match brute force on 12x12", cases == 1000, f"{cases} cases")


def test_kmeans_properties(rng):
    px = rng.integers(0, 256, size=(40, 40, 3), dtype=np.uint8)
    img = RasterImage(px)
    monotone = True
    for k in (2, 3, 5, 8):
        w = kmeans_rgb(img, k, seed=11).wcss_history
        monotone &= all(b <= a + 1e-6 for a, b in zip(w, w[1:]))
    report("kmeans: WCSS monotone non-increasing", monotone)

    two = np.full((30, 30, 3), 230, dtype=np.uint8)
    two[:, :15] = 25
    cl = kmeans_rgb(RasterImage(two), 2, seed=3)
    left, right = cl.labels[:, :15], cl.labels[:, 15:]
    exact = (
        (left == left[0, 0]).all()
        and (right == right[0, 0]).all()
        and left[0, 0] != right[0, 0]
    )
    report("kmeans: exact recovery on two-color image", bool(exact))

    runs = [kmeans_rgb(img, 5, seed=99) for _ in range(3)]
    reproducible = all(
        np.array_equal(runs[0].labels, r.labels) and np.array_equal(runs[0].centers, r.centers)
        for r in runs[1:]
    )
    report("kmeans: bit-reproducible under fixed seed (3 runs)", reproducible)


def test_descriptor_invariants(rng):
    circle = connected_regions(disk_mask(50, 50, 25, 25, 20))[0]
    sig = radial_signature(circle)
    shifted = RadialSignature(samples=np.roll(sig.samples, 41), mean_radius=sig.mean_radius)
    a, b = boundary_descriptor(sig), boundary_descriptor(shifted)
    report(
        "descriptors: Fourier magnitudes invariant under start-point shift",
        bool(np.allclose(a.fourier, b.fourier, atol=1e-12)),
    )
    report(
        "descriptors: circle has 0 extrema and Fourier < 0.05",
        a.extrema_count == 0 and bool(np.all(a.fourier < 0.05)),
        f"extrema={a.extrema_count}, max fourier={a.fourier.max():.4f}",
    )

    bits = np.zeros((20, 110), dtype=bool)
    bits[5:15, 5:105] = True
    sym = sym_axis_descriptors(connected_regions(BinaryMask(bits))[0])
    best = max(sym.long, key=lambda r: r[0]) if sym.long else (0, 0)
    report(
        "descriptors: 10x100 rectangle long axis 90±5, radius 5±1",
        bool(sym.long) and abs(best[0] - 90) <= 5 and abs(best[1] - 5) <= 1,
        f"length={best[0]:.1f}, radius={best[1]:.2f}",
    )

    checked = 0
    in_range = True
    while checked < 1000:
        bits = rng.random((20, 20)) < float(rng.uniform(0.3, 0.6))
        for rg in connected_regions(BinaryMask(bits), min_area=2):
            row = distribution_descriptor(rg, 20, 20).as_row()
            in_range &= bool(np.all((row >= 0.0) & (row <= 1.0)))
            checked += 1
            if checked >= 1000:
                break
    report("descriptors: 1000 random blobs have distribution fields in [0,1]", in_range, f"{checked} blobs")

    from lesionkit.topology import GROUP_ATTRS, SEGMENT_ATTRS, describe_all_contours, extract_contours, find_bundles, find_clots, scale_pair
    from lesionkit.raster import to_planes

    sample = make_dataset(1, root_seed=77)[0]
    sp = scale_pair(to_planes(sample.image)[0])
    segments = describe_all_contours(extract_contours(sp), sample.image)
    groups = find_clots(segments) + find_bundles(segments)
    seg_ok = bool(segments) and all(s.attributes.shape == (SEGMENT_ATTRS,) for s in segments)
    grp_ok = all(g.attributes.shape == (GROUP_ATTRS,) for g in groups)
    report(
        "descriptors: every contour segment has 15 attrs, every group 19",
        seg_ok and grp_ok and SEGMENT_ATTRS == 15 and GROUP_ATTRS == 19,
        f"{len(segments)} segments, {len(groups)} groups",
    )


def test_classifier_properties():
    rng = np.random.default_rng(2024)
    data = [(signal_bundle(rng, i % 3), f"c{i % 3}") for i in range(30)]

    folds = stratified_folds([lab for _, lab in data], 5)
    train = [data[i] for i in range(len(data)) if folds[i] != 0]
    m1 = fit(train, p_components=8)
    m2 = fit(train, p_components=8)  # test-fold deletion cannot reach the model
    report("classifier: zero train/test leakage (refit equality)", m1.to_json() == m2.to_json())

    res = cross_validate(data, folds=5, p_components=8)
    off_diag = res.confusion.copy()
    np.fill_diagonal(off_diag, 0)
    report(
        "classifier: separable 3-class CV accuracy 1.0",
        res.accuracy == 1.0 and off_diag.sum() == 0,
        f"accuracy={res.accuracy:.3f}",
    )

    big = [(signal_bundle(rng, i % 3), f"c{i % 3}") for i in range(90)]
    labels = [lab for _, lab in big]
    shuffled = list(rng.permutation(labels))
    shuffled_data = [(b, lab) for (b, _), lab in zip(big, shuffled)]
    res2 = cross_validate(shuffled_data, folds=5, p_components=8)
    report(
        "classifier: shuffled labels give chance-level accuracy",
        abs(res2.accuracy - 1 / 3) <= 0.1,
        f"accuracy={res2.accuracy:.3f} vs chance 0.333",
    )

    bundle = signal_bundle(rng, 0)
    edges = learn_edges([bundle])
    v = featurize(bundle, edges)
    report(
        "classifier: feature vector length 12 x 280 = 3360",
        v.shape == (3360,) and TOTAL_ATTRIBUTES == 280 and FEATURE_LENGTH == 3360,
        f"A={TOTAL_ATTRIBUTES}, len={v.shape[0]}",
    )


def test_determinism_byte_identical(tmp_path):
    from test_cli import make_prototypes, write_flat_dataset

    data = tmp_path / "data"
    write_flat_dataset(data, n=3, size=64, root_seed=21)
    store = make_prototypes(tmp_path, data)
    json_blobs, csv_blobs = [], []
    for run in ("one", "two"):
        out = tmp_path / f"run_{run}"
        rc = main([
            "evaluate-seg", "--data", str(data), "--prototypes", str(store),
            "--out-dir", str(out), "--seed", "5",
        ])
        assert rc == 0
        json_blobs.append((out / "segmentation_report.json").read_bytes())
    # CSV determinism via the cv artifacts on planted descriptor bundles
    rng = np.random.default_rng(8)
    desc = tmp_path / "desc"
    desc.mkdir()
    from lesionkit.features import write_descriptor_csv
    ids = write_flat_dataset(tmp_path / "data2", n=15, size=48, labels=["c0", "c1", "c2"], root_seed=77)
    for i, image_id in enumerate(ids):
        write_descriptor_csv(signal_bundle(rng, i % 3), desc / f"{image_id}.csv")
    for run in ("one", "two"):
        out = tmp_path / f"cv_{run}"
        rc = main([
            "cv", "--data", str(tmp_path / "data2"), "--descriptors", str(desc),
            "--out-dir", str(out), "--folds", "5", "--seed", "5",
        ])
        assert rc == 0
        csv_blobs.append((out / "confusion.csv").read_bytes() + (out / "cv.json").read_bytes())
    report(
        "determinism: byte-identical JSON/CSV across two runs",
        json_blobs[0] == json_blobs[1] and csv_blobs[0] == csv_blobs[1],
    )
