import itertools

import numpy as np
import pytest

from lesionkit.candidates import CandidateRegion, SOURCE_ORDER
from lesionkit.ensemble import (
    ConfidenceMap,
    EnsembleConfig,
    TypeMap,
    UndefinedMetricError,
    cluster_candidates,
    evaluate_mask,
    finalize,
    fuse,
    segment_image,
    segmentation_report,
    select_type_map,
)
from lesionkit.cluster import learn_prototypes
from lesionkit.raster import BinaryMask, PlaneMap
from lesionkit.regions import connected_regions
from lesionkit.synthetic import make_dataset

from conftest import disk_mask, flat_image, paint


def region_at(x, y, size, w=20, h=20):
    bits = np.zeros((h, w), dtype=bool)
    bits[y : y + size, x : x + size] = True
    return connected_regions(BinaryMask(bits))[0]


def cand(x, y, size, conf, source="gray"):
    return CandidateRegion(region=region_at(x, y, size), source=source, confidence=conf)


class TestSelectTypeMap:
    def test_top_two_of_three(self):
        cands = [cand(0, 0, 2, 0.1), cand(5, 5, 2, 0.9), cand(10, 10, 2, 0.5)]
        tm = select_type_map(cands, "gray", 2, 20, 20)
        want = cands[1].region.to_mask().bits | cands[2].region.to_mask().bits
        assert np.array_equal(tm.mask.bits, want)

    def test_no_candidates_empty_mask(self):
        tm = select_type_map([], "blue", 2, 8, 8)
        assert not tm.mask.bits.any()

    def test_top_one_unique_max(self):
        cands = [cand(0, 0, 3, 0.2), cand(6, 6, 3, 0.8)]
        tm = select_type_map(cands, "gray", 1, 20, 20)
        assert np.array_equal(tm.mask.bits, cands[1].region.to_mask().bits)


class TestFuse:
    def test_identical_maps_give_seven(self):
        bits = disk_mask(10, 10, 5, 5, 3).bits
        maps = [TypeMap(s, BinaryMask(bits)) for s in SOURCE_ORDER]
        cm = fuse(maps)
        assert cm.values[bits].min() == 7
        assert cm.values[~bits].max() == 0

    def test_all_empty(self):
        maps = [TypeMap(s, BinaryMask(np.zeros((4, 4), dtype=bool))) for s in SOURCE_ORDER]
        assert fuse(maps).values.max() == 0

    def test_three_votes(self):
        bits = np.zeros((6, 6), dtype=bool)
        bits[2, 2] = True
        maps = [
            TypeMap(s, BinaryMask(bits if i < 3 else np.zeros_like(bits)))
            for i, s in enumerate(SOURCE_ORDER)
        ]
        assert fuse(maps).values[2, 2] == 3

    def test_dimension_mismatch(self):
        a = TypeMap("gray", BinaryMask(np.zeros((4, 4), dtype=bool)))
        b = TypeMap("red", BinaryMask(np.zeros((5, 4), dtype=bool)))
        with pytest.raises(ValueError):
            fuse([a, b])

    def test_commutative(self, rng):
        masks = [BinaryMask(rng.random((8, 8)) < 0.3) for _ in range(4)]
        maps = [TypeMap(SOURCE_ORDER[i], m) for i, m in enumerate(masks)]
        base = fuse(maps).values
        for perm in itertools.permutations(range(4)):
            assert np.array_equal(fuse([maps[i] for i in perm]).values, base)


class TestFinalize:
    def test_single_blob_passes_through(self):
        blob = disk_mask(20, 20, 10, 10, 4).bits
        cm = ConfidenceMap(PlaneMap(np.where(blob, 5.0, 0.0)))
        out = finalize(cm, 3)
        assert np.array_equal(out.bits, blob)

    def test_two_blobs_become_hull(self):
        v = np.zeros((20, 20))
        v[3:6, 3:6] = 5
        v[14:17, 14:17] = 5
        out = finalize(ConfidenceMap(PlaneMap(v)), 3)
        regions = connected_regions(out, min_area=1)
        assert len(regions) == 1
        assert out.bits[3:6, 3:6].all() and out.bits[14:17, 14:17].all()
        assert out.bits[9, 9]  # between the blobs, inside the hull

    def test_all_zero_empty(self):
        out = finalize(ConfidenceMap(PlaneMap(np.zeros((8, 8)))), 3)
        assert not out.bits.any()

    def test_fallback_to_single_vote(self):
        v = np.zeros((10, 10))
        v[4:6, 4:6] = 1
        out = finalize(ConfidenceMap(PlaneMap(v)), 5)
        assert out.bits[4:6, 4:6].all()

    def test_threshold_monotone_pre_hull(self, rng):
        v = np.floor(rng.random((12, 12)) * 8)
        prev = None
        for t in range(1, 8):
            cur = v >= t
            if prev is not None:
                assert (cur <= prev).all()
            prev = cur


class TestEvaluateMask:
    def test_perfect_prediction(self):
        t = disk_mask(20, 20, 10, 10, 5)
        assert evaluate_mask(t, t) == 1.0

    def test_empty_prediction_zero(self):
        t = disk_mask(20, 20, 10, 10, 5)
        empty = BinaryMask(np.zeros((20, 20), dtype=bool))
        assert evaluate_mask(empty, t) == 0.0

    def test_half_coverage(self):
        truth = np.zeros((100, 100), dtype=bool)
        truth[0:10, 0:10] = True  # 100 px
        pred = np.zeros((100, 100), dtype=bool)
        pred[0:5, 0:10] = True  # covers 50, no false positives
        got = evaluate_mask(BinaryMask(pred), BinaryMask(truth))
        assert got == pytest.approx(0.5)

    def test_empty_truth_rejected(self):
        m = BinaryMask(np.zeros((5, 5), dtype=bool))
        p = disk_mask(5, 5, 2, 2, 1)
        with pytest.raises(UndefinedMetricError):
            evaluate_mask(p, m)

    def test_full_truth_rejected(self):
        m = BinaryMask(np.ones((5, 5), dtype=bool))
        with pytest.raises(UndefinedMetricError):
            evaluate_mask(m, m)


@pytest.fixture(scope="module")
def store():
    train = make_dataset(6, root_seed=99)
    return learn_prototypes([(s.image, s.truth) for s in train], seed=0)


class TestSegmentationPipeline:

    def test_segment_image_produces_all_maps(self, store):
        sample = make_dataset(1, root_seed=5)[0]
        res = segment_image(sample.image, store, seed=1)
        assert set(res.type_maps) == set(SOURCE_ORDER)
        assert res.confidence_map.values.max() <= 7
        regions = connected_regions(res.final_mask, min_area=1)
        assert len(regions) == 1

    def test_report_on_synthetic_images(self, store):
        data = [(s.image_id, s.image, s.truth) for s in make_dataset(8, root_seed=3)]
        rep = segmentation_report(data, store, seed=1)
        assert set(rep.per_type) == set(SOURCE_ORDER)
        assert 0.0 <= rep.ensemble_accuracy <= 1.0
        assert rep.max_per_image_accuracy >= rep.ensemble_accuracy
        assert sum(rep.dominating_counts.values()) == len(rep.per_image)
        for row in rep.per_image:
            best_type = max(row[s] for s in SOURCE_ORDER)
            assert max(row["ensemble"], best_type) + 1e-12 >= row["ensemble"]

    def test_report_isolates_failures(self, store):
        good = make_dataset(2, root_seed=11)
        bad_truth = BinaryMask(np.zeros((96, 96), dtype=bool))  # empty: metric undefined
        data = [(s.image_id, s.image, s.truth) for s in good]
        data.append(("broken", good[0].image, bad_truth))
        rep = segmentation_report(data, store, seed=1)
        assert len(rep.errors) == 1
        assert rep.errors[0][0] == "broken"
        assert len(rep.per_image) == 2

    def test_perfect_single_image_counts(self):
        # craft candidates so every type proposes exactly the truth
        truth = disk_mask(30, 30, 15, 15, 6)
        rg = connected_regions(truth)[0]
        cands = [CandidateRegion(region=rg, source=s, confidence=1.0) for s in SOURCE_ORDER]
        maps = {s: select_type_map(cands, s, 2, 30, 30) for s in SOURCE_ORDER}
        cm = fuse([maps[s] for s in SOURCE_ORDER])
        final = finalize(cm, 3)
        accs = [evaluate_mask(maps[s].mask, truth) for s in SOURCE_ORDER]
        assert all(a == 1.0 for a in accs)
        assert evaluate_mask(final, truth) == 1.0


def test_cluster_candidates_without_store_only_ity():
    img = paint(flat_image(40, 40, (220, 200, 190)), disk_mask(40, 40, 20, 20, 9), (90, 60, 50))
    cands = cluster_candidates(img, store=None, seed=0)
    assert cands
    assert {c.source for c in cands} == {"kmeans-ity"}


def test_max_cra_candidate_recovers_disks():
    # disk-on-skin draws: the top color-resemblance candidate localizes the
    # lesion (aggregate IoU >= 0.8; hair occasionally fragments one draw)
    train = make_dataset(10, root_seed=4242, kinds=("disk",), distractors=False)
    store = learn_prototypes([(s.image, s.truth) for s in train], seed=0)
    draws = make_dataset(50, root_seed=777, kinds=("disk",), distractors=False)
    ious = []
    for s in draws:
        cands = [c for c in cluster_candidates(s.image, store, seed=2) if c.source == "kmeans-cra"]
        best = max(cands, key=lambda c: c.confidence)
        p = best.region.to_mask().bits
        t = s.truth.bits
        ious.append((p & t).sum() / (p | t).sum())
    ious = np.array(ious)
    assert ious.mean() >= 0.8
    assert (ious >= 0.8).sum() >= 45


def test_finalize_merged_result_is_convex():
    from lesionkit.regions import convex_hull_mask

    v = np.zeros((24, 24))
    v[3:6, 3:6] = 5
    v[15:18, 16:19] = 5
    v[4, 20] = 5
    out = finalize(ConfidenceMap(PlaneMap(v)), 3)
    regions = connected_regions(out, min_area=1)
    hull_again = convex_hull_mask(regions, 24, 24)
    assert np.array_equal(out.bits, hull_again.bits)
