import math

import numpy as np
import pytest

from lesionkit.cluster import (
    EmptyStoreError,
    PrototypeStore,
    interiority_stats,
    kmeans_rgb,
    labeling_regions,
    learn_prototypes,
    region_mean_rgb,
    rgb_melanomaty,
    score_cra,
    score_hull,
    score_ity,
)
from lesionkit.raster import BinaryMask, RasterImage
from lesionkit.regions import RegionStats, connected_regions, region_stats

from conftest import annulus_mask, disk_mask, flat_image, paint


def two_tone_image(w=40, h=40):
    px = np.full((h, w, 3), 220, dtype=np.uint8)
    px[:, : w // 2] = 20
    return RasterImage(px)


class TestKMeans:
    def test_two_color_exact_recovery(self):
        img = two_tone_image()
        cl = kmeans_rgb(img, 2, seed=1)
        left = cl.labels[:, :20]
        right = cl.labels[:, 20:]
        assert (left == left[0, 0]).all()
        assert (right == right[0, 0]).all()
        assert left[0, 0] != right[0, 0]
        got = sorted(cl.centers[:, 0])
        assert abs(got[0] - 20) <= 1.0
        assert abs(got[1] - 220) <= 1.0

    def test_constant_image_one_empty_cluster(self):
        cl = kmeans_rgb(flat_image(16, 16, (99, 99, 99)), 2, seed=0)
        counts = np.bincount(cl.labels.ravel(), minlength=2)
        assert sorted(counts) == [0, 256]
        assert len(cl.empty_clusters) == 1

    def test_wcss_monotone(self, rng):
        px = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        for k in (2, 4, 8):
            cl = kmeans_rgb(RasterImage(px), k, seed=5)
            w = cl.wcss_history
            assert all(w[i + 1] <= w[i] + 1e-6 for i in range(len(w) - 1))

    def test_seed_reproducible(self, rng):
        px = rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8)
        img = RasterImage(px)
        runs = [kmeans_rgb(img, 5, seed=42) for _ in range(3)]
        for other in runs[1:]:
            assert np.array_equal(runs[0].labels, other.labels)
            assert np.array_equal(runs[0].centers, other.centers)

    def test_k_validation(self):
        with pytest.raises(ValueError):
            kmeans_rgb(flat_image(4, 4, (0, 0, 0)), 1)
        with pytest.raises(ValueError):
            kmeans_rgb(flat_image(4, 4, (0, 0, 0)), 9)


class TestLabelingRegions:
    def test_disk_on_background(self):
        img = paint(flat_image(40, 40, (230, 230, 230)), disk_mask(40, 40, 20, 20, 10), (30, 30, 30))
        cl = kmeans_rgb(img, 2, seed=0)
        regions = labeling_regions(cl, min_area=1)
        assert len(regions) >= 2

    def test_label_purity(self):
        img = two_tone_image()
        cl = kmeans_rgb(img, 2, seed=0)
        for rg in labeling_regions(cl):
            px = rg.pixels
            labs = cl.labels[px[:, 1], px[:, 0]]
            assert (labs == labs[0]).all()

    def test_fragmented_cluster_two_regions(self):
        img = flat_image(60, 30, (240, 240, 240))
        img = paint(img, disk_mask(60, 30, 14, 15, 6), (10, 10, 10))
        img = paint(img, disk_mask(60, 30, 45, 15, 6), (10, 10, 10))
        cl = kmeans_rgb(img, 2, seed=0)
        regions = labeling_regions(cl, min_area=5)
        dark = [r for r in regions if region_mean_rgb(r, img)[0] < 100]
        assert len(dark) == 2


class TestPrototypes:
    def test_learn_from_matching_disk(self):
        truth = disk_mask(40, 40, 20, 20, 10)
        img = paint(flat_image(40, 40, (210, 190, 180)), truth, (80, 50, 40))
        store = learn_prototypes([(img, truth)], seed=0)
        assert len(store) >= 1
        best = store.nearest_distance((80, 50, 40))
        assert best <= 10.0

    def test_full_truth_keeps_everything(self):
        img = two_tone_image(20, 20)
        truth = BinaryMask(np.ones((20, 20), dtype=bool))
        store = learn_prototypes([(img, truth)], min_area=1, seed=0)
        assert len(store) >= 2

    def test_two_images_span_colors(self):
        t1 = disk_mask(36, 36, 18, 18, 9)
        img1 = paint(flat_image(36, 36, (220, 220, 220)), t1, (100, 20, 20))
        img2 = paint(flat_image(36, 36, (220, 220, 220)), t1, (20, 20, 100))
        store = learn_prototypes([(img1, t1), (img2, t1)], seed=0)
        assert store.nearest_distance((100, 20, 20)) <= 15
        assert store.nearest_distance((20, 20, 100)) <= 15

    def test_order_invariant_serialization(self):
        t = disk_mask(36, 36, 18, 18, 9)
        img1 = paint(flat_image(36, 36, (220, 220, 220)), t, (100, 20, 20))
        img2 = paint(flat_image(36, 36, (220, 220, 220)), t, (20, 20, 100))
        s1 = learn_prototypes([(img1, t), (img2, t)], seed=0)
        s2 = learn_prototypes([(img2, t), (img1, t)], seed=0)
        assert s1.to_json() == s2.to_json()

    def test_no_region_inside_truth_raises(self):
        img = flat_image(20, 20, (200, 200, 200))
        truth = BinaryMask(np.zeros((20, 20), dtype=bool))
        with pytest.raises(ValueError):
            learn_prototypes([(img, truth)])

    def test_json_roundtrip(self):
        store = PrototypeStore(sigma_rgb=25.0, prototypes=[(10, 20, 30), (1, 2, 3)])
        back = PrototypeStore.from_json(store.to_json())
        assert back.sigma_rgb == 25.0
        assert back.prototypes == store.prototypes


class TestMelanomaty:
    def setup_method(self):
        self.store = PrototypeStore(sigma_rgb=30.0, prototypes=[(100, 60, 50)])
        self.img = paint(
            flat_image(20, 20, (100, 60, 50)), disk_mask(20, 20, 10, 10, 6), (100, 60, 50)
        )
        self.rg = connected_regions(disk_mask(20, 20, 10, 10, 6))[0]

    def test_exact_match_is_one(self):
        assert rgb_melanomaty(self.rg, self.img, self.store) == pytest.approx(1.0)

    def test_one_sigma_value(self):
        img = paint(flat_image(20, 20, (0, 0, 0)), disk_mask(20, 20, 10, 10, 6), (130, 60, 50))
        s = rgb_melanomaty(self.rg, img, self.store)
        assert s == pytest.approx(math.exp(-0.5), abs=1e-9)

    def test_monotone_in_distance(self):
        vals = []
        for shade in (100, 120, 150, 200):
            img = paint(flat_image(20, 20, (0, 0, 0)), disk_mask(20, 20, 10, 10, 6), (shade, 60, 50))
            vals.append(rgb_melanomaty(self.rg, img, self.store))
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_empty_store_raises(self):
        with pytest.raises(EmptyStoreError):
            rgb_melanomaty(self.rg, self.img, PrototypeStore())


class TestScores:
    def test_cra_direct_product(self):
        stats = RegionStats(centrality=1.0, norm_area=0.2, coverage=1.0, border_fraction=0.0)
        assert score_cra(stats, 0.5) == pytest.approx(0.1)
        assert score_cra(stats, 0.0) == 0.0

    def test_ity_disk_near_norm_area(self):
        m = disk_mask(60, 60, 30, 30, 15)
        rg = connected_regions(m)[0]
        stats = region_stats(rg, 60, 60)
        ity = interiority_stats(rg)
        got = score_ity(stats, ity)
        assert got == pytest.approx(stats.norm_area, abs=0.05)

    def test_ity_annulus_near_zero_and_below_disk(self):
        disk = connected_regions(disk_mask(60, 60, 30, 30, 15))[0]
        ring = connected_regions(annulus_mask(60, 60, 30, 30, 11.5, 15))[0]
        s_disk = score_ity(region_stats(disk, 60, 60), interiority_stats(disk))
        s_ring = score_ity(region_stats(ring, 60, 60), interiority_stats(ring))
        assert interiority_stats(ring).ringness > 0.9
        assert s_ring < 0.1 * s_disk

    def test_solidity_factor_one_for_hull_equal(self):
        bits = np.zeros((20, 20), dtype=bool)
        bits[5:15, 4:16] = True
        rg = connected_regions(BinaryMask(bits))[0]
        assert interiority_stats(rg).solidity == 1.0

    def test_hull_no_nested_zero(self):
        rg = connected_regions(disk_mask(30, 30, 15, 15, 10))[0]
        stats = region_stats(rg, 30, 30)
        assert score_hull(rg, stats, []) == 0.0

    def test_hull_half_coverage_term(self):
        outer_bits = np.zeros((40, 40), dtype=bool)
        outer_bits[10:30, 10:30] = True  # 400 px
        inner_bits = np.zeros((40, 40), dtype=bool)
        inner_bits[15:25, 10:30] = True  # 200 px, fully inside
        outer = connected_regions(BinaryMask(outer_bits))[0]
        inner = connected_regions(BinaryMask(inner_bits))[0]
        stats = region_stats(outer, 40, 40)
        got = score_hull(outer, stats, [(inner, 1.0)])
        base = stats.centrality * stats.norm_area
        assert got == pytest.approx(base * 0.5)

    def test_hull_additional_region_never_decreases(self):
        outer_bits = np.zeros((40, 40), dtype=bool)
        outer_bits[5:35, 5:35] = True
        outer = connected_regions(BinaryMask(outer_bits))[0]
        in1 = np.zeros((40, 40), dtype=bool)
        in1[10:20, 10:20] = True
        in2 = np.zeros((40, 40), dtype=bool)
        in2[25:30, 25:30] = True
        r1 = connected_regions(BinaryMask(in1))[0]
        r2 = connected_regions(BinaryMask(in2))[0]
        stats = region_stats(outer, 40, 40)
        one = score_hull(outer, stats, [(r1, 0.8)])
        two = score_hull(outer, stats, [(r1, 0.8), (r2, 0.9)])
        assert two >= one

    def test_scores_nonnegative(self):
        rg = connected_regions(disk_mask(30, 30, 15, 15, 8))[0]
        stats = region_stats(rg, 30, 30)
        ity = interiority_stats(rg)
        assert score_ity(stats, ity) >= 0
        assert score_cra(stats, 0.3) >= 0


def test_interiority_bounds_random_blobs(rng):
    for _ in range(40):
        bits = rng.random((24, 24)) < 0.45
        if not bits.any():
            continue
        for rg in connected_regions(BinaryMask(bits), min_area=2):
            st = interiority_stats(rg)
            for v in (st.solidity, st.central_compactness, st.hole_fraction, st.ringness):
                assert 0.0 <= v <= 1.0
