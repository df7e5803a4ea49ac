import math

import numpy as np
import pytest

from puddlemap import segmenter
from puddlemap.imagery import Frame
from puddlemap.segmenter import felzenszwalb, segment_features


def random_raster(rng, h=16, w=16):
    return rng.uniform(0, 255, (h, w, 3))


class TestFelzenszwalb:
    def test_constant_raster_single_segment(self):
        raster = np.full((4, 4, 3), 42.0)
        sm = felzenszwalb(raster, k=1.0, min_size=1)
        assert sm.segment_count == 1
        assert sm.segment_sizes.tolist() == [16]

    def test_two_pixel_split(self):
        # edge weight 255*sqrt(3) ~ 441.7 > 0 + 10 -> no merge
        raster = np.array([[[0.0, 0, 0], [255.0, 255, 255]]])
        sm = felzenszwalb(raster, k=10.0, min_size=1)
        assert sm.segment_count == 2

    def test_two_pixel_merge_large_k(self):
        raster = np.array([[[0.0, 0, 0], [255.0, 255, 255]]])
        assert 255 * math.sqrt(3) <= 500
        sm = felzenszwalb(raster, k=500.0, min_size=1)
        assert sm.segment_count == 1

    def test_two_region_synthetic_exact(self):
        raster = np.zeros((10, 12, 3))
        raster[:, 6:] = 200.0
        sm = felzenszwalb(raster, k=10.0, min_size=1)
        assert sm.segment_count == 2
        expected = np.zeros((10, 12), dtype=np.int32)
        expected[:, 6:] = 1
        assert np.array_equal(sm.labels, expected)

    def test_partition_invariant(self):
        rng = np.random.default_rng(11)
        raster = random_raster(rng)
        sm = felzenszwalb(raster, k=100.0, min_size=1)
        hist = np.bincount(sm.labels.ravel(), minlength=sm.segment_count)
        assert hist.sum() == raster.shape[0] * raster.shape[1]
        assert np.all(hist > 0)
        assert np.array_equal(hist, sm.segment_sizes)
        # labels contiguous 0..F-1 in raster scan order of first occurrence
        first_seen = []
        for lab in sm.labels.ravel():
            if lab not in first_seen:
                first_seen.append(lab)
        assert first_seen == list(range(sm.segment_count))

    def test_determinism(self):
        rng = np.random.default_rng(5)
        raster = random_raster(rng)
        a = felzenszwalb(raster, k=80.0, min_size=3)
        b = felzenszwalb(raster.copy(), k=80.0, min_size=3)
        assert np.array_equal(a.labels, b.labels)

    def test_monotonicity_in_k(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            raster = random_raster(rng, 12, 12)
            counts = [
                felzenszwalb(raster, k=k, min_size=1).segment_count
                for k in (10.0, 50.0, 150.0, 400.0, 1000.0)
            ]
            assert all(b <= a for a, b in zip(counts, counts[1:])), counts

    def test_min_size_enforced(self):
        rng = np.random.default_rng(2)
        raster = random_raster(rng, 20, 20)
        sm = felzenszwalb(raster, k=30.0, min_size=8)
        assert np.all(sm.segment_sizes >= 8)

    def test_empty_raster_rejected(self):
        with pytest.raises(ValueError):
            felzenszwalb(np.empty((0, 0, 3)), k=1.0, min_size=1)

    def test_bad_params(self):
        raster = np.zeros((2, 2, 3))
        with pytest.raises(ValueError):
            felzenszwalb(raster, k=0.0, min_size=1)
        with pytest.raises(ValueError):
            felzenszwalb(raster, k=1.0, min_size=0)


class TestSegmentFeatures:
    def test_constant_single_segment(self):
        px = np.empty((3, 3, 3), dtype=np.uint8)
        px[..., 0], px[..., 1], px[..., 2] = 10, 20, 30
        frame = Frame(pixels=px)
        sm = felzenszwalb(px.astype(float), k=10.0, min_size=1)
        feats = segment_features(frame, sm)
        v = feats.vectors[0]
        assert v[:3].tolist() == [10.0, 20.0, 30.0]
        assert v[3:6].tolist() == [0.0, 0.0, 0.0]
        assert v[7] == 1.0

    def test_two_point_population_std(self):
        px = np.zeros((1, 2, 3), dtype=np.uint8)
        px[0, 1, 0] = 255
        frame = Frame(pixels=px)
        labels = np.zeros((1, 2), dtype=np.int32)
        sm = segmenter.SegmentMap(labels=labels, segment_count=1,
                                  segment_sizes=np.array([2]))
        v = segment_features(frame, sm).vectors[0]
        assert v[0] == pytest.approx(127.5)
        assert v[3] == pytest.approx(127.5)

    def test_against_per_pixel_accumulation_oracle(self):
        rng = np.random.default_rng(9)
        px = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        labels = rng.integers(0, 3, (16, 16)).astype(np.int32)
        # ensure all three labels present
        labels[0, :3] = [0, 1, 2]
        sm = segmenter.SegmentMap(
            labels=labels, segment_count=3,
            segment_sizes=np.bincount(labels.ravel(), minlength=3),
        )
        feats = segment_features(Frame(pixels=px), sm)
        for lab in range(3):
            member = px[labels == lab].astype(float)
            rows = np.nonzero(labels == lab)[0]
            assert feats.vectors[lab, :3] == pytest.approx(member.mean(axis=0), rel=1e-9)
            assert feats.vectors[lab, 3:6] == pytest.approx(
                member.std(axis=0), rel=1e-9, abs=1e-12
            )
            assert feats.vectors[lab, 6] == pytest.approx(rows.mean() / 16, rel=1e-9)
            assert feats.vectors[lab, 7] == pytest.approx(member.shape[0] / 256, rel=1e-9)

    def test_dimension_mismatch(self):
        frame = Frame(pixels=np.zeros((2, 2, 3), dtype=np.uint8))
        sm = segmenter.SegmentMap(
            labels=np.zeros((3, 3), dtype=np.int32), segment_count=1,
            segment_sizes=np.array([9]),
        )
        with pytest.raises(ValueError):
            segment_features(frame, sm)


class TestLabelPgm:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        raster = random_raster(rng, 9, 7)
        sm = felzenszwalb(raster, k=60.0, min_size=1)
        p = tmp_path / "labels.pgm"
        segmenter.save_labels_pgm(sm, p)
        back = segmenter.load_labels_pgm(p)
        assert np.array_equal(back.labels, sm.labels)
        assert back.segment_count == sm.segment_count

    def test_too_many_segments_rejected(self, tmp_path):
        labels = np.arange(66000, dtype=np.int32).reshape(300, 220)
        sm = segmenter.SegmentMap(
            labels=labels, segment_count=66000,
            segment_sizes=np.ones(66000, dtype=np.int64),
        )
        with pytest.raises(ValueError):
            segmenter.save_labels_pgm(sm, tmp_path / "x.pgm")
