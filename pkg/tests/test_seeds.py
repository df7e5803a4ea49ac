import numpy as np
import pytest

from puddlemap import seeds as seeds_mod
from puddlemap.imagery import Roi
from puddlemap.seeds import (
    Label,
    SeedConflictError,
    SeedError,
    SeedPoint,
    SeedSet,
    load_seeds,
    make_grid,
    save_seeds,
    seeds_to_training,
)
from puddlemap.segmenter import SegmentFeatures, SegmentMap


def segmap_of(labels):
    labels = np.asarray(labels, dtype=np.int32)
    count = int(labels.max()) + 1
    return SegmentMap(
        labels=labels, segment_count=count,
        segment_sizes=np.bincount(labels.ravel(), minlength=count),
    )


def features_for(count):
    rng = np.random.default_rng(0)
    return SegmentFeatures(vectors=rng.uniform(0, 1, (count, 8)))


class TestMakeGrid:
    def test_single_center_point(self):
        grid = make_grid(Roi(0, 0, 100, 100), 1, 1)
        assert grid.l == 1
        assert (grid.points[0].row, grid.points[0].col) == (50, 50)

    def test_formula_positions(self):
        grid = make_grid(Roi(0, 0, 200, 100), 4, 2)
        cols = sorted({p.col for p in grid.points})
        rows = sorted({p.row for p in grid.points})
        assert cols == [25, 75, 125, 175]
        assert rows == [25, 75]
        assert grid.l == 8

    def test_paper_budget_108(self):
        grid = make_grid(Roi(0, 0, 320, 180), 12, 9)
        assert grid.l == 108
        assert grid.l0 == 108  # all UNLABELED before human input

    def test_too_dense_grid(self):
        with pytest.raises(SeedError, match="denser"):
            make_grid(Roi(0, 0, 3, 3), 10, 10)


class TestLoadSeeds:
    def test_paper_counts(self, tmp_path):
        lines = ["row,col,label"]
        lines += [f"{i},{0},dry" for i in range(16)]
        lines += [f"{i},{1},wet" for i in range(92)]
        p = tmp_path / "seeds.csv"
        p.write_text("\n".join(lines) + "\n")
        ss = load_seeds(p, Roi(0, 0, 10, 100))
        assert (ss.l1, ss.l2, ss.l0, ss.l) == (16, 92, 0, 108)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "seeds.csv"
        p.write_text("row,col,label\n")
        ss = load_seeds(p, Roi(0, 0, 4, 4))
        assert ss.l == 0

    def test_unknown_label(self, tmp_path):
        p = tmp_path / "seeds.csv"
        p.write_text("row,col,label\n1,1,damp\n")
        with pytest.raises(SeedError, match="unknown label"):
            load_seeds(p, Roi(0, 0, 4, 4))

    def test_out_of_roi(self, tmp_path):
        p = tmp_path / "seeds.csv"
        p.write_text("row,col,label\n9,1,dry\n")
        with pytest.raises(SeedError, match="outside roi"):
            load_seeds(p, Roi(0, 0, 4, 4))

    def test_duplicate_coordinate(self, tmp_path):
        p = tmp_path / "seeds.csv"
        p.write_text("row,col,label\n1,1,dry\n1,1,wet\n")
        with pytest.raises(SeedError, match="duplicate"):
            load_seeds(p, Roi(0, 0, 4, 4))

    def test_crlf_accepted_and_roundtrip_lf(self, tmp_path):
        p = tmp_path / "seeds.csv"
        p.write_bytes(b"row,col,label\r\n1,2,wet\r\n")
        ss = load_seeds(p, Roi(0, 0, 4, 4))
        assert ss.l2 == 1
        out = tmp_path / "out.csv"
        save_seeds(ss, out)
        assert out.read_bytes() == b"row,col,label\n1,2,wet\n"

    def test_case_insensitive_labels(self, tmp_path):
        p = tmp_path / "seeds.csv"
        p.write_text("row,col,label\n1,2,WET\n2,2,Dry\n")
        ss = load_seeds(p, Roi(0, 0, 4, 4))
        assert (ss.l1, ss.l2) == (1, 1)


class TestSeedsToTraining:
    def test_two_segments_two_examples(self):
        sm = segmap_of([[0, 1], [0, 1]])
        feats = features_for(2)
        ss = SeedSet(points=(
            SeedPoint(0, 0, Label.DRY),
            SeedPoint(0, 1, Label.WET),
        ))
        ts = seeds_to_training(ss, sm, feats)
        assert len(ts) == 2
        assert ts.labels == (Label.DRY, Label.WET)
        assert np.array_equal(ts.features, feats.vectors[[0, 1]])

    def test_same_segment_deduplicated(self):
        sm = segmap_of([[0, 0], [0, 0]])
        ss = SeedSet(points=(
            SeedPoint(0, 0, Label.WET),
            SeedPoint(1, 1, Label.WET),
        ))
        ts = seeds_to_training(ss, sm, features_for(1))
        assert len(ts) == 1

    def test_conflict_names_segment(self):
        sm = segmap_of([[0, 0], [1, 1]])
        ss = SeedSet(points=(
            SeedPoint(0, 0, Label.DRY),
            SeedPoint(0, 1, Label.WET),
        ))
        with pytest.raises(SeedConflictError) as exc:
            seeds_to_training(ss, sm, features_for(2))
        assert exc.value.segment_id == 0

    def test_unlabeled_ignored(self):
        sm = segmap_of([[0, 1]])
        ss = SeedSet(points=(
            SeedPoint(0, 0, Label.UNLABELED),
            SeedPoint(0, 1, Label.WET),
        ))
        ts = seeds_to_training(ss, sm, features_for(2))
        assert len(ts) == 1

    def test_size_bound(self):
        # |TrainingSet| <= l1 + l2, equality iff no sharing
        sm = segmap_of([[0, 1, 2, 2]])
        ss = SeedSet(points=(
            SeedPoint(0, 0, Label.DRY),
            SeedPoint(0, 1, Label.WET),
            SeedPoint(0, 2, Label.WET),
            SeedPoint(0, 3, Label.WET),
        ))
        ts = seeds_to_training(ss, sm, features_for(3))
        assert len(ts) == 3 < ss.l1 + ss.l2
