import numpy as np
import pytest

from cleanvae.data import (
    TRAIN,
    ConfigError,
    InsufficientClassMembers,
    TrustedSet,
    build_error_classes,
    corrupt,
    generate_shapes,
    sample_trusted_set,
)


def connected_components(img: np.ndarray) -> int:
    """4-connected component count by flood fill; independent of any generator logic."""
    h, w = img.shape
    seen = np.zeros_like(img, dtype=bool)
    count = 0
    for sy in range(h):
        for sx in range(w):
            if img[sy, sx] and not seen[sy, sx]:
                count += 1
                stack = [(sy, sx)]
                seen[sy, sx] = True
                while stack:
                    y, x = stack.pop()
                    for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                        if 0 <= ny < h and 0 <= nx < w and img[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            stack.append((ny, nx))
    return count


class TestGenerateShapes:
    def test_small_batch_filled_connected(self):
        ds = generate_shapes(4, seed=11)
        assert ds.images.shape == (4, 784)
        for row in ds.images:
            img = row.reshape(28, 28)
            assert img.sum() >= 20
            assert connected_components(img > 0) == 1

    def test_binary_pixels_only(self):
        ds = generate_shapes(50, seed=3)
        assert set(np.unique(ds.images)) <= {0.0, 1.0}

    def test_same_seed_identical(self):
        a = generate_shapes(30, seed=8)
        b = generate_shapes(30, seed=8)
        np.testing.assert_array_equal(a.images, b.images)
        np.testing.assert_array_equal(a.split, b.split)

    def test_class_balance_and_split_sizes(self):
        ds = generate_shapes(5000, seed=1)
        counts = np.bincount(ds.class_id)
        assert np.all(np.abs(counts - 1250) <= 2)
        split_counts = np.bincount(ds.split)
        np.testing.assert_array_equal(split_counts, [4000, 500, 500])

    def test_shapes_fully_inside_frame(self):
        ds = generate_shapes(100, seed=5)
        for row in ds.images:
            img = row.reshape(28, 28)
            assert img[0, :].sum() == 0 and img[-1, :].sum() == 0
            assert img[:, 0].sum() == 0 and img[:, -1].sum() == 0


class TestBuildErrorClasses:
    def test_shapes_kind_four_white_lines(self):
        classes = build_error_classes("shapes", seed=2)
        assert len(classes) == 4
        assert all(c.kind == "line" and c.color == 1.0 for c in classes)
        for c in classes:
            assert c.footprint(28, 28).sum() == 28

    def test_frey_kind_four_squares_in_bounds(self):
        classes = build_error_classes("frey", seed=2, height=28, width=20)
        assert len(classes) == 4
        for c in classes:
            fp = c.footprint(28, 20)
            assert fp.sum() == 36
            assert c.color in (0.0, 1.0)

    def test_fashion_kind_lines_plus_squares(self):
        classes = build_error_classes("fashion", seed=9)
        kinds = [c.kind for c in classes]
        assert kinds.count("line") == 4 and kinds.count("square") == 4

    def test_same_seed_identical_geometry(self):
        assert build_error_classes("shapes", seed=4) == build_error_classes("shapes", seed=4)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            build_error_classes("cifar", seed=1)


class TestCorrupt:
    def setup_method(self):
        self.clean = generate_shapes(400, seed=21)
        self.classes = build_error_classes("shapes", seed=21)

    def test_outlier_count(self):
        ds = corrupt(self.clean, 0.35, self.classes, seed=21)
        assert (ds.y_true == 0).sum() == int(0.35 * 400)

    def test_five_thousand_at_35_percent(self):
        clean = generate_shapes(5000, seed=1)
        ds = corrupt(clean, 0.35, self.classes, seed=1)
        assert (ds.y_true == 0).sum() == 1750

    def test_zero_noise_is_identity(self):
        ds = corrupt(self.clean, 0.0, self.classes, seed=21)
        assert (ds.y_true == 1).all()
        np.testing.assert_array_equal(ds.images, ds.clean_truth)
        assert not ds.dirty_mask.any()

    def test_masked_overwrite_exact(self):
        ds = corrupt(self.clean, 0.25, self.classes, seed=21)
        outside = ~ds.dirty_mask
        np.testing.assert_array_equal(ds.images[outside], ds.clean_truth[outside])
        out = ds.y_true == 0
        assert ds.dirty_mask[out].any(axis=1).all()

    def test_footprints_systematic_across_instances(self):
        ds = corrupt(self.clean, 0.45, self.classes, seed=21)
        for k, cls in enumerate(ds.error_classes):
            rows = np.flatnonzero(ds.error_class_id == k)
            fp = cls.footprint(28, 28)
            for idx in rows:
                np.testing.assert_array_equal(ds.dirty_mask[idx], fp)
                assert (ds.images[idx, fp] == cls.color).all()

    def test_classes_balanced_over_outliers(self):
        ds = corrupt(self.clean, 0.4, self.classes, seed=21)
        counts = np.bincount(ds.error_class_id[ds.error_class_id >= 0], minlength=4)
        assert counts.max() - counts.min() <= 1

    def test_invalid_noise_level(self):
        with pytest.raises(ConfigError):
            corrupt(self.clean, 1.5, self.classes, seed=0)

    def test_deterministic(self):
        a = corrupt(self.clean, 0.35, self.classes, seed=4)
        b = corrupt(self.clean, 0.35, self.classes, seed=4)
        np.testing.assert_array_equal(a.images, b.images)
        np.testing.assert_array_equal(a.error_class_id, b.error_class_id)


class TestTrustedSet:
    def setup_method(self):
        clean = generate_shapes(1200, seed=31)
        classes = build_error_classes("shapes", seed=31)
        self.ds = corrupt(clean, 0.35, classes, seed=31)

    def test_expected_size_eight_classes(self):
        ts = sample_trusted_set(self.ds, per_class=10, seed=1)
        assert len(ts) == 80
        assert (ts.labels == 1).sum() == 40 and (ts.labels == 0).sum() == 40

    def test_labels_consistent_with_ground_truth(self):
        ts = sample_trusted_set(self.ds, per_class=10, seed=1)
        np.testing.assert_array_equal(ts.labels, self.ds.y_true[ts.indices])
        assert (self.ds.split[ts.indices] == TRAIN).all()

    def test_per_class_zero_empty(self):
        ts = sample_trusted_set(self.ds, per_class=0, seed=1)
        assert len(ts) == 0

    def test_nested_across_sizes(self):
        small = sample_trusted_set(self.ds, per_class=5, seed=7)
        big = sample_trusted_set(self.ds, per_class=10, seed=7)
        assert set(small.indices) <= set(big.indices)

    def test_exhausted_class_names_culprit(self):
        # big enough to drain the ~84-per-error-class pool but not the data classes
        with pytest.raises(InsufficientClassMembers, match="error-"):
            sample_trusted_set(self.ds, per_class=100, seed=1)
        with pytest.raises(InsufficientClassMembers, match="data-"):
            sample_trusted_set(self.ds, per_class=10_000, seed=1)

    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            TrustedSet(np.array([3, 3]), np.array([1, 0]))


class TestSeededInvariantSweep:
    def test_masked_overwrite_and_label_consistency_over_seeds(self):
        # the two corruption invariants, across many seeded generations
        for seed in range(50):
            clean = generate_shapes(400, seed=seed)
            classes = build_error_classes("shapes", seed=seed)
            noise = [0.15, 0.25, 0.35, 0.45][seed % 4]
            ds = corrupt(clean, noise, classes, seed=seed)
            outside = ~ds.dirty_mask
            np.testing.assert_array_equal(ds.images[outside], ds.clean_truth[outside])
            ts = sample_trusted_set(ds, per_class=2, seed=seed)
            np.testing.assert_array_equal(ts.labels, ds.y_true[ts.indices])
