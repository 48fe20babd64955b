"""IDX container parsing, imbalanced subset construction, and batching."""

import struct

import numpy as np
import pytest

from imbn.dataset import (
    EXPERIMENTS,
    BadLabelError,
    BadMagicError,
    ExperimentSpec,
    RawMnist,
    TruncatedError,
    BatchTooSmallError,
    InsufficientDataError,
    build_experiment,
    encode_one_hot,
    parse_idx_images,
    parse_idx_labels,
    partition_batches,
    write_idx_images,
    write_idx_labels,
)


def image_bytes(n, rows, cols, pixels, magic=0x00000803):
    return struct.pack(">IIII", magic, n, rows, cols) + bytes(pixels)


def label_bytes(n, labels, magic=0x00000801):
    return struct.pack(">II", magic, n) + bytes(labels)


class TestIdxParsing:
    def test_single_image_fixture(self):
        # hand-assembled: one 2x2 image, pixels in row-major order
        data = image_bytes(1, 2, 2, [0, 128, 255, 7])
        images = parse_idx_images(data)
        assert images.shape == (1, 2, 2)
        assert images.dtype == np.uint8
        np.testing.assert_array_equal(images[0], [[0, 128], [255, 7]])

    def test_empty_image_file(self):
        images = parse_idx_images(image_bytes(0, 28, 28, []))
        assert images.shape == (0, 28, 28)

    def test_image_bad_magic(self):
        with pytest.raises(BadMagicError):
            parse_idx_images(image_bytes(1, 2, 2, [0] * 4, magic=0x00000801))

    def test_image_truncated(self):
        with pytest.raises(TruncatedError):
            parse_idx_images(image_bytes(2, 2, 2, [0] * 4))

    def test_image_truncated_header(self):
        with pytest.raises(TruncatedError):
            parse_idx_images(struct.pack(">II", 0x00000803, 1))

    def test_label_fixture(self):
        labels = parse_idx_labels(label_bytes(3, [0, 1, 8]))
        np.testing.assert_array_equal(labels, [0, 1, 8])

    def test_empty_label_file(self):
        assert parse_idx_labels(label_bytes(0, [])).shape == (0,)

    def test_label_bad_magic(self):
        with pytest.raises(BadMagicError):
            parse_idx_labels(label_bytes(1, [3], magic=0x00000803))

    def test_label_truncated(self):
        with pytest.raises(TruncatedError):
            parse_idx_labels(label_bytes(2, [1]))

    def test_label_out_of_range(self):
        with pytest.raises(BadLabelError):
            parse_idx_labels(label_bytes(2, [3, 10]))

    def test_round_trip_exact_bytes(self):
        img = image_bytes(2, 3, 4, list(range(24)))
        lab = label_bytes(4, [9, 0, 4, 4])
        assert write_idx_images(parse_idx_images(img)) == img
        assert write_idx_labels(parse_idx_labels(lab)) == lab

    def test_round_trip_random_fixture(self):
        rng = np.random.default_rng(7)
        img = image_bytes(5, 28, 28, rng.integers(0, 256, 5 * 784).tolist())
        assert write_idx_images(parse_idx_images(img)) == img


class TestOneHot:
    @pytest.mark.parametrize(
        "index,k,expected",
        [
            (0, 2, [1, 0]),
            (1, 2, [0, 1]),
            (3, 10, [0, 0, 0, 1, 0, 0, 0, 0, 0, 0]),
        ],
    )
    def test_definition(self, index, k, expected):
        np.testing.assert_array_equal(encode_one_hot(index, k), expected)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            encode_one_hot(2, 2)
        with pytest.raises(IndexError):
            encode_one_hot(-1, 2)


def fake_raw(counts, seed=0):
    """RawMnist with the requested number of samples per digit.

    Pixel values encode the digit so subset membership is checkable.
    """
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.full(c, d, dtype=np.uint8) for d, c in counts.items()])
    order = rng.permutation(labels.size)
    labels = labels[order]
    images = np.zeros((labels.size, 28, 28), dtype=np.uint8)
    images[:, 0, 0] = labels * 20 + 5
    return RawMnist(images=images, labels=labels)


class TestBuildExperiment:
    def test_table1_experiment_i_sizes(self):
        train_raw = fake_raw({0: 5923, 1: 6742})
        test_raw = fake_raw({0: 980, 1: 1135})
        spec = ExperimentSpec(
            majority_digit=0,
            minority_digit=1,
            train_majority=5923,
            train_minority=45,
            test_majority=980,
            test_minority=1135,
            seed=11,
        )
        train, test = build_experiment(train_raw, test_raw, spec)
        assert train.n == 5968
        assert test.n == 2115
        assert np.sum(train.labels == 0) == 5923
        assert np.sum(train.labels == 1) == 45
        assert np.sum(test.labels == 0) == 980
        assert np.sum(test.labels == 1) == 1135

    def test_table1_experiment_iii_minority_fraction(self):
        train_raw = fake_raw({7: 6265, 4: 5842})
        test_raw = fake_raw({7: 1028, 4: 982})
        spec = EXPERIMENTS["iii"].with_seed(3)
        train, _ = build_experiment(train_raw, test_raw, spec)
        assert train.n == 6304
        assert np.sum(train.labels == 1) == 39
        assert 39 / 6304 < 0.01

    def test_class_index_order_and_scaling(self):
        train_raw = fake_raw({3: 10, 5: 10})
        test_raw = fake_raw({3: 5, 5: 5})
        spec = ExperimentSpec(5, 3, 4, 2, 3, 2, seed=1)
        train, test = build_experiment(train_raw, test_raw, spec)
        # class 0 is the majority digit
        assert train.class_names == [5, 3]
        assert test.class_names == [5, 3]
        # pixel scaling by 1/255; marker pixel identifies the source digit
        maj_rows = train.inputs[train.labels == 0]
        np.testing.assert_allclose(maj_rows[:, 0], (5 * 20 + 5) / 255.0)
        min_rows = train.inputs[train.labels == 1]
        np.testing.assert_allclose(min_rows[:, 0], (3 * 20 + 5) / 255.0)
        assert train.inputs.dtype == np.float64

    def test_one_hot_targets_consistent(self):
        train_raw = fake_raw({0: 8, 9: 8})
        test_raw = fake_raw({0: 4, 9: 4})
        train, test = build_experiment(
            train_raw, test_raw, ExperimentSpec(0, 9, 6, 3, 2, 2, seed=5)
        )
        for ds in (train, test):
            assert ds.targets.shape == (ds.n, 2)
            np.testing.assert_array_equal(ds.targets.sum(axis=1), np.ones(ds.n))
            np.testing.assert_array_equal(np.argmax(ds.targets, axis=1), ds.labels)

    def test_degenerate_single_sample(self):
        raw = fake_raw({2: 3, 6: 3})
        train, _ = build_experiment(raw, raw, ExperimentSpec(2, 6, 1, 0, 1, 1, seed=0))
        assert train.n == 1
        np.testing.assert_array_equal(train.targets, [[1.0, 0.0]])

    def test_same_seed_identical_subsets(self):
        train_raw = fake_raw({1: 50, 8: 50})
        test_raw = fake_raw({1: 20, 8: 20})
        spec = ExperimentSpec(8, 1, 30, 5, 10, 10, seed=99)
        a_train, a_test = build_experiment(train_raw, test_raw, spec)
        b_train, b_test = build_experiment(train_raw, test_raw, spec)
        np.testing.assert_array_equal(a_train.inputs, b_train.inputs)
        np.testing.assert_array_equal(a_test.inputs, b_test.inputs)
        np.testing.assert_array_equal(a_train.labels, b_train.labels)

    def test_insufficient_data(self):
        raw = fake_raw({0: 5, 1: 5})
        with pytest.raises(InsufficientDataError):
            build_experiment(raw, raw, ExperimentSpec(0, 1, 6, 1, 1, 1, seed=0))

    def test_table1_registry(self):
        spec = EXPERIMENTS["i"]
        assert (spec.majority_digit, spec.minority_digit) == (0, 1)
        assert (spec.train_majority, spec.train_minority) == (5923, 45)
        assert (spec.test_majority, spec.test_minority) == (980, 1135)
        spec = EXPERIMENTS["ii"]
        assert (spec.majority_digit, spec.minority_digit) == (8, 1)
        assert (spec.train_majority, spec.train_minority) == (5851, 45)
        assert (spec.test_majority, spec.test_minority) == (974, 1135)
        spec = EXPERIMENTS["iii"]
        assert (spec.majority_digit, spec.minority_digit) == (7, 4)
        assert (spec.train_majority, spec.train_minority) == (6265, 39)
        assert (spec.test_majority, spec.test_minority) == (1028, 982)


class TestPartitionBatches:
    def test_paper_scale_counts(self):
        part = partition_batches(5968, 100, np.random.default_rng(0))
        sizes = [len(b) for b in part.batches]
        assert part.r == 60
        assert sizes == [100] * 59 + [68]

    def test_single_batch(self):
        part = partition_batches(4, 4, np.random.default_rng(1))
        assert part.r == 1
        np.testing.assert_array_equal(np.sort(part.batches[0]), np.arange(4))

    def test_trailing_singleton_merged(self):
        part = partition_batches(5, 4, np.random.default_rng(2))
        assert part.r == 1
        assert len(part.batches[0]) == 5

    def test_partition_is_permutation(self):
        for n, bs in [(17, 5), (100, 100), (101, 10), (2, 2)]:
            part = partition_batches(n, bs, np.random.default_rng(n + bs))
            flat = np.concatenate(part.batches)
            np.testing.assert_array_equal(np.sort(flat), np.arange(n))
            assert all(len(b) >= 2 for b in part.batches)

    def test_batch_size_too_small(self):
        with pytest.raises(BatchTooSmallError):
            partition_batches(10, 1, np.random.default_rng(0))

    def test_single_sample_unpartitionable(self):
        with pytest.raises(BatchTooSmallError):
            partition_batches(1, 4, np.random.default_rng(0))

    def test_determinism(self):
        a = partition_batches(37, 8, np.random.default_rng(123))
        b = partition_batches(37, 8, np.random.default_rng(123))
        for x, y in zip(a.batches, b.batches):
            np.testing.assert_array_equal(x, y)
