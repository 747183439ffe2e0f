"""Dataset module tests: IDX parsing, sharding, trigger, poisoning, and
evaluation-set construction."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gossipsim.data import (DEFAULT_TRIGGER, Dataset, IdxBadMagicError,
                            IdxCountMismatchError, IdxTruncatedError, Sample,
                            apply_trigger, build_eval_sets, load_dataset,
                            load_idx, poison_shard, read_idx_images,
                            read_idx_labels, shard_iid, write_idx_images,
                            write_idx_labels)

RNG = np.random.default_rng


def make_label_bytes(labels):
    return struct.pack(">II", 0x00000801, len(labels)) + bytes(labels)


def make_image_bytes(images_uint8):
    count = len(images_uint8)
    return (struct.pack(">IIII", 0x00000803, count, 28, 28)
            + np.asarray(images_uint8, dtype=np.uint8).tobytes())


def tiny_dataset(n, rng, origin="training"):
    return Dataset(rng.random((n, 784)), rng.integers(0, 10, n), origin)


# ------------------------------------------------------------------ IDX

def test_label_file_decodes_bytes_directly(tmp_path):
    path = tmp_path / "labels"
    path.write_bytes(make_label_bytes([7, 2, 1]))
    assert read_idx_labels(path).tolist() == [7, 2, 1]


def test_image_normalization_endpoints(tmp_path):
    img = np.zeros((1, 784), dtype=np.uint8)
    img[0, 0] = 255
    path = tmp_path / "images"
    path.write_bytes(make_image_bytes(img))
    pixels = read_idx_images(path)
    assert pixels[0, 0] == 1.0
    assert pixels[0, 1] == 0.0


def test_load_idx_dispatch(tmp_path):
    path = tmp_path / "labels"
    path.write_bytes(make_label_bytes([3]))
    assert load_idx(path, "labels").tolist() == [3]
    with pytest.raises(ValueError):
        load_idx(path, "pixels")


def test_bad_magic_reported_distinctly(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(struct.pack(">II", 0xDEADBEEF, 1) + b"\x05")
    with pytest.raises(IdxBadMagicError):
        read_idx_labels(path)
    path.write_bytes(struct.pack(">IIII", 0xDEADBEEF, 1, 28, 28)
                     + bytes(784))
    with pytest.raises(IdxBadMagicError):
        read_idx_images(path)


def test_truncated_payload_reported_distinctly(tmp_path):
    path = tmp_path / "short"
    path.write_bytes(struct.pack(">II", 0x00000801, 10) + b"\x01\x02")
    with pytest.raises(IdxTruncatedError):
        read_idx_labels(path)


def test_count_mismatch_reported_distinctly(tmp_path):
    (tmp_path / "imgs").write_bytes(
        make_image_bytes(np.zeros((2, 784), dtype=np.uint8)))
    (tmp_path / "lbls").write_bytes(make_label_bytes([1, 2, 3]))
    with pytest.raises(IdxCountMismatchError):
        load_dataset(tmp_path / "imgs", tmp_path / "lbls", "training")


def test_idx_round_trip_is_lossless(tmp_path):
    rng = RNG(0)
    raw = rng.integers(0, 256, size=(17, 784)).astype(np.uint8)
    original = make_image_bytes(raw)
    (tmp_path / "a").write_bytes(original)
    pixels = read_idx_images(tmp_path / "a")
    write_idx_images(tmp_path / "b", pixels)
    assert (tmp_path / "b").read_bytes() == original

    labels = rng.integers(0, 10, size=29)
    original = make_label_bytes(labels.tolist())
    (tmp_path / "c").write_bytes(original)
    write_idx_labels(tmp_path / "d", read_idx_labels(tmp_path / "c"))
    assert (tmp_path / "d").read_bytes() == original


def test_gzip_transparent_read(tmp_path):
    import gzip
    path = tmp_path / "labels.gz"
    with gzip.open(path, "wb") as f:
        f.write(make_label_bytes([9, 0, 4]))
    assert read_idx_labels(path).tolist() == [9, 0, 4]


def test_corpus_has_canonical_cardinalities(training, test_set):
    assert len(training) == 60000
    assert len(test_set) == 10000
    assert training.pixels.shape == (60000, 784)
    assert float(training.pixels.min()) >= 0.0
    assert float(training.pixels.max()) <= 1.0


# ------------------------------------------------------------- sharding

def test_shard_iid_150_nodes_uses_37500_distinct_indices(training):
    assignment = shard_iid(training, n=150, shard_size=250, rng=RNG(5))
    all_indices = np.concatenate(assignment.shards)
    assert len(all_indices) == 37500
    assert len(np.unique(all_indices)) == 37500
    assert all(len(s) == 250 for s in assignment.shards)


def test_shard_identity_when_everything_assigned():
    rng = RNG(1)
    small = tiny_dataset(40, rng)
    assignment = shard_iid(small, n=1, shard_size=40, rng=rng)
    assert sorted(assignment.shards[0].tolist()) == list(range(40))


def test_shard_overflow_rejected():
    small = tiny_dataset(10, RNG(2))
    with pytest.raises(ValueError):
        shard_iid(small, n=3, shard_size=4, rng=RNG(0))


def test_shard_class_balance(training):
    assignment = shard_iid(training, n=100, shard_size=250, rng=RNG(7))
    counts = np.stack([
        np.bincount(training.labels[s], minlength=10)
        for s in assignment.shards])
    assert abs(counts.mean() - 25.0) < 1.0
    assert counts.min() >= 10
    assert counts.max() <= 40


def test_shard_determinism(training):
    a = shard_iid(training, 20, 100, RNG(3))
    b = shard_iid(training, 20, 100, RNG(3))
    for sa, sb in zip(a.shards, b.shards):
        assert np.array_equal(sa, sb)


# -------------------------------------------------------------- trigger

def test_trigger_sets_exactly_nine_pixels():
    s = Sample(np.zeros(784), 3)
    out = apply_trigger(s)
    assert int((out.pixels == 1.0).sum()) == 9
    assert out.label == 3
    assert (s.pixels == 0).all()  # input untouched


def test_trigger_is_idempotent():
    s = Sample(RNG(0).random(784), 5)
    once = apply_trigger(s)
    twice = apply_trigger(once)
    assert np.array_equal(once.pixels, twice.pixels)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trigger_bounded_overwrite(seed):
    s = Sample(RNG(seed).random(784), 1)
    out = apply_trigger(s)
    delta = out.pixels.sum() - s.pixels.sum()
    assert 0.0 <= delta <= 9.0


def test_default_trigger_in_active_area():
    expected = {r * 28 + c for r in (19, 20, 21) for c in (19, 20, 21)}
    assert set(DEFAULT_TRIGGER.flat_indices) == expected
    assert DEFAULT_TRIGGER.value == 1.0


# ------------------------------------------------------------ poisoning

def test_poison_shard_counts_and_payload():
    shard = tiny_dataset(250, RNG(4), origin="local-shard")
    shard.pixels[:, list(DEFAULT_TRIGGER.flat_indices)] = 0.0
    shard.labels[:] = np.arange(250) % 9 + 1  # no natural zeros
    out = poison_shard(shard, fraction=0.2, target_label=0, rng=RNG(8))
    poisoned = out.labels == 0
    assert int(poisoned.sum()) == 50
    trigger_cols = list(DEFAULT_TRIGGER.flat_indices)
    assert (out.pixels[poisoned][:, trigger_cols] == 1.0).all()
    # untouched rows are bit-identical and order is preserved
    assert np.array_equal(out.pixels[~poisoned], shard.pixels[~poisoned])
    assert np.array_equal(out.labels[~poisoned], shard.labels[~poisoned])


def test_poison_fraction_zero_is_noop():
    shard = tiny_dataset(100, RNG(9))
    out = poison_shard(shard, fraction=0.0, rng=RNG(1))
    assert np.array_equal(out.pixels, shard.pixels)
    assert np.array_equal(out.labels, shard.labels)


def test_poison_fraction_one_hits_everything():
    shard = tiny_dataset(60, RNG(10))
    out = poison_shard(shard, fraction=1.0, target_label=0, rng=RNG(2))
    assert (out.labels == 0).all()
    cols = list(DEFAULT_TRIGGER.flat_indices)
    assert (out.pixels[:, cols] == 1.0).all()


def test_poison_count_uses_rounding():
    shard = tiny_dataset(11, RNG(11))
    shard.labels[:] = 4  # no natural zeros
    out = poison_shard(shard, fraction=0.5, target_label=0, rng=RNG(3))
    assert int((out.labels == 0).sum()) == round(0.5 * 11)


# ------------------------------------------------------------ eval sets

def test_eval_sets_sizes_and_construction(test_set):
    rng = RNG(31337)
    clean, backdoor = build_eval_sets(test_set, rng)
    assert len(clean) == 1000
    assert clean.origin == "eval-clean"
    assert backdoor.origin == "eval-backdoor"

    # independent size oracle: replicate the documented draw and count the
    # target-label samples removed from the second half
    oracle = np.random.default_rng(31337)
    draw = oracle.choice(len(test_set), size=2000, replace=False)
    zeros = int((test_set.labels[draw[1000:]] == 0).sum())
    assert len(backdoor) == 1000 - zeros
    # ~10% of labels are 0, so the removed count is near 100
    assert 820 <= len(backdoor) <= 960

    assert (backdoor.labels == 0).all()
    cols = list(DEFAULT_TRIGGER.flat_indices)
    assert (backdoor.pixels[:, cols] == 1.0).all()
    # clean half is untouched test data
    assert np.array_equal(clean.pixels, test_set.pixels[draw[:1000]])
    assert np.array_equal(clean.labels, test_set.labels[draw[:1000]])


def test_eval_sets_deterministic(test_set):
    a_clean, a_back = build_eval_sets(test_set, RNG(77))
    b_clean, b_back = build_eval_sets(test_set, RNG(77))
    assert np.array_equal(a_clean.pixels, b_clean.pixels)
    assert np.array_equal(a_back.pixels, b_back.pixels)
    assert np.array_equal(a_back.labels, b_back.labels)


def test_eval_sets_require_2000_samples():
    small = tiny_dataset(1500, RNG(12), origin="test")
    with pytest.raises(ValueError):
        build_eval_sets(small, RNG(0))
