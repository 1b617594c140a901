# tests/test_dataset.py
"""
Pruebas del generador sintético, el particionado en lotes y el lector IDX
"""
import struct

import numpy as np
import pytest

from core.data.dataset import Dataset, batches, class_templates, gen_synthetic
from core.data.idx_loader import IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC, load_idx
from core.errors import ArtifactIOError, ConfigError, DataFormatError


def _write_idx(path, magic, dims, payload: bytes):
    path.write_bytes(struct.pack('>I', magic) + struct.pack(f'>{len(dims)}I', *dims) + payload)
    return path


def test_generation_is_reproducible_and_balanced():
    first = gen_synthetic(4, per_class=10, side=8, seed=3)
    second = gen_synthetic(4, per_class=10, side=8, seed=3)

    assert first.images.tobytes() == second.images.tobytes()
    np.testing.assert_array_equal(first.labels, second.labels)
    assert first.class_counts() == [10, 10, 10, 10]
    assert first.images.min() >= 0.0 and first.images.max() <= 1.0
    assert first.input_shape == (1, 8, 8)


def test_splits_share_templates_but_not_noise():
    train_ds = gen_synthetic(3, per_class=5, side=8, seed=1, split='train')
    test_ds = gen_synthetic(3, per_class=5, side=8, seed=1, split='test')
    assert not np.array_equal(train_ds.images, test_ds.images)
    assert train_ds.source == test_ds.source


def test_templates_differ_per_class():
    templates = class_templates(6, side=16, seed=0, channels=2)
    assert templates.shape == (6, 2, 16, 16)
    flat = templates.reshape(6, -1)
    for a in range(6):
        for b in range(a + 1, 6):
            assert not np.allclose(flat[a], flat[b])


def test_class_signal_is_learnable_from_means():
    """El centroide de cada clase se parece a su propia plantilla"""
    ds = gen_synthetic(3, per_class=40, side=8, seed=2, pixel_noise=0.1, class_contrast=0.2)
    templates = class_templates(3, side=8, seed=2, class_contrast=0.2).reshape(3, -1)
    for label in range(3):
        centroid = ds.images[ds.labels == label].reshape(-1, 64).mean(axis=0)
        distances = np.linalg.norm(templates - centroid, axis=1)
        assert distances.argmin() == label


def test_invalid_generator_arguments():
    with pytest.raises(ConfigError):
        gen_synthetic(1, per_class=5, side=8, seed=0)
    with pytest.raises(ConfigError):
        gen_synthetic(3, per_class=5, side=2, seed=0)
    with pytest.raises(ConfigError):
        gen_synthetic(3, per_class=5, side=8, seed=0, split='validation')


def test_dataset_validates_contents():
    with pytest.raises(DataFormatError):
        Dataset(np.full((2, 1, 4, 4), 1.5), [0, 1], 2)
    with pytest.raises(DataFormatError):
        Dataset(np.zeros((2, 1, 4, 4)), [0, 2], 2)
    with pytest.raises(DataFormatError):
        Dataset(np.zeros((2, 1, 4, 4)), [0], 2)

    ds = Dataset(np.zeros((2, 1, 4, 4)), [0, 1], 2)
    with pytest.raises(ValueError):
        ds.images[0, 0, 0, 0] = 1.0


def test_batches_cover_every_sample_once():
    ds = gen_synthetic(3, per_class=7, side=4, seed=0)
    parts = batches(ds, 4, shuffle_seed=10)
    assert [len(y) for _, y in parts] == [4, 4, 4, 4, 4, 1]

    seen = [row.tobytes() for x, _ in parts for row in x]
    assert len(seen) == len(ds)
    assert set(seen) == {row.tobytes() for row in ds.images}


def test_shuffle_is_deterministic_per_seed():
    ds = gen_synthetic(2, per_class=10, side=4, seed=0)
    first = batches(ds, 5, shuffle_seed=1)
    again = batches(ds, 5, shuffle_seed=1)
    other = batches(ds, 5, shuffle_seed=2)

    np.testing.assert_array_equal(first[0][1], again[0][1])
    assert any(not np.array_equal(a[0], b[0]) for a, b in zip(first, other))
    np.testing.assert_array_equal(batches(ds, 20)[0][1], ds.labels)

    with pytest.raises(ConfigError):
        batches(ds, 0)


def test_idx_loader_reads_handmade_files(tmp_path):
    pixels = bytes([0, 255, 128, 64] * 3)
    images = _write_idx(tmp_path / "images.idx", IDX_IMAGES_MAGIC, (3, 2, 2), pixels)
    labels = _write_idx(tmp_path / "labels.idx", IDX_LABELS_MAGIC, (3,), bytes([2, 0, 1]))

    ds = load_idx(images, labels, split='test')
    assert ds.images.shape == (3, 1, 2, 2)
    assert ds.class_count == 3
    assert ds.split == 'test'
    np.testing.assert_allclose(ds.images[0, 0].reshape(-1), [0.0, 1.0, 128 / 255, 64 / 255])
    np.testing.assert_array_equal(ds.labels, [2, 0, 1])


def test_idx_loader_rejects_malformed_files(tmp_path):
    labels = _write_idx(tmp_path / "labels.idx", IDX_LABELS_MAGIC, (2,), bytes([0, 1]))

    truncated = _write_idx(tmp_path / "truncated.idx", IDX_IMAGES_MAGIC, (2, 2, 2), bytes(7))
    with pytest.raises(DataFormatError):
        load_idx(truncated, labels)

    trailing = _write_idx(tmp_path / "trailing.idx", IDX_IMAGES_MAGIC, (2, 2, 2), bytes(9))
    with pytest.raises(DataFormatError):
        load_idx(trailing, labels)

    swapped = _write_idx(tmp_path / "swapped.idx", IDX_LABELS_MAGIC, (2,), bytes(2))
    with pytest.raises(DataFormatError):
        load_idx(swapped, labels)

    three = _write_idx(tmp_path / "three.idx", IDX_IMAGES_MAGIC, (3, 2, 2), bytes(12))
    with pytest.raises(DataFormatError):
        load_idx(three, labels)

    with pytest.raises(ArtifactIOError):
        load_idx(tmp_path / "missing.idx", labels)
