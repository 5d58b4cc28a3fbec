"""Dataset generation determinism, splits, and text round-trips."""
import math

import numpy as np
import pytest

from projpose import (
    DatasetParseError,
    InvalidArgumentError,
    generate_dataset,
    load_dataset,
    render_volume,
    save_dataset,
)
from projpose.dataset import TRAIN, VALIDATION, dataset_paths
from projpose.volumes import equilateral_triangle


@pytest.fixture(scope="module")
def small():
    return generate_dataset(equilateral_triangle(), 25, width=16, seed=3)


def test_sizes_and_split_tags(small):
    assert len(small) == 25
    # ceil(25 * 0.1) = 3 validation samples, taken from the tail
    assert list(small.splits).count(VALIDATION) == 3
    assert small.splits[:22] == (TRAIN,) * 22
    assert len(small.train_indices) == 22
    np.testing.assert_array_equal(small.val_indices, [22, 23, 24])


def test_poses_uniform_range(small):
    assert np.all(small.thetas >= 0.0)
    assert np.all(small.thetas < 2.0 * math.pi)


def test_images_match_renderer(small):
    v = small.volume
    for k in (0, 7, 24):
        direct = render_volume(v, small.thetas[k], 16, small.splat_sigma)
        np.testing.assert_array_equal(small.samples[k].image.pixels, direct.pixels)


def test_same_seed_same_data():
    a = generate_dataset(equilateral_triangle(), 10, width=8, seed=5)
    b = generate_dataset(equilateral_triangle(), 10, width=8, seed=5)
    np.testing.assert_array_equal(a.thetas, b.thetas)
    np.testing.assert_array_equal(a.images, b.images)


def test_different_seed_different_poses():
    a = generate_dataset(equilateral_triangle(), 10, width=8, seed=5)
    b = generate_dataset(equilateral_triangle(), 10, width=8, seed=6)
    assert not np.array_equal(a.thetas, b.thetas)


def test_noise_is_clamped_and_seeded():
    a = generate_dataset(equilateral_triangle(), 12, width=8, seed=2, noise_sigma=0.3)
    b = generate_dataset(equilateral_triangle(), 12, width=8, seed=2, noise_sigma=0.3)
    clean = generate_dataset(equilateral_triangle(), 12, width=8, seed=2)
    np.testing.assert_array_equal(a.images, b.images)
    assert np.all(a.images >= 0.0) and np.all(a.images <= 1.0)
    assert not np.array_equal(a.images, clean.images)
    # the pose stream must not be disturbed by drawing noise
    np.testing.assert_array_equal(a.thetas, clean.thetas)


def test_generate_validation():
    with pytest.raises(InvalidArgumentError):
        generate_dataset(equilateral_triangle(), 0)
    with pytest.raises(InvalidArgumentError):
        generate_dataset(equilateral_triangle(), 5, val_fraction=1.0)
    with pytest.raises(InvalidArgumentError):
        generate_dataset(equilateral_triangle(), 5, noise_sigma=-0.1)


def test_roundtrip(tmp_path, small):
    stem = tmp_path / "views"
    csv_path, meta_path = save_dataset(small, stem)
    assert csv_path.name == "views.csv" and meta_path.name == "views.meta"
    back = load_dataset(stem)
    assert len(back) == len(small)
    assert back.width == small.width
    assert back.seed == small.seed
    assert back.splits == small.splits
    np.testing.assert_array_equal(back.thetas, small.thetas)
    np.testing.assert_array_equal(back.images, small.images)
    np.testing.assert_array_equal(back.volume.points, small.volume.points)
    assert back.volume.domain_radius == small.volume.domain_radius


def test_dataset_paths_keep_dots():
    csv_path, meta_path = dataset_paths("run.v1/data")
    assert str(csv_path).endswith("run.v1/data.csv")
    assert str(meta_path).endswith("run.v1/data.meta")


def test_load_reports_bad_row(tmp_path, small):
    stem = tmp_path / "bad"
    csv_path, _ = save_dataset(small, stem)
    lines = csv_path.read_text().splitlines()
    lines[3] = lines[3].rsplit(",", 1)[0]  # drop one field from row 3
    csv_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetParseError) as err:
        load_dataset(stem)
    assert "line 4" in str(err.value)


def test_load_detects_count_mismatch(tmp_path, small):
    stem = tmp_path / "short"
    csv_path, _ = save_dataset(small, stem)
    lines = csv_path.read_text().splitlines()
    csv_path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(DatasetParseError):
        load_dataset(stem)


def test_load_detects_missing_volume(tmp_path, small):
    stem = tmp_path / "novol"
    _, meta_path = save_dataset(small, stem)
    text = meta_path.read_text()
    meta_path.write_text(text.split("volume:")[0])
    with pytest.raises(DatasetParseError):
        load_dataset(stem)
