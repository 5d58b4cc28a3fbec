"""Synthetic pose datasets: render a volume at random poses, keep the poses.

A dataset is a list of (true pose, image) samples plus the settings that
produced it.  Serialization is plain text: a CSV of rows and a sidecar
metadata file that embeds the generating volume, so a dataset file pair is
self-contained and round-trips losslessly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DatasetParseError, InvalidArgumentError
from .geometry import (
    TWO_PI,
    Image1D,
    PointVolume,
    format_float,
    parse_volume_lines,
    render_volume,
)

TRAIN, VALIDATION = "train", "val"


@dataclass(frozen=True, eq=False)
class PoseSample:
    """One rendered view and the pose that produced it."""

    theta_true: float
    image: Image1D


@dataclass(frozen=True, eq=False)
class Dataset:
    volume: PointVolume
    samples: tuple[PoseSample, ...]
    width: int
    splat_sigma: float
    noise_sigma: float
    seed: int
    val_fraction: float
    splits: tuple[str, ...]

    def __post_init__(self):
        if len(self.samples) != len(self.splits):
            raise InvalidArgumentError("every sample needs a split tag")
        if any(s.image.width != self.width for s in self.samples):
            raise InvalidArgumentError("all images must share the dataset width")

    def __len__(self) -> int:
        return len(self.samples)

    @cached_property
    def thetas(self) -> np.ndarray:
        return np.array([s.theta_true for s in self.samples])

    @cached_property
    def images(self) -> np.ndarray:
        return np.stack([s.image.pixels for s in self.samples])

    @cached_property
    def train_indices(self) -> np.ndarray:
        return np.nonzero(np.array(self.splits) == TRAIN)[0]

    @cached_property
    def val_indices(self) -> np.ndarray:
        return np.nonzero(np.array(self.splits) == VALIDATION)[0]


def generate_dataset(
    volume: PointVolume,
    count: int,
    width: int = 64,
    splat_sigma: float | None = None,
    noise_sigma: float = 0.0,
    seed: int = 0,
    val_fraction: float = 0.1,
) -> Dataset:
    """Render ``count`` views of ``volume`` at uniform random poses.

    Poses are drawn i.i.d. uniform on [0, 2*pi).  Optional Gaussian pixel
    noise is clamped back to [0, 1].  The last ceil(count * val_fraction)
    samples form the validation split.  Everything is driven by ``seed``.
    """
    if count < 1:
        raise InvalidArgumentError(f"count must be >= 1, got {count}")
    if not 0.0 <= val_fraction < 1.0:
        raise InvalidArgumentError(f"val fraction must be in [0, 1), got {val_fraction}")
    if noise_sigma < 0.0:
        raise InvalidArgumentError("noise sigma must be >= 0")
    if splat_sigma is None:
        splat_sigma = 0.05 * volume.domain_radius
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, TWO_PI, count)
    samples = []
    for theta in thetas:
        image = render_volume(volume, theta, width, splat_sigma)
        if noise_sigma > 0.0:
            noisy = image.pixels + rng.normal(0.0, noise_sigma, width)
            image = Image1D(width, np.clip(noisy, 0.0, 1.0), volume.domain_radius)
        samples.append(PoseSample(float(theta), image))
    n_val = math.ceil(count * val_fraction)
    splits = (TRAIN,) * (count - n_val) + (VALIDATION,) * n_val
    return Dataset(
        volume=volume,
        samples=tuple(samples),
        width=width,
        splat_sigma=float(splat_sigma),
        noise_sigma=float(noise_sigma),
        seed=int(seed),
        val_fraction=float(val_fraction),
        splits=splits,
    )


def dataset_paths(stem) -> tuple[Path, Path]:
    return Path(str(stem) + ".csv"), Path(str(stem) + ".meta")


def save_dataset(dataset: Dataset, stem) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` with the samples and ``<stem>.meta`` with the
    generation settings and the embedded volume."""
    csv_path, meta_path = dataset_paths(stem)
    header = "theta," + ",".join(f"x{j}" for j in range(dataset.width))
    rows = [header]
    for sample in dataset.samples:
        fields = [format_float(sample.theta_true)]
        fields.extend(format_float(p) for p in sample.image.pixels)
        rows.append(",".join(fields))
    csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    meta = [
        f"count={len(dataset)}",
        f"noise_sigma={format_float(dataset.noise_sigma)}",
        f"seed={dataset.seed}",
        f"splat_sigma={format_float(dataset.splat_sigma)}",
        f"val_fraction={format_float(dataset.val_fraction)}",
        f"width={dataset.width}",
        "volume:",
    ]
    lines = [f"dim={dataset.volume.dim} radius={format_float(dataset.volume.domain_radius)}"]
    for point, mass in zip(dataset.volume.points, dataset.volume.masses):
        lines.append(" ".join([format_float(c) for c in point] + [format_float(mass)]))
    meta_path.write_text("\n".join(meta + lines) + "\n", encoding="utf-8")
    return csv_path, meta_path


def load_dataset(stem) -> Dataset:
    """Read back a dataset written by :func:`save_dataset`."""
    csv_path, meta_path = dataset_paths(stem)
    meta_lines = meta_path.read_text(encoding="utf-8").splitlines()
    fields: dict[str, str] = {}
    volume = None
    for i, line in enumerate(meta_lines, start=1):
        if not line.strip():
            continue
        if line.strip() == "volume:":
            block = [l for l in meta_lines[i:] if l.strip()]
            volume = parse_volume_lines(block, first_line_number=i + 1)
            break
        if "=" not in line:
            raise DatasetParseError(i, f"expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        fields[key] = value
    if volume is None:
        raise DatasetParseError(len(meta_lines), "metadata is missing the volume block")
    try:
        count = int(fields["count"])
        width = int(fields["width"])
        seed = int(fields["seed"])
        splat_sigma = float(fields["splat_sigma"])
        noise_sigma = float(fields["noise_sigma"])
        val_fraction = float(fields["val_fraction"])
    except (KeyError, ValueError) as exc:
        raise DatasetParseError(0, f"bad metadata: {exc}") from exc

    csv_lines = csv_path.read_text(encoding="utf-8").splitlines()
    if not csv_lines:
        raise DatasetParseError(1, "dataset file is empty")
    expected_header = "theta," + ",".join(f"x{j}" for j in range(width))
    if csv_lines[0] != expected_header:
        raise DatasetParseError(1, "unexpected dataset header")
    samples = []
    for lineno, line in enumerate(csv_lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != width + 1:
            raise DatasetParseError(
                lineno, f"expected {width + 1} fields, got {len(parts)}"
            )
        try:
            values = np.array([float(p) for p in parts])
        except ValueError as exc:
            raise DatasetParseError(lineno, f"bad float: {exc}") from exc
        samples.append(
            PoseSample(float(values[0]), Image1D(width, values[1:], volume.domain_radius))
        )
    if len(samples) != count:
        raise DatasetParseError(
            len(csv_lines), f"metadata promises {count} samples, file has {len(samples)}"
        )
    n_val = math.ceil(count * val_fraction)
    splits = (TRAIN,) * (count - n_val) + (VALIDATION,) * n_val
    return Dataset(
        volume=volume,
        samples=tuple(samples),
        width=width,
        splat_sigma=splat_sigma,
        noise_sigma=noise_sigma,
        seed=seed,
        val_fraction=val_fraction,
        splits=splits,
    )
