"""Rotations, point-mass volumes, axis projection, and 1D rasterization.

A volume is a finite set of weighted points in the ball of a given radius.
Rotations act on volumes by moving the points; projection drops the last
coordinate; rasterization renders the projected masses onto a pixel grid.
Everything is kept in double precision and all values are immutable after
construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidArgumentError,
    OutOfDomainError,
    UnsupportedDimensionError,
)

TWO_PI = 2.0 * math.pi

# Orthonormality / determinant tolerance for accepting a rotation matrix.
ROTATION_TOL = 1e-12

# Norm slack when checking that points sit inside the domain ball, so that
# rotated copies of boundary points do not fail validation by roundoff.
_BALL_SLACK = 1e-9


def canonical_angle(theta: float) -> float:
    """Map an angle to the canonical interval [0, 2*pi); 2*pi itself maps to 0."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise InvalidArgumentError(f"angle must be finite, got {theta!r}")
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


def wrap_angle(theta: float) -> float:
    """Wrap an angle difference into [-pi, pi)."""
    t = math.fmod(float(theta) + math.pi, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    return t - math.pi


def circular_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle, in [0, pi]."""
    return abs(wrap_angle(a - b))


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Rotation:
    """A rotation of R^d: an orthonormal matrix with determinant +1.

    For d = 2 the canonical angle in [0, 2*pi) is stored alongside the
    matrix; for other dimensions ``angle`` is None.
    """

    dim: int
    matrix: np.ndarray
    angle: float | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidArgumentError(f"rotation dimension must be >= 2, got {self.dim}")
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (self.dim, self.dim):
            raise InvalidArgumentError(
                f"rotation matrix shape {m.shape} does not match dim {self.dim}"
            )
        if not np.all(np.isfinite(m)):
            raise InvalidArgumentError("rotation matrix must be finite")
        gram = m.T @ m
        if np.max(np.abs(gram - np.eye(self.dim))) > ROTATION_TOL:
            raise InvalidArgumentError("rotation matrix is not orthonormal")
        if abs(np.linalg.det(m) - 1.0) > ROTATION_TOL:
            raise InvalidArgumentError("rotation matrix must have determinant +1")
        angle = self.angle
        if self.dim == 2:
            if angle is None:
                angle = canonical_angle(math.atan2(m[1, 0], m[0, 0]))
            else:
                angle = canonical_angle(angle)
                ref = _angle_matrix(angle)
                if np.max(np.abs(m - ref)) > ROTATION_TOL:
                    raise InvalidArgumentError("stored angle disagrees with matrix")
        elif angle is not None:
            raise InvalidArgumentError("angle is only defined for dim 2")
        object.__setattr__(self, "matrix", _readonly(m))
        object.__setattr__(self, "angle", angle)


def _angle_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_from_angle(theta: float) -> Rotation:
    """Build the planar rotation with canonical angle ``theta`` mod 2*pi."""
    t = canonical_angle(theta)
    return Rotation(2, _angle_matrix(t), t)


def identity_rotation(dim: int = 2) -> Rotation:
    return Rotation(dim, np.eye(dim), 0.0 if dim == 2 else None)


def rotation_from_matrix(matrix: np.ndarray) -> Rotation:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"rotation matrix must be square, got shape {m.shape}")
    return Rotation(m.shape[0], m)


def random_rotation(dim: int, rng: np.random.Generator) -> Rotation:
    """Draw a rotation via QR decomposition of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, 0] = -q[:, 0]
    return Rotation(dim, q)


def compose(r1: Rotation, r2: Rotation) -> Rotation:
    """The rotation applying ``r2`` first and then ``r1``."""
    if r1.dim != r2.dim:
        raise InvalidArgumentError(f"cannot compose rotations of dim {r1.dim} and {r2.dim}")
    angle = None
    if r1.dim == 2:
        angle = canonical_angle(r1.angle + r2.angle)
        return Rotation(2, _angle_matrix(angle), angle)
    return Rotation(r1.dim, r1.matrix @ r2.matrix)


def inverse(r: Rotation) -> Rotation:
    angle = None if r.dim != 2 else canonical_angle(-r.angle)
    return Rotation(r.dim, r.matrix.T.copy(), angle)


@dataclass(frozen=True, eq=False)
class PointVolume:
    """An ordered list of point masses inside the ball of ``domain_radius``.

    Parameters
    ----------
    dim : int
        Ambient dimension d >= 2.
    points : ndarray, shape (n, d)
        Point positions; every norm must stay within ``domain_radius``.
    masses : ndarray, shape (n,)
        Strictly positive weights.
    domain_radius : float
        Radius of the ball the volume lives in.
    """

    dim: int
    points: np.ndarray
    masses: np.ndarray
    domain_radius: float

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidArgumentError(f"volume dimension must be >= 2, got {self.dim}")
        pts = np.atleast_2d(np.array(self.points, dtype=np.float64))
        ms = np.atleast_1d(np.array(self.masses, dtype=np.float64))
        r = float(self.domain_radius)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise InvalidArgumentError(
                f"points must have shape (n, {self.dim}), got {pts.shape}"
            )
        if pts.shape[0] < 1:
            raise InvalidArgumentError("a volume needs at least one point")
        if ms.shape != (pts.shape[0],):
            raise InvalidArgumentError(
                f"masses shape {ms.shape} does not match {pts.shape[0]} points"
            )
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(ms))) or not math.isfinite(r):
            raise InvalidArgumentError("volume data must be finite")
        if np.any(ms <= 0.0):
            raise InvalidArgumentError("masses must be strictly positive")
        if r <= 0.0:
            raise InvalidArgumentError("domain radius must be positive")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms > r * (1.0 + _BALL_SLACK)):
            raise InvalidArgumentError(
                f"point with norm {norms.max():.6g} lies outside the ball of radius {r:.6g}"
            )
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "masses", _readonly(ms))
        object.__setattr__(self, "domain_radius", r)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())


@dataclass(frozen=True, eq=False)
class ProjectedMasses:
    """Point masses on the projection hyperplane (dimension d - 1)."""

    dim: int
    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.array(self.positions, dtype=np.float64))
        ms = np.atleast_1d(np.array(self.masses, dtype=np.float64))
        if self.dim < 1 or pos.shape != (ms.shape[0], self.dim):
            raise InvalidArgumentError(
                f"positions shape {pos.shape} does not match dim {self.dim}"
            )
        if np.any(ms <= 0.0):
            raise InvalidArgumentError("masses must be strictly positive")
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "masses", _readonly(ms))

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())


@dataclass(frozen=True, eq=False)
class Image1D:
    """A rendered 1D image: ``width`` pixels with intensities in [0, 1].

    Pixel j covers the interval [-r + 2*r*j/W, -r + 2*r*(j+1)/W) of the
    projection axis, where r is ``domain_radius`` and W is ``width``.
    """

    width: int
    pixels: np.ndarray
    domain_radius: float

    def __post_init__(self):
        if self.width < 2:
            raise InvalidArgumentError(f"image width must be >= 2, got {self.width}")
        px = np.atleast_1d(np.array(self.pixels, dtype=np.float64))
        if px.shape != (self.width,):
            raise InvalidArgumentError(f"pixel array shape {px.shape} != ({self.width},)")
        if not np.all(np.isfinite(px)):
            raise InvalidArgumentError("pixels must be finite")
        if np.any(px < 0.0) or np.any(px > 1.0):
            raise InvalidArgumentError("pixels must lie in [0, 1]")
        if float(self.domain_radius) <= 0.0:
            raise InvalidArgumentError("domain radius must be positive")
        object.__setattr__(self, "pixels", _readonly(px))
        object.__setattr__(self, "domain_radius", float(self.domain_radius))


def pixel_centers(width: int, domain_radius: float) -> np.ndarray:
    """Midpoints of the ``width`` pixel intervals on [-r, r]."""
    r = float(domain_radius)
    return -r + 2.0 * r * (np.arange(width) + 0.5) / width


def apply_rotation(r: Rotation, v: PointVolume) -> PointVolume:
    """Rotate every point of ``v``; masses and domain radius are unchanged."""
    if r.dim != v.dim:
        raise InvalidArgumentError(f"rotation dim {r.dim} != volume dim {v.dim}")
    return PointVolume(v.dim, v.points @ r.matrix.T, v.masses, v.domain_radius)


def project(v: PointVolume) -> ProjectedMasses:
    """Project along the last axis: keep the first d - 1 coordinates.

    Masses are carried over unchanged, so total mass is conserved exactly.
    """
    return ProjectedMasses(v.dim - 1, v.points[:, : v.dim - 1], v.masses)


def rasterize(
    p: ProjectedMasses,
    width: int = 64,
    splat_sigma: float | None = None,
    domain_radius: float = 1.0,
) -> Image1D:
    """Render 1D projected masses onto a pixel grid, normalized to peak 1.

    Each mass contributes a Gaussian bump of standard deviation
    ``splat_sigma`` evaluated at the pixel centers; with ``splat_sigma`` 0
    the mass falls entirely into its nearest pixel bin.  The signal is
    divided by its maximum, so the image is invariant to scaling all
    masses by a common factor.

    Parameters
    ----------
    p : ProjectedMasses
        One-dimensional projected masses (from a d = 2 volume).
    width : int
        Number of pixels, at least 2.
    splat_sigma : float or None
        Bump width; None selects the default 0.05 * ``domain_radius``.
    domain_radius : float
        Half-extent of the pixel grid.
    """
    if p.dim != 1:
        raise UnsupportedDimensionError(
            f"rasterize renders 1D projections only, got dim {p.dim}"
        )
    if width < 2:
        raise InvalidArgumentError(f"image width must be >= 2, got {width}")
    r = float(domain_radius)
    if r <= 0.0:
        raise InvalidArgumentError("domain radius must be positive")
    if splat_sigma is None:
        splat_sigma = 0.05 * r
    sigma = float(splat_sigma)
    if sigma < 0.0 or not math.isfinite(sigma):
        raise InvalidArgumentError(f"splat sigma must be finite and >= 0, got {sigma}")
    x = p.positions[:, 0]
    if np.any(np.abs(x) > r * (1.0 + _BALL_SLACK)):
        raise OutOfDomainError(
            f"projected position {x[np.argmax(np.abs(x))]:.6g} outside [-{r:.6g}, {r:.6g}]"
        )
    if sigma == 0.0:
        bins = np.floor((x + r) / (2.0 * r) * width).astype(int)
        np.clip(bins, 0, width - 1, out=bins)
        signal = np.zeros(width)
        np.add.at(signal, bins, p.masses)
    else:
        centers = pixel_centers(width, r)
        spread = np.exp(-((centers[:, None] - x[None, :]) ** 2) / (2.0 * sigma * sigma))
        signal = spread @ p.masses
    peak = signal.max()
    if peak <= 0.0:
        raise InvalidArgumentError("rasterized signal has no positive peak")
    return Image1D(width, signal / peak, r)


def image_distance(a: Image1D, b: Image1D) -> float:
    """Root-mean-square difference between two images of equal width."""
    if a.width != b.width:
        raise InvalidArgumentError(f"image widths differ: {a.width} vs {b.width}")
    d = a.pixels - b.pixels
    return float(math.sqrt(np.mean(d * d)))


def render_volume(
    v: PointVolume,
    theta: float,
    width: int = 64,
    splat_sigma: float | None = None,
) -> Image1D:
    """Rotate, project, and rasterize in one call."""
    rotated = apply_rotation(rotation_from_angle(theta), v)
    return rasterize(project(rotated), width, splat_sigma, v.domain_radius)


def format_float(x: float) -> str:
    """Serialize a float with 17 significant digits (lossless round-trip)."""
    return f"{x:.17g}"


def save_volume(v: PointVolume, path) -> None:
    """Write a volume as plain text: a header line, then one point per line."""
    lines = [f"dim={v.dim} radius={format_float(v.domain_radius)}"]
    for point, mass in zip(v.points, v.masses):
        fields = [format_float(c) for c in point] + [format_float(mass)]
        lines.append(" ".join(fields))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_volume_lines(lines: list[str], first_line_number: int = 1) -> PointVolume:
    """Parse the text format produced by :func:`save_volume`.

    ``first_line_number`` offsets the line numbers reported in errors when
    the volume block is embedded inside another file.
    """
    from .errors import DatasetParseError

    if not lines:
        raise DatasetParseError(first_line_number, "empty volume block")
    header = lines[0].split()
    fields = {}
    for item in header:
        if "=" not in item:
            raise DatasetParseError(first_line_number, f"bad header field {item!r}")
        key, _, value = item.partition("=")
        fields[key] = value
    try:
        dim = int(fields["dim"])
        radius = float(fields["radius"])
    except (KeyError, ValueError) as exc:
        raise DatasetParseError(first_line_number, f"bad volume header: {exc}") from exc
    points, masses = [], []
    for offset, line in enumerate(lines[1:], start=1):
        lineno = first_line_number + offset
        parts = line.split()
        if len(parts) != dim + 1:
            raise DatasetParseError(
                lineno, f"expected {dim + 1} fields, got {len(parts)}"
            )
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise DatasetParseError(lineno, f"bad float: {exc}") from exc
        points.append(values[:dim])
        masses.append(values[dim])
    if not points:
        raise DatasetParseError(first_line_number, "volume has no points")
    return PointVolume(dim, np.array(points), np.array(masses), radius)


def load_volume(path) -> PointVolume:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    return parse_volume_lines(lines)
