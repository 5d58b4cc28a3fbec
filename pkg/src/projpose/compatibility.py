"""Deciding whether a planar volume induces a well-defined rotation action
on its 1D projections.

Two conditions matter.  The weaker one requires that whenever two poses
produce the same projection, they keep producing the same projection after
any further rotation; it is exactly what makes "rotate the image" well
defined.  The stronger one, injectivity, requires that no two distinct
poses produce the same projection at all, and implies the weaker one.

Both are checked numerically on an angle grid.  Injectivity can also be
decided by sweeping the closed-form matching equations per point
permutation, which catches coincidences that fall between grid angles.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstructionFailureError,
    IncompatibleVolumeError,
    InvalidArgumentError,
    TooManyPointsError,
    UnsupportedDimensionError,
)
from .geometry import (
    TWO_PI,
    PointVolume,
    canonical_angle,
    circular_distance,
    pixel_centers,
)
from .volumes import random_volume

# Acceptance thresholds for the permutation solver.
_POLISH_TARGET = 1e-12
_WITNESS_RESIDUAL = 1e-9
_WITNESS_SEPARATION = 1e-6

# Mass mismatch beyond this prunes a permutation outright.
_MASS_TOL = 1e-12


@dataclass(frozen=True)
class RasterSettings:
    """How projections are rendered and compared.

    ``splat_sigma`` 0 selects the exact comparison path: projections are
    compared as sorted position/mass multisets instead of rasterized
    images, which removes pixel-grid aliasing from the verdicts.
    """

    width: int = 64
    splat_sigma: float = 0.0

    def default_tolerance(self) -> float:
        return 1e-6 if self.splat_sigma == 0.0 else 1e-3


@dataclass(frozen=True)
class CoincidencePair:
    """Two distinct poses whose projections agree within tolerance."""

    theta1: float
    theta2: float
    image_rms: float

    @property
    def separation(self) -> float:
        return circular_distance(self.theta1, self.theta2)


@dataclass(frozen=True)
class StarViolation:
    """A coincidence pair that stops coinciding after a probe rotation."""

    pair: CoincidencePair
    theta3: float
    image_rms: float


@dataclass
class CompatibilityVerdict:
    """Outcome of the compatibility checks on one volume.

    ``satisfies_star`` is the well-defined-action condition,
    ``satisfies_injectivity`` the stronger unique-pose condition.  Either
    may be None when the corresponding check was not run.  ``grid_size``
    records the angular resolution the claim is made at.
    """

    satisfies_star: bool | None = None
    satisfies_injectivity: bool | None = None
    coincidences: list[CoincidencePair] = field(default_factory=list)
    star_violations: list[StarViolation] = field(default_factory=list)
    permutation_witness: tuple[tuple[int, ...], float, float] | None = None
    grid_size: int | None = None
    tolerance: float | None = None

    def __post_init__(self):
        if self.satisfies_injectivity:
            if self.satisfies_star is False:
                raise InvalidArgumentError(
                    "injectivity implies the well-defined-action condition"
                )
            if self.coincidences:
                raise InvalidArgumentError("injectivity forbids coincidence pairs")
        if self.satisfies_star is not None:
            if self.satisfies_star == bool(self.star_violations):
                raise InvalidArgumentError(
                    "star verdict disagrees with recorded violations"
                )


@dataclass(frozen=True)
class GroupActionReport:
    """Worst-case deviations of the induced action from the group axioms."""

    passed: bool
    worst_identity_deviation: float
    worst_compatibility_deviation: float
    sample_count: int

    @property
    def worst_deviation(self) -> float:
        return max(self.worst_identity_deviation, self.worst_compatibility_deviation)


def _require_planar(v: PointVolume) -> None:
    if v.dim != 2:
        raise UnsupportedDimensionError(
            f"compatibility checks are implemented for dim 2, got dim {v.dim}"
        )


def _polar(v: PointVolume) -> tuple[np.ndarray, np.ndarray]:
    x, y = v.points[:, 0], v.points[:, 1]
    return np.hypot(x, y), np.arctan2(y, x)


def _sort_rows(pos: np.ndarray, mass: np.ndarray) -> np.ndarray:
    """Sort each row of (position, mass) pairs lexicographically.

    Returns an array of shape (rows, n, 2).  A single flat lexsort keyed
    by (row, position, mass) sorts all rows at once.
    """
    rows, n = pos.shape
    row_key = np.repeat(np.arange(rows), n)
    order = np.lexsort((mass.ravel(), pos.ravel(), row_key))
    out = np.empty((rows, n, 2))
    out[:, :, 0] = pos.ravel()[order].reshape(rows, n)
    out[:, :, 1] = mass.ravel()[order].reshape(rows, n)
    return out


class _ProjectionTable:
    """Projection signatures (and optionally images) of a volume over angles.

    The signature of a pose is what coincidence is decided on: the sorted
    (position, mass) multiset on the exact path, the rasterized pixel
    vector on the splatted path.
    """

    def __init__(self, v: PointVolume, settings: RasterSettings):
        _require_planar(v)
        self.volume = v
        self.settings = settings
        self.radii, self.phases = _polar(v)

    def signatures(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
        pos = self.radii[None, :] * np.cos(self.phases[None, :] + thetas[:, None])
        mass = np.broadcast_to(self.volume.masses, pos.shape)
        if self.settings.splat_sigma == 0.0:
            return _sort_rows(pos, mass)
        return self._splat(pos)

    def _splat(self, pos: np.ndarray) -> np.ndarray:
        r = self.volume.domain_radius
        sigma = self.settings.splat_sigma
        centers = pixel_centers(self.settings.width, r)
        bumps = np.exp(
            -((centers[None, None, :] - pos[:, :, None]) ** 2) / (2.0 * sigma * sigma)
        )
        signal = np.einsum("gnw,n->gw", bumps, self.volume.masses)
        return signal / signal.max(axis=1, keepdims=True)

    @staticmethod
    def distance(sig_a: np.ndarray, sig_b: np.ndarray) -> float:
        d = sig_a - sig_b
        if d.ndim == 2:  # exact path: (n, 2) sorted pairs
            return float(np.max(np.abs(d)))
        return float(math.sqrt(np.mean(d * d)))

    def distances_to(self, table: np.ndarray, sig: np.ndarray) -> np.ndarray:
        d = table - sig[None, ...]
        if d.ndim == 3:
            return np.max(np.abs(d), axis=(1, 2))
        return np.sqrt(np.mean(d * d, axis=1))


def grid_angles(grid_size: int) -> np.ndarray:
    return TWO_PI * np.arange(grid_size) / grid_size


def find_coincidences(
    v: PointVolume,
    grid_size: int = 720,
    settings: RasterSettings = RasterSettings(),
    tol: float | None = None,
) -> list[CoincidencePair]:
    """All grid pose pairs whose projections agree within ``tol``.

    Pairs are returned sorted by ascending distance (ties by angles).
    """
    _require_planar(v)
    if grid_size < 8:
        raise InvalidArgumentError(f"grid size must be >= 8, got {grid_size}")
    if tol is None:
        tol = settings.default_tolerance()
    table = _ProjectionTable(v, settings)
    angles = grid_angles(grid_size)
    sigs = table.signatures(angles)
    pairs = []
    for a in range(grid_size - 1):
        rest = sigs[a + 1 :]
        d = rest - sigs[a][None, ...]
        if d.ndim == 3:
            dist = np.max(np.abs(d), axis=(1, 2))
        else:
            dist = np.sqrt(np.mean(d * d, axis=1))
        for off in np.nonzero(dist <= tol)[0]:
            b = a + 1 + int(off)
            pairs.append(CoincidencePair(angles[a], angles[b], float(dist[off])))
    pairs.sort(key=lambda p: (p.image_rms, p.theta1, p.theta2))
    return pairs


def _resolution_guard(grid_size: int) -> float:
    return 2.0 * TWO_PI / grid_size


def check_injectivity(
    v: PointVolume,
    grid_size: int = 720,
    settings: RasterSettings = RasterSettings(),
    tol: float | None = None,
) -> CompatibilityVerdict:
    """Grid search for distinct poses with coinciding projections.

    Pairs closer than twice the grid step are attributed to resolution
    rather than to a genuine coincidence and do not count against the
    verdict.
    """
    if tol is None:
        tol = settings.default_tolerance()
    pairs = find_coincidences(v, grid_size, settings, tol)
    guard = _resolution_guard(grid_size)
    real = [p for p in pairs if p.separation > guard]
    injective = not real
    return CompatibilityVerdict(
        satisfies_star=True if injective else None,
        satisfies_injectivity=injective,
        coincidences=real,
        grid_size=grid_size,
        tolerance=tol,
    )


def _solve_permutation(
    radii: np.ndarray,
    phases: np.ndarray,
    sigma: tuple[int, ...],
    angular_resolution: int,
) -> tuple[float, float] | None:
    """Sweep theta1 and solve the per-point matching equations for theta2.

    Equation i demands r_i cos(phi_i + theta1) = r_s(i) cos(phi_s(i) + theta2).
    The pivot equation (largest right-hand radius) gives two arccos branches
    for theta2 per swept theta1; Gauss-Newton polish then drives the full
    residual below the acceptance threshold or the candidate is dropped.
    """
    perm = np.asarray(sigma)
    r1, p1 = radii, phases
    r2, p2 = radii[perm], phases[perm]
    pivot = int(np.argmax(r2))
    if r2[pivot] == 0.0:
        # Every point sits at the origin: all poses project identically.
        return 0.0, math.pi
    t1 = grid_angles(angular_resolution)
    c = r1[pivot] * np.cos(p1[pivot] + t1) / r2[pivot]
    feasible = np.abs(c) <= 1.0
    t1 = t1[feasible]
    if t1.size == 0:
        return None
    base = np.arccos(c[feasible])
    cand_t1 = np.concatenate([t1, t1])
    cand_t2 = np.concatenate([base - p2[pivot], -base - p2[pivot]])

    def residual(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return r1[None, :] * np.cos(p1[None, :] + a[:, None]) - r2[None, :] * np.cos(
            p2[None, :] + b[:, None]
        )

    for _ in range(25):
        f = residual(cand_t1, cand_t2)
        if np.max(np.abs(f)) < _POLISH_TARGET:
            break
        j1 = -r1[None, :] * np.sin(p1[None, :] + cand_t1[:, None])
        j2 = r2[None, :] * np.sin(p2[None, :] + cand_t2[:, None])
        g11 = np.sum(j1 * j1, axis=1)
        g12 = np.sum(j1 * j2, axis=1)
        g22 = np.sum(j2 * j2, axis=1)
        b1 = np.sum(j1 * f, axis=1)
        b2 = np.sum(j2 * f, axis=1)
        det = g11 * g22 - g12 * g12
        ok = det > 1e-18
        inv = np.where(ok, det, 1.0)
        step1 = np.where(ok, (g22 * b1 - g12 * b2) / inv, 0.0)
        step2 = np.where(ok, (g11 * b2 - g12 * b1) / inv, 0.0)
        active = np.max(np.abs(f), axis=1) >= _POLISH_TARGET
        cand_t1 = cand_t1 - np.where(active, step1, 0.0)
        cand_t2 = cand_t2 - np.where(active, step2, 0.0)

    final = np.max(np.abs(residual(cand_t1, cand_t2)), axis=1)
    sep = np.abs(
        np.mod(cand_t1 - cand_t2 + math.pi, TWO_PI) - math.pi
    )
    accepted = np.nonzero((final < _WITNESS_RESIDUAL) & (sep > _WITNESS_SEPARATION))[0]
    if accepted.size == 0:
        return None
    first = int(accepted[0])
    return canonical_angle(float(cand_t1[first])), canonical_angle(float(cand_t2[first]))


def check_injectivity_algebraic(
    v: PointVolume,
    angular_resolution: int = 4096,
) -> CompatibilityVerdict:
    """Decide injectivity from the matching equations, not from a pose grid.

    Two poses share a projection exactly when some permutation matches every
    point's projected position and mass across the two poses.  Permutations
    that do not preserve masses are pruned; the rest are swept numerically.
    """
    _require_planar(v)
    n = len(v)
    if n > 8:
        raise TooManyPointsError(
            f"permutation sweep enumerates n! matchings; n = {n} exceeds 8"
        )
    if angular_resolution < 8:
        raise InvalidArgumentError("angular resolution must be >= 8")
    radii, phases = _polar(v)
    masses = v.masses
    for sigma in itertools.permutations(range(n)):
        if np.max(np.abs(masses - masses[list(sigma)])) > _MASS_TOL:
            continue
        hit = _solve_permutation(radii, phases, sigma, angular_resolution)
        if hit is not None:
            return CompatibilityVerdict(
                satisfies_injectivity=False,
                permutation_witness=(tuple(sigma), hit[0], hit[1]),
                grid_size=angular_resolution,
                tolerance=_WITNESS_RESIDUAL,
            )
    return CompatibilityVerdict(
        satisfies_star=True,
        satisfies_injectivity=True,
        grid_size=angular_resolution,
        tolerance=_WITNESS_RESIDUAL,
    )


def check_star(
    v: PointVolume,
    grid_size: int = 720,
    probe_count: int = 12,
    settings: RasterSettings = RasterSettings(),
    tol: float | None = None,
) -> CompatibilityVerdict:
    """Check that coinciding poses keep coinciding under further rotation.

    Every coincidence pair is probed with ``probe_count`` rotations spread
    over the circle; a pair that separates under some probe is recorded as
    a violation.  A volume with no coincidences passes vacuously.
    """
    if probe_count < 8:
        raise InvalidArgumentError(f"probe count must be >= 8, got {probe_count}")
    if tol is None:
        tol = settings.default_tolerance()
    pairs = find_coincidences(v, grid_size, settings, tol)
    guard = _resolution_guard(grid_size)
    real = [p for p in pairs if p.separation > guard]
    violations: list[StarViolation] = []
    if real:
        table = _ProjectionTable(v, settings)
        probes = grid_angles(probe_count)
        t1 = np.array([p.theta1 for p in real])
        t2 = np.array([p.theta2 for p in real])
        left = table.signatures((t1[:, None] + probes[None, :]).ravel())
        right = table.signatures((t2[:, None] + probes[None, :]).ravel())
        d = left - right
        if d.ndim == 3:
            dist = np.max(np.abs(d), axis=(1, 2))
        else:
            dist = np.sqrt(np.mean(d * d, axis=1))
        dist = dist.reshape(len(real), probe_count)
        for i, pair in enumerate(real):
            for j in np.nonzero(dist[i] > tol)[0]:
                violations.append(
                    StarViolation(pair, float(probes[j]), float(dist[i, j]))
                )
    injective = not real
    return CompatibilityVerdict(
        satisfies_star=not violations,
        satisfies_injectivity=injective,
        coincidences=real,
        star_violations=violations,
        grid_size=grid_size,
        tolerance=tol,
    )


def verify_group_action(
    v: PointVolume,
    sample_count: int = 100,
    settings: RasterSettings = RasterSettings(),
    tol: float = 1e-9,
    grid_size: int = 720,
    seed: int = 0,
    enforce_precondition: bool = True,
) -> GroupActionReport:
    """Exercise the induced action on images and report its worst deviation.

    The action applies a rotation to an image by looking the image up in a
    pose table (smallest matching pose wins), advancing that pose, and
    comparing the resulting projections on the active signature path, so
    the verdict is not aliased by pixel binning.  For a volume with a
    well-defined action the identity and composition axioms then hold to
    rounding error; the lookup makes no use of how the input image was
    generated, which is what exposes broken volumes when the precondition
    check is disabled.
    """
    if sample_count < 1:
        raise InvalidArgumentError("sample count must be >= 1")
    if enforce_precondition:
        verdict = check_star(v, grid_size=grid_size, settings=settings)
        if not verdict.satisfies_star:
            raise IncompatibleVolumeError(
                "volume fails the well-defined-action condition; "
                f"{len(verdict.star_violations)} probe violations recorded"
            )
    table = _ProjectionTable(v, settings)
    angles = grid_angles(grid_size)
    sigs = table.signatures(angles)
    match_tol = settings.default_tolerance()

    def representative(sig: np.ndarray) -> float:
        dists = table.distances_to(sigs, sig)
        hits = np.nonzero(dists <= match_tol)[0]
        if hits.size == 0:
            hits = np.array([int(np.argmin(dists))])
        return float(angles[hits[0]])

    def act(theta: float, sig: np.ndarray) -> float:
        """Return the pose representing the rotated image."""
        return canonical_angle(representative(sig) + theta)

    rng = np.random.default_rng(seed)
    draws = rng.integers(0, grid_size, size=(sample_count, 3))
    worst_id = 0.0
    worst_comp = 0.0
    for i, a, b in draws:
        theta_a, theta_b = angles[a], angles[b]
        sig_i = sigs[i]

        pose_id = act(0.0, sig_i)
        dev = table.distance(table.signatures(pose_id)[0], sig_i)
        worst_id = max(worst_id, dev)

        pose_one = act(theta_a, sig_i)
        pose_two = act(theta_b, table.signatures(pose_one)[0])
        pose_direct = act(canonical_angle(theta_a + theta_b), sig_i)
        dev = table.distance(
            table.signatures(pose_two)[0], table.signatures(pose_direct)[0]
        )
        worst_comp = max(worst_comp, dev)
    return GroupActionReport(
        passed=worst_id <= tol and worst_comp <= tol,
        worst_identity_deviation=worst_id,
        worst_compatibility_deviation=worst_comp,
        sample_count=sample_count,
    )


def random_compatible_volume(
    n: int,
    seed: int,
    domain_radius: float = 1.0,
    max_attempts: int = 64,
    angular_resolution: int = 4096,
) -> PointVolume:
    """Sample random volumes until one passes the injectivity sweep.

    Same (n, seed) always yields the same volume.  Construction fails for
    configurations that are never injective (a single point, or two points,
    whose matching equations always admit a second pose).
    """
    if n < 1:
        raise InvalidArgumentError(f"need at least one point, got n = {n}")
    if n > 8:
        raise TooManyPointsError(f"n = {n} exceeds the permutation sweep bound 8")
    if max_attempts < 1:
        raise InvalidArgumentError("max_attempts must be >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        candidate = random_volume(n, rng, domain_radius)
        verdict = check_injectivity_algebraic(candidate, angular_resolution)
        if verdict.satisfies_injectivity:
            return candidate
    raise ConstructionFailureError(
        f"no injective volume with n = {n} found in {max_attempts} attempts"
    )
