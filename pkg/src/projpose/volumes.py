"""Ready-made planar volumes used by the checks, experiments, and demos."""
from __future__ import annotations

import math

import numpy as np

from .geometry import PointVolume


def equilateral_triangle(radius: float = 1.0) -> PointVolume:
    """Three unit masses at 0, 120, and 240 degrees on a circle."""
    angles = np.array([0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0])
    pts = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return PointVolume(2, pts, np.ones(3), radius)


def antipodal_pair(radius: float = 1.0) -> PointVolume:
    """Two equal masses at opposite ends of a diameter."""
    pts = np.array([[radius, 0.0], [-radius, 0.0]])
    return PointVolume(2, pts, np.ones(2), radius)


def discretized_circle(count: int = 12, radius: float = 1.0) -> PointVolume:
    """``count`` equal masses evenly spaced on the circle of ``radius``."""
    angles = 2.0 * math.pi * np.arange(count) / count
    pts = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return PointVolume(2, pts, np.ones(count), radius)


def mirror_symmetric_triangle() -> PointVolume:
    """Three points symmetric about the x axis; projections coincide at
    poses theta and -theta, so the induced action on images is broken."""
    pts = np.array([[0.8, 0.0], [-0.3, 0.6], [-0.3, -0.6]])
    return PointVolume(2, pts, np.ones(3), 1.0)


def asymmetric_three_points() -> PointVolume:
    """A 3-point volume with no point symmetry but one hidden pose
    coincidence: at pose 0 its projection is the symmetric multiset
    {-1, 0, 1}, so the half-turn pose projects identically."""
    pts = np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, -1.0]])
    return PointVolume(2, pts, np.ones(3), 2.0)


def collinear_points(radius: float = 0.6) -> PointVolume:
    """Three points on a diameter, including the origin."""
    pts = np.array([[radius, 0.0], [0.0, 0.0], [-radius, 0.0]])
    return PointVolume(2, pts, np.ones(3), radius)


def two_orbit_cyclic() -> PointVolume:
    """Six points with pure three-fold rotation symmetry and no mirror.

    Two orbits of three points each, at different radii and a generic
    relative phase, so poses 120 degrees apart coincide but no reflection
    pairing exists.  Rotating images stays well defined despite the
    coincidences, which makes this the boundary case between injective
    volumes and mirror-broken ones.
    """
    base = 2.0 * math.pi * np.arange(3) / 3.0
    phases = np.concatenate([base, base + 0.73])
    radii = np.concatenate([np.full(3, 0.9), np.full(3, 0.45)])
    pts = np.stack([radii * np.cos(phases), radii * np.sin(phases)], axis=1)
    return PointVolume(2, pts, np.ones(6), 1.0)


def random_volume(
    n: int,
    rng: np.random.Generator,
    domain_radius: float = 1.0,
) -> PointVolume:
    """Sample ``n`` unit masses uniformly from the disk of ``domain_radius``."""
    radii = domain_radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    angles = rng.uniform(0.0, 2.0 * math.pi, n)
    pts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    return PointVolume(2, pts, np.ones(n), domain_radius)
