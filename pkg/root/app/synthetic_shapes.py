"""
Synthetic labelled point clouds for desk-scale experiments.

Each family is sampled on a canonical surface of roughly unit size, then
scale-jittered, randomly rotated, perturbed with Gaussian noise and
normalized to the unit sphere.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

import mesh_io
import pc_errors
import pc_logging
from dataset_split import DatasetSplit, stratified_split
from point_cloud import PointCloud, normalize_unit_sphere
from seeded_rng import Rng
from transforms import ROTATIONS, random_rotation

FAMILIES = ("sphere", "cube", "cylinder", "cone", "torus", "plane", "pyramid", "helix")
MIN_POINTS = 8
SCALE_JITTER = (0.8, 1.2)


@dataclass(frozen=True)
class SyntheticSpec:
    """
    Attributes:
        classes (tuple[str, ...]): Family tags, one class per tag, in label order.
        per_class (int | tuple[int, ...]): Clouds per class, shared or per class.
        points (int): Points per cloud.
        noise (float): Gaussian noise sigma added before normalization.
        seed (int): Seed of the whole dataset.
        rotation (str): "z" turns every cloud about the vertical axis (upright
            shapes with a random heading), "so3" orients it uniformly at
            random, "none" keeps the canonical pose.
    """

    classes: tuple[str, ...] = FAMILIES
    per_class: Union[int, tuple[int, ...]] = 50
    points: int = 512
    noise: float = 0.02
    seed: int = 0
    rotation: str = "z"

    def class_counts(self) -> list[int]:
        if isinstance(self.per_class, int):
            return [self.per_class] * len(self.classes)
        return list(self.per_class)

    def validate(self) -> None:
        """
        Raises:
            pc_errors.InvalidSpec: On unknown or duplicate families, counts
                below 1, negative noise or fewer than 8 points.
        """
        if not self.classes:
            raise pc_errors.InvalidSpec("At least one class is required")
        unknown = [c for c in self.classes if c not in FAMILIES]
        if unknown:
            raise pc_errors.InvalidSpec(f"Unknown shape families {unknown}; choose from {FAMILIES}")
        if len(set(self.classes)) != len(self.classes):
            raise pc_errors.InvalidSpec("Shape families must be unique")
        counts = self.class_counts()
        if len(counts) != len(self.classes):
            raise pc_errors.InvalidSpec("per_class must give one count per class")
        if min(counts) < 1:
            raise pc_errors.InvalidSpec("Every class needs at least one cloud")
        if not self.noise >= 0:
            raise pc_errors.InvalidSpec(f"Noise must be >= 0, got {self.noise}")
        if self.points < MIN_POINTS:
            raise pc_errors.InvalidSpec(f"Clouds need at least {MIN_POINTS} points")
        if self.rotation not in ROTATIONS:
            raise pc_errors.InvalidSpec(
                f"Unknown rotation {self.rotation!r}; choose from {ROTATIONS}"
            )


def _mesh(vertices, faces) -> mesh_io.TriangleMesh:
    return mesh_io.TriangleMesh(
        np.asarray(vertices, dtype=np.float64), np.asarray(faces, dtype=np.int64)
    )


_CUBE = _mesh(
    [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)],
    [
        [0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5],
        [0, 4, 5], [0, 5, 1], [2, 3, 7], [2, 7, 6],
        [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3],
    ],
)

_PYRAMID = _mesh(
    [[-1, -1, -0.5], [1, -1, -0.5], [1, 1, -0.5], [-1, 1, -0.5], [0, 0, 1]],
    [[0, 2, 1], [0, 3, 2], [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
)


def _unit_rows(xyz: np.ndarray) -> np.ndarray:
    return xyz / np.linalg.norm(xyz, axis=1, keepdims=True)


def _sphere(n: int, rng: Rng) -> np.ndarray:
    # Antipodal pairs, plus a zero-sum triangle on a great circle when n is
    # odd, keep the centroid at the origin, so normalization leaves every
    # point exactly on the sphere.
    pairs = (n - 3) // 2 if n % 2 else n // 2
    directions = _unit_rows(rng.normal(size=(pairs, 3)))
    parts = [directions, -directions]
    if n % 2:
        frame = random_rotation("so3", rng)
        angles = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        triangle = np.outer(np.cos(angles), frame[:, 0]) + np.outer(np.sin(angles), frame[:, 1])
        parts.append(_unit_rows(triangle))
    return np.concatenate(parts)


def _cylinder(n: int, rng: Rng, radius: float = 0.6, height: float = 2.0) -> np.ndarray:
    lateral = 2 * np.pi * radius * height
    cap = np.pi * radius**2
    choice = rng.random(n) * (lateral + 2 * cap)
    theta = rng.uniform(0, 2 * np.pi, n)
    u = rng.random(n)
    on_side = choice < lateral
    rho = np.where(on_side, radius, radius * np.sqrt(u))
    z = np.where(
        on_side,
        (u - 0.5) * height,
        np.where(choice < lateral + cap, height / 2, -height / 2),
    )
    return np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)


def _cone(n: int, rng: Rng, radius: float = 0.8, height: float = 1.6) -> np.ndarray:
    slant = np.hypot(radius, height)
    lateral = np.pi * radius * slant
    base = np.pi * radius**2
    on_side = rng.random(n) * (lateral + base) < lateral
    theta = rng.uniform(0, 2 * np.pi, n)
    t = np.sqrt(rng.random(n))
    rho = radius * t
    z = np.where(on_side, height / 2 - height * t, -height / 2)
    return np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)


def _torus(n: int, rng: Rng, major: float = 0.8, minor: float = 0.3) -> np.ndarray:
    accepted = []
    count = 0
    while count < n:
        phi = rng.uniform(0, 2 * np.pi, 2 * n)
        keep = rng.random(2 * n) < (major + minor * np.cos(phi)) / (major + minor)
        accepted.append(phi[keep])
        count += int(keep.sum())
    phi = np.concatenate(accepted)[:n]
    theta = rng.uniform(0, 2 * np.pi, n)
    ring = major + minor * np.cos(phi)
    return np.stack([ring * np.cos(theta), ring * np.sin(theta), minor * np.sin(phi)], axis=1)


def _plane(n: int, rng: Rng) -> np.ndarray:
    xy = rng.uniform(-1, 1, (n, 2))
    return np.concatenate([xy, np.zeros((n, 1))], axis=1)


def _helix(n: int, rng: Rng, radius: float = 0.7, turns: float = 2.0, tube: float = 0.05) -> np.ndarray:
    t = rng.uniform(0, 2 * np.pi * turns, n)
    curve = np.stack([radius * np.cos(t), radius * np.sin(t), t / (np.pi * turns) - 1.0], axis=1)
    return curve + rng.normal(0.0, tube, (n, 3))


def sample_family(family: str, n: int, rng: Rng) -> np.ndarray:
    """(n, 3) points on the canonical surface of `family`."""
    if family == "sphere":
        return _sphere(n, rng)
    if family == "cube":
        return mesh_io.sample_surface(_CUBE, n, rng).xyz.copy()
    if family == "pyramid":
        return mesh_io.sample_surface(_PYRAMID, n, rng).xyz.copy()
    if family == "cylinder":
        return _cylinder(n, rng)
    if family == "cone":
        return _cone(n, rng)
    if family == "torus":
        return _torus(n, rng)
    if family == "plane":
        return _plane(n, rng)
    if family == "helix":
        return _helix(n, rng)
    raise pc_errors.InvalidSpec(f"Unknown shape family {family!r}")


def make_cloud(
    family: str, label: int, points: int, noise: float, rng: Rng, rotation: str = "z"
) -> PointCloud:
    """One jittered, rotated, noisy and normalized sample of `family`."""
    xyz = sample_family(family, points, rng) * rng.uniform(*SCALE_JITTER)
    xyz = xyz @ random_rotation(rotation, rng).T
    if noise > 0:
        xyz = xyz + rng.normal(0.0, noise, xyz.shape)
    return normalize_unit_sphere(PointCloud(xyz, label))


def generate(spec: SyntheticSpec) -> DatasetSplit:
    """
    Generates the dataset described by `spec`, split 70/15/15 per class.
    Identical specs give bitwise-identical datasets.
    """
    spec.validate()
    counts = spec.class_counts()
    streams = iter(Rng(spec.seed).spawn(sum(counts)))
    clouds_by_class = [
        [
            make_cloud(family, label, spec.points, spec.noise, next(streams), spec.rotation)
            for _ in range(count)
        ]
        for label, (family, count) in enumerate(zip(spec.classes, counts))
    ]
    split = stratified_split(clouds_by_class, spec.classes)
    pc_logging.log_debug(
        f"Generated {sum(counts)} synthetic clouds: "
        f"{len(split.train)}/{len(split.val)}/{len(split.test)} train/val/test"
    )
    return split
