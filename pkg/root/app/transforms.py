"""
Random perturbations applied to training clouds, drawn fresh every epoch.

A transform shuffles the point order (so fixed-start FPS picks different
anchors), scales each axis independently, rotates the cloud about the origin
and adds clipped Gaussian jitter. Validation and test clouds are never
transformed.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

import pc_errors
from point_cloud import PointCloud
from seeded_rng import Rng

ROTATIONS = ("so3", "z", "none")


@dataclass(frozen=True)
class TrainTransform:
    """
    Attributes:
        rotation (str): "z" for a random angle about the vertical axis, "so3" for
            a uniform random rotation, "none" to keep orientation.
        scale (tuple[float, float]): Range of the per-axis scale factor.
        jitter (float): Sigma of the per-point Gaussian offset; 0 disables.
        jitter_clip (float): Bound on each jitter component.
        shuffle (bool): Randomly permute the point order.
    """

    rotation: str = "z"
    scale: tuple[float, ...] = (0.9, 1.1)
    jitter: float = 0.01
    jitter_clip: float = 0.05
    shuffle: bool = True

    @property
    def enabled(self) -> bool:
        return (
            self.rotation != "none"
            or tuple(self.scale) != (1.0, 1.0)
            or self.jitter > 0
            or self.shuffle
        )

    def validate(self) -> None:
        if self.rotation not in ROTATIONS:
            raise pc_errors.InvalidConfig(
                f"rotation must be one of {ROTATIONS}, got {self.rotation!r}"
            )
        if len(self.scale) != 2 or not 0 < self.scale[0] <= self.scale[1]:
            raise pc_errors.InvalidConfig(
                f"scale must be a range [low, high] with 0 < low <= high, got {list(self.scale)}"
            )
        if self.jitter < 0 or self.jitter_clip < 0:
            raise pc_errors.InvalidConfig("jitter and jitter_clip must be >= 0")


NO_TRANSFORM = TrainTransform(rotation="none", scale=(1.0, 1.0), jitter=0.0, shuffle=False)


def random_rotation(kind: str, rng: Rng) -> np.ndarray:
    """3x3 rotation matrix of the given kind ("so3", "z" or "none")."""
    if kind == "so3":
        return Rotation.random(random_state=rng.generator).as_matrix()
    if kind == "z":
        return Rotation.from_euler("z", rng.uniform(0.0, 2 * np.pi)).as_matrix()
    return np.eye(3)


def apply_transform(cloud: PointCloud, transform: TrainTransform, rng: Rng) -> PointCloud:
    """A randomly perturbed copy of `cloud`; the label is kept."""
    xyz = cloud.xyz
    if transform.shuffle:
        xyz = xyz[rng.permutation(len(cloud))]
    if tuple(transform.scale) != (1.0, 1.0):
        xyz = xyz * rng.uniform(transform.scale[0], transform.scale[1], 3)
    if transform.rotation != "none":
        xyz = xyz @ random_rotation(transform.rotation, rng).T
    if transform.jitter > 0:
        offsets = rng.normal(0.0, transform.jitter, xyz.shape)
        xyz = xyz + np.clip(offsets, -transform.jitter_clip, transform.jitter_clip)
    return PointCloud(xyz, cloud.label)
