from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

import pc_errors


class Point3(NamedTuple):
    """A single 3D point; unitless once its cloud is normalized."""

    x: float
    y: float
    z: float


def _as_xyz(points) -> np.ndarray:
    xyz = np.array(points, dtype=np.float64)
    if xyz.ndim == 1 and xyz.size == 3:
        xyz = xyz.reshape(1, 3)
    if xyz.ndim != 2 or xyz.shape[1] != 3:
        raise pc_errors.InvalidCloud(
            f"Expected an (n, 3) coordinate array, got shape {xyz.shape}"
        )
    if xyz.shape[0] == 0:
        raise pc_errors.InvalidCloud("Point cloud must hold at least one point")
    if not np.all(np.isfinite(xyz)):
        raise pc_errors.InvalidCloud("Point cloud holds non-finite coordinates")
    xyz.setflags(write=False)
    return xyz


class PointCloud:
    """
    An ordered, immutable set of 3D points with an optional class label.

    Point order is meaningful: anchor and neighbour indices refer to it, and
    every transformation here maps index i to index i.

    Attributes:
        xyz (np.ndarray): Read-only (n, 3) float64 coordinates.
        label (Optional[int]): Class id, if the cloud is labelled.
    """

    __slots__ = ("xyz", "label")

    def __init__(self, points, label: Optional[int] = None):
        self.xyz = _as_xyz(points)
        self.label = None if label is None else int(label)

    @classmethod
    def from_points(
        cls, points: Iterable[Point3], label: Optional[int] = None
    ) -> "PointCloud":
        return cls([tuple(p) for p in points], label)

    def __len__(self) -> int:
        return self.xyz.shape[0]

    @property
    def points(self) -> list[Point3]:
        return [Point3(*map(float, row)) for row in self.xyz]

    def with_label(self, label: Optional[int]) -> "PointCloud":
        return PointCloud(self.xyz, label)

    def permuted(self, order: Sequence[int]) -> "PointCloud":
        """Returns a cloud whose point i is this cloud's point order[i]."""
        return PointCloud(self.xyz[np.asarray(order)], self.label)

    def transformed(
        self, rotation: np.ndarray = None, translation: np.ndarray = None
    ) -> "PointCloud":
        """Applies x -> R x + t to every point."""
        xyz = self.xyz
        if rotation is not None:
            xyz = xyz @ np.asarray(rotation, dtype=np.float64).T
        if translation is not None:
            xyz = xyz + np.asarray(translation, dtype=np.float64)
        return PointCloud(xyz, self.label)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointCloud):
            return False
        return self.label == other.label and np.array_equal(self.xyz, other.xyz)

    def __hash__(self) -> int:
        return hash((self.xyz.tobytes(), self.label))

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)}, label={self.label})"


class AnchorSet:
    """
    Ordered, unique indices into a PointCloud selected as neighbourhood
    centres.
    """

    __slots__ = ("indices",)

    def __init__(self, indices: Sequence[int], n: Optional[int] = None):
        array = np.array(indices, dtype=np.int64).reshape(-1)
        if len(np.unique(array)) != len(array):
            raise pc_errors.InvalidRequest("Anchor indices must be unique")
        if len(array) and array.min() < 0:
            raise pc_errors.InvalidRequest("Anchor indices must be non-negative")
        if n is not None and len(array) and array.max() >= n:
            raise pc_errors.InvalidRequest(
                f"Anchor index {int(array.max())} out of range for {n} points"
            )
        array.setflags(write=False)
        self.indices = array

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(int(i) for i in self.indices)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AnchorSet) and np.array_equal(
            self.indices, other.indices
        )

    def __hash__(self) -> int:
        return hash(self.indices.tobytes())

    def __repr__(self) -> str:
        return f"AnchorSet({self.indices.tolist()})"


def centroid(cloud: PointCloud) -> Point3:
    """
    Componentwise arithmetic mean of the cloud's points.

    Raises:
        pc_errors.InvalidCloud: If the cloud is missing or empty.
    """
    if cloud is None or len(cloud) == 0:
        raise pc_errors.InvalidCloud("Cannot take the centroid of an empty cloud")
    return Point3(*map(float, cloud.xyz.mean(axis=0)))


def normalize_unit_sphere(cloud: PointCloud) -> PointCloud:
    """
    Centers the cloud on its centroid and scales it so that the farthest point
    sits on the unit sphere.

    A cloud whose points all coincide maps to the origin instead of raising,
    so batch pipelines never stop on degenerate inputs. Applying the function
    twice gives the same result as applying it once.

    Args:
        cloud (PointCloud): The cloud to normalize.

    Returns:
        PointCloud: A new cloud with the same point order and label.
    """
    if cloud is None or len(cloud) == 0:
        raise pc_errors.InvalidCloud("Cannot normalize an empty cloud")
    if not np.all(np.isfinite(cloud.xyz)):
        raise pc_errors.InvalidCloud("Cannot normalize a non-finite cloud")
    centered = cloud.xyz - cloud.xyz.mean(axis=0)
    scale = np.sqrt((centered * centered).sum(axis=1)).max()
    if scale == 0.0 or not np.isfinite(scale):
        return PointCloud(np.zeros_like(centered), cloud.label)
    return PointCloud(centered / scale, cloud.label)
