"""
Local neighbourhood features computed at grouping time.

Two features are derived from a grouping and reused as extra neighbour-level
channels:

* directional vectors: neighbour minus anchor, divided by the ball radius;
* normalized distance: anchor to neighbour distance divided by the radius,
  which is the norm of the directional vector and at most 1 inside the ball.

Both are concatenated to the lifted per-neighbour features before pooling in
the channel order [lifted | dv | d].
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

import pc_errors
from grouping import NeighborhoodGrouping
from point_cloud import PointCloud


class AugmentMode(str, Enum):
    BASE = "base"
    DISTANCE = "distance"
    VECTORS = "vectors"
    BOTH = "both"

    @property
    def use_vectors(self) -> bool:
        return self in (AugmentMode.VECTORS, AugmentMode.BOTH)

    @property
    def use_distance(self) -> bool:
        return self in (AugmentMode.DISTANCE, AugmentMode.BOTH)

    @property
    def extra_channels(self) -> int:
        return 3 * self.use_vectors + 1 * self.use_distance


@dataclass(frozen=True)
class ChannelLayout:
    base_channels: int
    vectors: bool = False
    distance: bool = False

    @property
    def width(self) -> int:
        return self.base_channels + 3 * self.vectors + 1 * self.distance


@dataclass(frozen=True)
class DirectionalVectors:
    dv: np.ndarray  # (m, k, 3)


@dataclass(frozen=True)
class NormalizedDistances:
    d: np.ndarray  # (m, k)
    normalized: bool = True


@dataclass(frozen=True)
class FeatureTensor:
    values: np.ndarray  # (m, k, C)
    layout: ChannelLayout

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[-1] != self.layout.width:
            raise pc_errors.ShapeError(
                f"Feature values of shape {self.values.shape} do not match a "
                f"layout of width {self.layout.width}"
            )

    @classmethod
    def lifted(cls, values: np.ndarray) -> "FeatureTensor":
        return cls(values, ChannelLayout(values.shape[-1]))


def _scales(grouping: NeighborhoodGrouping, r: Optional[float]) -> np.ndarray:
    if r is None:
        return grouping.scales()
    if not (r > 0):
        raise pc_errors.InvalidConfig(f"Normalization radius must be > 0, got {r}")
    return np.full(len(grouping.anchors), float(r))


def directional_vectors(
    cloud: PointCloud, grouping: NeighborhoodGrouping, r: Optional[float] = None
) -> DirectionalVectors:
    """
    Neighbour-minus-anchor offsets divided by the radius, for every slot of the
    grouping (padded slots repeat their pad point's vector).

    When `r` is None the grouping's own scales are used, which is the ball
    radius for ball groupings and the per-anchor widest distance for kNN.
    """
    scale = _scales(grouping, r)
    xyz = cloud.xyz
    anchor_xyz = xyz[grouping.anchors.indices]
    offsets = xyz[grouping.neighbor_indices] - anchor_xyz[:, None, :]
    return DirectionalVectors(offsets / scale[:, None, None])


def normalized_distance(
    grouping: NeighborhoodGrouping, r: Optional[float] = None, normalize: bool = True
) -> NormalizedDistances:
    """
    Anchor to neighbour distances, divided by the radius when `normalize` is
    on and left raw otherwise.
    """
    scale = _scales(grouping, r)
    if not normalize:
        return NormalizedDistances(grouping.raw_distances.copy(), normalized=False)
    return NormalizedDistances(grouping.raw_distances / scale[:, None])


def assemble_features(
    lifted: FeatureTensor,
    dv: DirectionalVectors,
    d: NormalizedDistances,
    mode: AugmentMode,
) -> FeatureTensor:
    """
    Concatenates the enabled feature blocks as [lifted | dv | d].

    The output never aliases its inputs. The lifted block's dtype is kept.

    Raises:
        pc_errors.ShapeError: If the blocks disagree on (m, k).
    """
    mode = AugmentMode(mode)
    values = lifted.values
    m_k = values.shape[:2]
    if dv.dv.shape != (*m_k, 3) or d.d.shape != m_k:
        raise pc_errors.ShapeError(
            f"Cannot assemble lifted {values.shape} with dv {dv.dv.shape} and d {d.d.shape}"
        )
    blocks = [values]
    if mode.use_vectors:
        blocks.append(dv.dv.astype(values.dtype, copy=False))
    if mode.use_distance:
        blocks.append(d.d[..., None].astype(values.dtype, copy=False))
    layout = ChannelLayout(
        lifted.layout.width, vectors=mode.use_vectors, distance=mode.use_distance
    )
    return FeatureTensor(np.concatenate(blocks, axis=-1), layout)
