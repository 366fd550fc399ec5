from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

import pc_errors
from point_cloud import AnchorSet, PointCloud
from sampling import squared_distances_to

# Slack added to the kd-tree search radius; candidates are re-filtered with
# the exact kernel afterwards.
_TREE_SLACK = 1e-9


@dataclass(frozen=True)
class BallQueryConfig:
    """
    Ball query parameters.

    Attributes:
        radius (float): Ball radius r, in normalized cloud units; r > 0.
        k_max (int): Maximum neighbours kept per anchor; k_max >= 1.
    """

    radius: float
    k_max: int

    def __post_init__(self):
        if not (self.radius > 0):
            raise pc_errors.InvalidConfig(f"Ball radius must be > 0, got {self.radius}")
        if int(self.k_max) < 1:
            raise pc_errors.InvalidConfig(f"k_max must be >= 1, got {self.k_max}")


@dataclass(frozen=True)
class NeighborhoodGrouping:
    """
    Result of a neighbourhood query.

    Attributes:
        anchors (AnchorSet): The m anchor indices.
        neighbor_indices (np.ndarray): (m, k) cloud indices per anchor.
        raw_distances (np.ndarray): (m, k) Euclidean distances, pre-normalization.
        pad_mask (np.ndarray): (m, k) True where a slot duplicates the first
            qualifying neighbour.
        radius (Optional[float]): Ball radius, or None for kNN groupings.
    """

    anchors: AnchorSet
    neighbor_indices: np.ndarray
    raw_distances: np.ndarray
    pad_mask: np.ndarray
    radius: Optional[float] = None
    mode: str = field(default="ball")

    @property
    def k(self) -> int:
        return self.neighbor_indices.shape[1]

    def scales(self) -> np.ndarray:
        """
        Per-anchor normalizer: r in ball mode; in kNN mode the largest
        neighbour distance of the row, with 1.0 for rows of coincident points.
        """
        m = len(self.anchors)
        if self.radius is not None:
            return np.full(m, float(self.radius))
        widest = self.raw_distances.max(axis=1)
        return np.where(widest > 0.0, widest, 1.0)


def _check_anchors(cloud: PointCloud, anchors: AnchorSet) -> None:
    if len(anchors) and int(anchors.indices.max()) >= len(cloud):
        raise pc_errors.InvalidRequest(
            f"Anchor index {int(anchors.indices.max())} out of range for {len(cloud)} points"
        )


def _pair_distances(xyz: np.ndarray, anchor_xyz: np.ndarray) -> np.ndarray:
    """(m, n) distance table built from the shared squared-distance kernel."""
    return np.sqrt(squared_distances_to(xyz[None, :, :], anchor_xyz[:, None, :]))


def _first_k_rows(within: np.ndarray, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """
    For each row of a boolean (m, n) table, the first k_max True column
    indices in ascending order, padded with the row's first True index.
    """
    m, n = within.shape
    # Stable sort on "not within" moves qualifying columns to the front while
    # keeping them in ascending index order.
    order = np.argsort(~within, axis=1, kind="stable")
    width = min(k_max, n)
    picked = order[:, :width]
    counts = within.sum(axis=1)
    slots = np.arange(k_max)[None, :]
    pad_mask = slots >= counts[:, None]
    if width < k_max:
        picked = np.concatenate(
            [picked, np.repeat(picked[:, :1], k_max - width, axis=1)], axis=1
        )
    indices = np.where(pad_mask, picked[:, :1], picked)
    return indices.astype(np.int64), pad_mask


def _ball_query_brute(
    xyz: np.ndarray, anchor_xyz: np.ndarray, cfg: BallQueryConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    distances = _pair_distances(xyz, anchor_xyz)
    indices, pad_mask = _first_k_rows(distances <= cfg.radius, cfg.k_max)
    raw = np.take_along_axis(distances, indices, axis=1)
    return indices, raw, pad_mask


def _ball_query_tree(
    xyz: np.ndarray, anchor_xyz: np.ndarray, cfg: BallQueryConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    tree = cKDTree(xyz)
    candidate_lists = tree.query_ball_point(
        anchor_xyz, cfg.radius * (1.0 + _TREE_SLACK) + _TREE_SLACK
    )
    m = anchor_xyz.shape[0]
    indices = np.empty((m, cfg.k_max), dtype=np.int64)
    raw = np.empty((m, cfg.k_max), dtype=np.float64)
    pad_mask = np.zeros((m, cfg.k_max), dtype=bool)
    for row, candidates in enumerate(candidate_lists):
        candidates = np.sort(np.asarray(candidates, dtype=np.int64))
        dist = np.sqrt(squared_distances_to(xyz[candidates], anchor_xyz[row]))
        keep = dist <= cfg.radius
        candidates, dist = candidates[keep][: cfg.k_max], dist[keep][: cfg.k_max]
        count = len(candidates)
        indices[row, :count] = candidates
        raw[row, :count] = dist
        indices[row, count:] = candidates[0]
        raw[row, count:] = dist[0]
        pad_mask[row, count:] = True
    return indices, raw, pad_mask


def ball_query(
    cloud: PointCloud,
    anchors: AnchorSet,
    cfg: BallQueryConfig,
    accelerated: bool = False,
) -> NeighborhoodGrouping:
    """
    Groups, for each anchor, the first `k_max` points (ascending index) lying
    within distance `radius` of it, boundary included.

    The anchor itself always qualifies at distance 0, so every row holds at
    least one real neighbour. Rows with fewer than k_max qualifying points are
    padded with the first qualifying index, flagged in `pad_mask`, carrying
    that point's distance.

    Args:
        cloud (PointCloud): The cloud to query.
        anchors (AnchorSet): Anchor indices into `cloud`.
        cfg (BallQueryConfig): Radius and neighbour cap.
        accelerated (bool): Use a kd-tree candidate search. The result is
            bit-identical to the brute-force scan.

    Returns:
        NeighborhoodGrouping: The (m, k_max) grouping.
    """
    _check_anchors(cloud, anchors)
    xyz = cloud.xyz
    anchor_xyz = xyz[anchors.indices]
    kernel = _ball_query_tree if accelerated else _ball_query_brute
    indices, raw, pad_mask = kernel(xyz, anchor_xyz, cfg)
    return NeighborhoodGrouping(
        anchors=anchors,
        neighbor_indices=indices,
        raw_distances=raw,
        pad_mask=pad_mask,
        radius=float(cfg.radius),
        mode="ball",
    )


def knn_query(cloud: PointCloud, anchors: AnchorSet, k: int) -> NeighborhoodGrouping:
    """
    Groups the k nearest points of each anchor, ties broken by lowest index.

    Raises:
        pc_errors.InvalidRequest: If k is not in [1, n].
    """
    n = len(cloud)
    if k < 1 or k > n:
        raise pc_errors.InvalidRequest(f"Cannot take {k} neighbours from {n} points")
    _check_anchors(cloud, anchors)
    xyz = cloud.xyz
    distances = _pair_distances(xyz, xyz[anchors.indices])
    indices = np.argsort(distances, axis=1, kind="stable")[:, :k].astype(np.int64)
    raw = np.take_along_axis(distances, indices, axis=1)
    return NeighborhoodGrouping(
        anchors=anchors,
        neighbor_indices=indices,
        raw_distances=raw,
        pad_mask=np.zeros_like(indices, dtype=bool),
        radius=None,
        mode="knn",
    )
