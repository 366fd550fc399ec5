from typing import Optional

import numpy as np

import pc_errors
from point_cloud import AnchorSet, PointCloud
from seeded_rng import Rng


def squared_distances_to(xyz: np.ndarray, point: np.ndarray) -> np.ndarray:
    """
    Squared Euclidean distance from every row of `xyz` to `point`.

    Components are summed explicitly (dx*dx + dy*dy + dz*dz) so that every
    kernel in the package produces bit-identical values for the same pair.
    """
    diff = xyz - point
    return diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1] + diff[..., 2] * diff[..., 2]


def farthest_point_sample(
    cloud: PointCloud, m: int, rng: Optional[Rng] = None
) -> AnchorSet:
    """
    Greedy farthest point sampling.

    The first anchor is drawn from `rng`, or is index 0 when no rng is given
    (deterministic mode). Every following anchor is the point whose minimum
    distance to the anchors chosen so far is largest; ties go to the lowest
    index.

    Args:
        cloud (PointCloud): Input cloud with n points.
        m (int): Number of anchors, 1 <= m <= n.
        rng (Rng, optional): Stream for the first pick.

    Returns:
        AnchorSet: m unique indices in selection order.

    Raises:
        pc_errors.InvalidRequest: If m is outside [1, n].
    """
    n = len(cloud)
    if m < 1 or m > n:
        raise pc_errors.InvalidRequest(
            f"Cannot sample {m} anchors from a cloud of {n} points"
        )
    xyz = cloud.xyz
    first = 0 if rng is None else int(rng.integers(n))
    chosen = np.empty(m, dtype=np.int64)
    chosen[0] = first
    min_dist = squared_distances_to(xyz, xyz[first])
    # Chosen points sit at distance 0 and are never picked again unless every
    # remaining point coincides with one, which the mask below prevents.
    taken = np.zeros(n, dtype=bool)
    taken[first] = True
    for i in range(1, m):
        candidates = np.where(taken, -1.0, min_dist)
        nxt = int(np.argmax(candidates))
        chosen[i] = nxt
        taken[nxt] = True
        np.minimum(min_dist, squared_distances_to(xyz, xyz[nxt]), out=min_dist)
    return AnchorSet(chosen, n)
