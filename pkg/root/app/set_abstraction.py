from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

import pc_errors
from grouping import BallQueryConfig, NeighborhoodGrouping, ball_query, knn_query
from layers import (
    Activation,
    DenseCache,
    DenseLayer,
    max_pool,
    max_pool_backward,
    mlp_backward,
    mlp_forward,
)
from local_features import (
    AugmentMode,
    DirectionalVectors,
    FeatureTensor,
    NormalizedDistances,
    assemble_features,
    directional_vectors,
    normalized_distance,
)
from point_cloud import AnchorSet, PointCloud
from sampling import farthest_point_sample
from seeded_rng import Rng


@dataclass(frozen=True)
class StageConfig:
    """
    Shape of one set abstraction stage.

    Attributes:
        anchors (int): Anchors m produced by farthest point sampling.
        radius (float): Ball radius (also the feature normalizer).
        k_max (int): Neighbours per anchor.
        lift (tuple[int, ...]): Hidden widths of the per-neighbour MLP; the
            last one is the stage channel count C0.
        mode (AugmentMode): Which grouping features are appended.
        query (str): "ball" or "knn".
        normalize_distance (bool): Divide the distance feature by the radius.
    """

    anchors: int
    radius: float
    k_max: int
    lift: tuple[int, ...]
    mode: AugmentMode = AugmentMode.BASE
    query: str = "ball"
    normalize_distance: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", AugmentMode(self.mode))
        object.__setattr__(self, "lift", tuple(int(w) for w in self.lift))
        if not self.lift:
            raise pc_errors.InvalidConfig("A stage needs at least one lift layer")
        if self.query not in ("ball", "knn"):
            raise pc_errors.InvalidConfig(f"Unknown query kind {self.query!r}")
        if self.anchors < 1:
            raise pc_errors.InvalidConfig("A stage needs at least one anchor")
        BallQueryConfig(self.radius, self.k_max)

    @property
    def ball(self) -> BallQueryConfig:
        return BallQueryConfig(self.radius, self.k_max)

    @property
    def out_width(self) -> int:
        return self.lift[-1] + self.mode.extra_channels


@dataclass
class SetAbstractionStage:
    config: StageConfig
    lift: list[DenseLayer] = field(default_factory=list)

    @classmethod
    def build(
        cls, config: StageConfig, in_features: int, rng: Rng, dtype=np.float32
    ) -> "SetAbstractionStage":
        """
        Creates the per-neighbour lift. Its input is the 3 dv channels, plus the
        previous stage's pooled features when `in_features` > 0. Later stages
        therefore lift [dv | pooled features]: offsets relative to the anchor,
        never absolute anchor coordinates.
        """
        widths = [3 + in_features, *config.lift]
        layers = [
            DenseLayer.he_init(widths[i], widths[i + 1], Activation.RELU, rng, dtype)
            for i in range(len(config.lift))
        ]
        return cls(config, layers)

    @property
    def in_features(self) -> int:
        return self.lift[0].in_width - 3


@dataclass(frozen=True)
class StageGeometry:
    """
    Parameter-free part of a stage: anchors, grouping and the two grouping
    features. Depends only on coordinates, so it can be cached per cloud.
    """

    anchors: AnchorSet
    anchor_xyz: np.ndarray
    grouping: NeighborhoodGrouping
    dv: np.ndarray
    d: np.ndarray


class StageCache(NamedTuple):
    geometry: StageGeometry
    lift_caches: list[DenseCache]
    assembled_shape: tuple
    argmax: np.ndarray
    prev_points: int
    has_features: bool


class StageOutput(NamedTuple):
    anchors: AnchorSet
    anchor_xyz: np.ndarray
    pooled: np.ndarray
    cache: StageCache


def stage_geometry(
    config: StageConfig,
    xyz: np.ndarray,
    rng: Optional[Rng] = None,
    anchors: Optional[AnchorSet] = None,
    accelerated: bool = False,
) -> StageGeometry:
    """
    Samples anchors (unless given), queries neighbourhoods and computes the
    directional vectors and distances for one stage.
    """
    cloud = PointCloud(xyz)
    m = min(config.anchors, len(cloud))
    if anchors is None:
        anchors = farthest_point_sample(cloud, m, rng)
    if config.query == "knn":
        grouping = knn_query(cloud, anchors, min(config.k_max, len(cloud)))
        scale = None
    else:
        grouping = ball_query(cloud, anchors, config.ball, accelerated=accelerated)
        scale = config.radius
    dv = directional_vectors(cloud, grouping, scale).dv
    d = normalized_distance(grouping, scale, normalize=config.normalize_distance).d
    return StageGeometry(anchors, cloud.xyz[anchors.indices], grouping, dv, d)


def stage_forward(
    stage: SetAbstractionStage,
    xyz: np.ndarray,
    features: Optional[np.ndarray] = None,
    rng: Optional[Rng] = None,
    geometry: Optional[StageGeometry] = None,
) -> StageOutput:
    """
    Runs FPS, grouping, feature computation, the per-neighbour lift, feature
    augmentation and the per-anchor max-pool.

    Args:
        stage (SetAbstractionStage): Stage parameters.
        xyz (np.ndarray): (n, 3) coordinates of the stage input points.
        features (np.ndarray, optional): (n, C) pooled features of the previous
            stage; None for the first stage.
        rng (Rng, optional): FPS start stream; None means start at index 0.
        geometry (StageGeometry, optional): Precomputed geometry to reuse.

    Returns:
        StageOutput: Anchors, their coordinates, the (m, C0 + extra) pooled
            features and the cache needed by `stage_backward`.
    """
    if geometry is None:
        geometry = stage_geometry(stage.config, xyz, rng)
    dtype = stage.lift[0].weight.dtype
    dv = geometry.dv.astype(dtype)
    idx = geometry.grouping.neighbor_indices
    if features is None:
        if stage.in_features:
            raise pc_errors.ShapeError("Stage expects input features but got none")
        lift_in = dv
    else:
        if features.shape[-1] != stage.in_features:
            raise pc_errors.ShapeError(
                f"Stage expects {stage.in_features} feature channels, got {features.shape[-1]}"
            )
        lift_in = np.concatenate([dv, features.astype(dtype)[idx]], axis=-1)
    lifted, lift_caches = mlp_forward(stage.lift, lift_in)
    assembled = assemble_features(
        FeatureTensor.lifted(lifted),
        DirectionalVectors(geometry.dv),
        NormalizedDistances(geometry.d),
        stage.config.mode,
    ).values
    pooled, argmax = max_pool(assembled, axis=1)
    cache = StageCache(
        geometry=geometry,
        lift_caches=lift_caches,
        assembled_shape=assembled.shape,
        argmax=argmax,
        prev_points=xyz.shape[0],
        has_features=features is not None,
    )
    return StageOutput(geometry.anchors, geometry.anchor_xyz, pooled, cache)


def stage_backward(
    stage: SetAbstractionStage, cache: StageCache, grad_pooled: np.ndarray
) -> tuple[list[tuple[np.ndarray, np.ndarray]], Optional[np.ndarray]]:
    """
    Back-propagates through pooling and the lift.

    The dv and d blocks are functions of coordinates only and receive no
    gradient. Returns per-layer (grad_weight, grad_bias) and the gradient with
    respect to the previous stage's features (None for the first stage).
    """
    grad_assembled = max_pool_backward(
        grad_pooled, cache.argmax, cache.assembled_shape, axis=1
    )
    c0 = stage.config.lift[-1]
    grad_lift_in, layer_grads = mlp_backward(
        stage.lift, cache.lift_caches, grad_assembled[..., :c0]
    )
    if not cache.has_features:
        return layer_grads, None
    grad_features = np.zeros(
        (cache.prev_points, stage.in_features), dtype=grad_lift_in.dtype
    )
    np.add.at(
        grad_features,
        cache.geometry.grouping.neighbor_indices,
        grad_lift_in[..., 3:],
    )
    return layer_grads, grad_features
