import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

import pc_errors
from layers import (
    Activation,
    DenseCache,
    DenseLayer,
    max_pool,
    max_pool_backward,
    mlp_backward,
    mlp_forward,
)
from local_features import AugmentMode
from point_cloud import AnchorSet, PointCloud
from seeded_rng import Rng
from set_abstraction import (
    SetAbstractionStage,
    StageCache,
    StageConfig,
    StageGeometry,
    stage_backward,
    stage_forward,
    stage_geometry,
)


@dataclass(frozen=True)
class ModelConfig:
    """
    Architecture of the set abstraction classifier.

    Attributes:
        num_classes (int): Number of output logits.
        stages (tuple[StageConfig, ...]): Stages in order.
        head (tuple[int, ...]): Hidden widths of the head; a final
            num_classes layer without activation is always appended.
        fps_random_start (bool): Draw the first FPS anchor from the rng
            instead of using index 0. Geometry is cacheable only when off.
    """

    num_classes: int
    stages: tuple[StageConfig, ...]
    head: tuple[int, ...] = (32,)
    fps_random_start: bool = False

    def with_mode(self, mode: AugmentMode, normalize_distance: Optional[bool] = None):
        """Copy with every stage switched to `mode` (and distance normalization)."""
        stages = tuple(
            replace(
                s,
                mode=AugmentMode(mode),
                normalize_distance=(
                    s.normalize_distance if normalize_distance is None else normalize_distance
                ),
            )
            for s in self.stages
        )
        return replace(self, stages=stages)

    def to_dict(self) -> dict:
        data = asdict(self)
        for stage in data["stages"]:
            stage["mode"] = AugmentMode(stage["mode"]).value
            stage["lift"] = list(stage["lift"])
        data["stages"] = list(data["stages"])
        data["head"] = list(data["head"])
        return data

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_stages(mode: AugmentMode = AugmentMode.BASE) -> tuple[StageConfig, ...]:
    """Two stages: 128 anchors at r=0.2 and 32 anchors at r=0.4, 16 neighbours each."""
    return (
        StageConfig(anchors=128, radius=0.2, k_max=16, lift=(32, 32), mode=mode),
        StageConfig(anchors=32, radius=0.4, k_max=16, lift=(64, 64), mode=mode),
    )


@dataclass(frozen=True)
class ParameterVector:
    """
    Flattened view of every parameter array of a model, in declaration order.
    """

    names: tuple[str, ...]
    shapes: tuple[tuple[int, ...], ...]
    values: np.ndarray

    def __post_init__(self):
        expected = sum(int(np.prod(s)) for s in self.shapes)
        if self.values.ndim != 1 or self.values.size != expected:
            raise pc_errors.ShapeError(
                f"Parameter vector holds {self.values.size} values, layout needs {expected}"
            )

    def __len__(self) -> int:
        return self.values.size

    def same_layout(self, other: "ParameterVector") -> bool:
        return self.names == other.names and self.shapes == other.shapes

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        offset = 0
        for name, shape in zip(self.names, self.shapes):
            size = int(np.prod(shape))
            out.append((name, self.values[offset : offset + size].reshape(shape)))
            offset += size
        return out

    def with_values(self, values: np.ndarray) -> "ParameterVector":
        return ParameterVector(self.names, self.shapes, np.asarray(values))


@dataclass
class ClassifierModel:
    config: ModelConfig
    stages: list[SetAbstractionStage]
    head: list[DenseLayer]
    dtype: type = field(default=np.float32)

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        params = []
        for s, stage in enumerate(self.stages):
            for i, layer in enumerate(stage.lift):
                params.append((f"stages.{s}.lift.{i}.weight", layer.weight))
                params.append((f"stages.{s}.lift.{i}.bias", layer.bias))
        for i, layer in enumerate(self.head):
            params.append((f"head.{i}.weight", layer.weight))
            params.append((f"head.{i}.bias", layer.bias))
        return params

    def flatten(self) -> ParameterVector:
        named = self.named_parameters()
        return ParameterVector(
            names=tuple(n for n, _ in named),
            shapes=tuple(a.shape for _, a in named),
            values=np.concatenate([a.reshape(-1) for _, a in named]),
        )

    def load(self, params: ParameterVector) -> None:
        """Copies `params` into this model's arrays in place."""
        template = self.flatten()
        if not template.same_layout(params):
            raise pc_errors.ShapeError("Parameter vector layout does not match the model")
        for (_, target), (_, source) in zip(self.named_parameters(), params.arrays()):
            target[...] = source

    def copy(self) -> "ClassifierModel":
        stages = [
            SetAbstractionStage(
                s.config,
                [DenseLayer(l.weight.copy(), l.bias.copy(), l.activation) for l in s.lift],
            )
            for s in self.stages
        ]
        head = [DenseLayer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.head]
        return ClassifierModel(self.config, stages, head, self.dtype)


def build_model(config: ModelConfig, rng: Rng, dtype=np.float32) -> ClassifierModel:
    """
    He-initialized model. Stage i+1 lifts [dv | pooled features of stage i];
    the head consumes the global max-pool of the last stage.
    """
    if not config.stages:
        raise pc_errors.InvalidConfig("A model needs at least one stage")
    if config.num_classes < 2:
        raise pc_errors.InvalidConfig("A classifier needs at least two classes")
    stages = []
    in_features = 0
    for stage_config in config.stages:
        stages.append(SetAbstractionStage.build(stage_config, in_features, rng, dtype))
        in_features = stage_config.out_width
    widths = [in_features, *config.head, config.num_classes]
    head = [
        DenseLayer.he_init(
            widths[i],
            widths[i + 1],
            Activation.RELU if i < len(widths) - 2 else Activation.NONE,
            rng,
            dtype,
        )
        for i in range(len(widths) - 1)
    ]
    return ClassifierModel(config, stages, head, dtype)


def compute_geometry(
    model_config: ModelConfig,
    cloud: PointCloud,
    rng: Optional[Rng] = None,
    anchors: Optional[Sequence[Optional[AnchorSet]]] = None,
    accelerated: bool = False,
) -> list[StageGeometry]:
    """
    Geometry of every stage for `cloud`. `anchors` pins the anchor set of any
    stage (None entries are sampled).
    """
    start_rng = rng if model_config.fps_random_start else None
    geometry = []
    xyz = cloud.xyz
    for i, stage_config in enumerate(model_config.stages):
        pinned = anchors[i] if anchors is not None else None
        geo = stage_geometry(stage_config, xyz, start_rng, pinned, accelerated)
        geometry.append(geo)
        xyz = geo.anchor_xyz
    return geometry


class ForwardCache(NamedTuple):
    stage_caches: list[StageCache]
    global_shape: tuple
    global_argmax: np.ndarray
    head_caches: list[DenseCache]


class ForwardResult(NamedTuple):
    logits: np.ndarray
    cache: ForwardCache


def forward(
    model: ClassifierModel,
    cloud: PointCloud,
    rng: Optional[Rng] = None,
    geometry: Optional[list[StageGeometry]] = None,
) -> ForwardResult:
    """
    Logits for one cloud. Deterministic given the rng seed, or given the
    precomputed `geometry`.
    """
    if geometry is None:
        geometry = compute_geometry(model.config, cloud, rng)
    if len(geometry) != len(model.stages):
        raise pc_errors.ShapeError("Geometry does not match the number of stages")
    xyz = cloud.xyz
    features = None
    stage_caches = []
    for stage, geo in zip(model.stages, geometry):
        out = stage_forward(stage, xyz, features, geometry=geo)
        stage_caches.append(out.cache)
        xyz, features = out.anchor_xyz, out.pooled
    global_feature, global_argmax = max_pool(features, axis=0)
    logits, head_caches = mlp_forward(model.head, global_feature)
    cache = ForwardCache(stage_caches, features.shape, global_argmax, head_caches)
    return ForwardResult(logits, cache)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.asarray(logits, dtype=np.float64) - np.max(logits)
    exp = np.exp(shifted)
    return exp / exp.sum()


def softmax_cross_entropy(logits: np.ndarray, target: int) -> float:
    """
    Negative log-likelihood of `target` under softmax(logits), computed with
    max subtraction in float64.

    Raises:
        pc_errors.InvalidRequest: If target is not a valid class index.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= int(target) < logits.shape[-1]:
        raise pc_errors.InvalidRequest(
            f"Target {target} out of range for {logits.shape[-1]} classes"
        )
    shifted = logits - logits.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[int(target)])


def backward(
    model: ClassifierModel,
    cloud: PointCloud,
    target: int,
    rng: Optional[Rng] = None,
    geometry: Optional[list[StageGeometry]] = None,
) -> tuple[float, ParameterVector]:
    """
    Loss and exact gradient of softmax cross-entropy with respect to every
    parameter, in the model's flatten order.
    """
    logits, cache = forward(model, cloud, rng, geometry)
    loss = softmax_cross_entropy(logits, target)
    grad_logits = softmax(logits)
    grad_logits[int(target)] -= 1.0
    grad_logits = grad_logits.astype(model.dtype)

    grad_global, head_grads = mlp_backward(model.head, cache.head_caches, grad_logits)
    grad_features = max_pool_backward(
        grad_global, cache.global_argmax, cache.global_shape, axis=0
    )
    stage_grads = [None] * len(model.stages)
    for i in reversed(range(len(model.stages))):
        stage_grads[i], grad_features = stage_backward(
            model.stages[i], cache.stage_caches[i], grad_features
        )

    flat = []
    for layer_grads in stage_grads:
        for grad_w, grad_b in layer_grads:
            flat.extend([grad_w.reshape(-1), grad_b.reshape(-1)])
    for grad_w, grad_b in head_grads:
        flat.extend([grad_w.reshape(-1), grad_b.reshape(-1)])
    template = model.flatten()
    return loss, template.with_values(np.concatenate(flat).astype(model.dtype))


def predict(
    model: ClassifierModel,
    cloud: PointCloud,
    rng: Optional[Rng] = None,
    geometry: Optional[list[StageGeometry]] = None,
) -> int:
    """Arg-max class; ties resolve to the lowest class id."""
    return int(np.argmax(forward(model, cloud, rng, geometry).logits))


def activation_signature(
    model: ClassifierModel,
    cloud: PointCloud,
    geometry: Optional[list[StageGeometry]] = None,
) -> tuple:
    """
    ReLU on/off masks and pooling winners of one forward pass. Two parameter
    settings with equal signatures lie on the same linear piece of the network.
    """
    _, cache = forward(model, cloud, geometry=geometry)
    parts = []
    for stage_cache in cache.stage_caches:
        parts.extend((c.pre_activation > 0).tobytes() for c in stage_cache.lift_caches)
        parts.append(stage_cache.argmax.tobytes())
    parts.append(cache.global_argmax.tobytes())
    parts.extend(
        (c.pre_activation > 0).tobytes()
        for layer, c in zip(model.head, cache.head_caches)
        if layer.activation is Activation.RELU
    )
    return tuple(parts)
