"""
Mini-batch training of the set abstraction classifier.

Each epoch shuffles the training split, perturbs every training cloud with
the recipe's transform, averages per-sample gradients over each batch,
steps the optimizer on a cosine learning-rate schedule, scores the
validation split and offers the parameters to a top-k checkpoint store.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

import classifier
import pc_errors
import pc_logging
from checkpoint import DEFAULT_CAPACITY, Checkpoint, CheckpointStore
from dataset_split import DatasetSplit
from metrics import make_evaluator
from optimizers import cosine_lr, make_optimizer
from parallel import WorkerPool
from seeded_rng import Rng
from transforms import TrainTransform, apply_transform


@dataclass(frozen=True)
class Recipe:
    """
    Optimization settings.

    Attributes:
        optimizer (str): "adamw" or "sgd" (with momentum).
        lr (float): Learning rate at epoch 1.
        lr_min (float): Learning rate reached at the last epoch.
        momentum (float): SGD momentum.
        weight_decay (float): L2 (SGD) or decoupled (AdamW) weight decay.
        epochs (int): Number of passes over the training split.
        batch_size (int): Clouds per optimizer step.
        keep_top (int): Capacity of the checkpoint store.
        transform (TrainTransform): Per-epoch perturbation of training clouds.
    """

    optimizer: str = "adamw"
    lr: float = 2e-3
    lr_min: float = 1e-5
    momentum: float = 0.9
    weight_decay: float = 1e-4
    epochs: int = 150
    batch_size: int = 16
    keep_top: int = DEFAULT_CAPACITY
    transform: TrainTransform = field(default_factory=TrainTransform)

    def validate(self) -> None:
        if self.optimizer not in ("adamw", "sgd"):
            raise pc_errors.InvalidConfig(f"Unknown optimizer {self.optimizer!r}")
        if self.lr < 0 or self.lr_min < 0:
            raise pc_errors.InvalidConfig("Learning rates must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise pc_errors.InvalidConfig("epochs and batch_size must be >= 1")
        if not 1 <= self.keep_top <= DEFAULT_CAPACITY:
            raise pc_errors.InvalidConfig(
                f"keep_top must lie in [1, {DEFAULT_CAPACITY}], got {self.keep_top}"
            )
        self.transform.validate()

    def to_dict(self) -> dict:
        return asdict(self)


class EpochRecord(NamedTuple):
    epoch: int
    train_loss: float
    val_oa: float
    val_macc: float
    lr: float

    def to_record(self) -> dict:
        return {"record": "epoch", **self._asdict()}


class TrainingResult(NamedTuple):
    model: classifier.ClassifierModel
    store: CheckpointStore
    history: list[EpochRecord]


def _sample_gradient(model, cloud, geometry, rng):
    loss, grads = classifier.backward(model, cloud, cloud.label, rng=rng, geometry=geometry)
    return loss, grads.values


def _check_splits(model_config: classifier.ModelConfig, splits: DatasetSplit) -> None:
    if not splits.train or not splits.val:
        raise pc_errors.InvalidDataset("Training needs non-empty train and val splits")
    for cloud in (*splits.train, *splits.val):
        if cloud.label is None or not 0 <= cloud.label < model_config.num_classes:
            raise pc_errors.InvalidDataset(
                f"Label {cloud.label} is incompatible with {model_config.num_classes} classes"
            )


def train(
    model_config: classifier.ModelConfig,
    splits: DatasetSplit,
    recipe: Recipe,
    rng: Rng,
    pool: Optional[WorkerPool] = None,
    deterministic: bool = True,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
    dtype=np.float32,
) -> TrainingResult:
    """
    Trains a freshly initialized model.

    The rng is split into independent streams for initialization, shuffling
    and anchor sampling, so a seed fully determines the run. With
    `deterministic`, per-sample gradients are summed in batch order whatever
    the worker count; otherwise they are summed as workers finish.

    Raises:
        pc_errors.InvalidDataset: If train or val is empty or a label does not
            fit the model.
        pc_errors.DivergedError: If a batch produces a non-finite loss.
    """
    recipe.validate()
    _check_splits(model_config, splits)
    pool = pool or WorkerPool(1)
    init_rng, shuffle_rng, fps_rng = rng.spawn(3)
    model = classifier.build_model(model_config, init_rng, dtype)
    params = model.flatten()
    optimizer = make_optimizer(
        recipe.optimizer, len(params), recipe.momentum, recipe.weight_decay
    )
    store = CheckpointStore(recipe.keep_top)
    fingerprint = model_config.fingerprint()

    # Val anchors are fixed for the whole run so epochs are comparable.
    val_streams = fps_rng.spawn(len(splits.val))
    val_geometry = [
        classifier.compute_geometry(model_config, cloud, stream)
        for cloud, stream in zip(splits.val, val_streams)
    ]
    # Transformed clouds change every epoch, so only untransformed runs can
    # reuse geometry.
    transforming = recipe.transform.enabled
    train_geometry = None
    if not model_config.fps_random_start and not transforming:
        train_geometry = [
            classifier.compute_geometry(model_config, cloud) for cloud in splits.train
        ]
    evaluator = make_evaluator(model, splits.val, val_geometry, pool)

    history = []
    n_train = len(splits.train)
    for epoch in range(1, recipe.epochs + 1):
        lr = cosine_lr(recipe.lr, recipe.lr_min, epoch, recipe.epochs)
        order = shuffle_rng.permutation(n_train)
        epoch_loss = 0.0
        for start in range(0, n_train, recipe.batch_size):
            batch = order[start : start + recipe.batch_size]
            streams = (
                fps_rng.spawn(len(batch))
                if train_geometry is None
                else [None] * len(batch)
            )
            clouds = [splits.train[i] for i in batch]
            if transforming:
                clouds = [
                    apply_transform(cloud, recipe.transform, stream)
                    for cloud, stream in zip(clouds, shuffle_rng.spawn(len(batch)))
                ]
            args = [
                (
                    model,
                    cloud,
                    None if train_geometry is None else train_geometry[i],
                    stream,
                )
                for i, cloud, stream in zip(batch, clouds, streams)
            ]
            results = (
                pool.map(_sample_gradient, args)
                if deterministic
                else pool.unordered(_sample_gradient, args)
            )
            batch_loss = 0.0
            grad = np.zeros(len(params), dtype=np.float64)
            for loss, sample_grad in results:
                batch_loss += loss
                grad += sample_grad
            if not math.isfinite(batch_loss) or not np.all(np.isfinite(grad)):
                pc_logging.log_failure(f"Non-finite loss at epoch {epoch}")
                raise pc_errors.DivergedError(epoch, batch_loss)
            epoch_loss += batch_loss
            params = params.with_values(optimizer.step(params.values, grad / len(batch), lr))
            model.load(params)

        metrics = evaluator(params)
        record = EpochRecord(
            epoch=epoch,
            train_loss=epoch_loss / n_train,
            val_oa=metrics.overall_accuracy,
            val_macc=metrics.mean_class_accuracy,
            lr=lr,
        )
        history.append(record)
        kept = store.offer(
            Checkpoint(params, epoch, record.val_oa, record.val_macc, fingerprint)
        )
        pc_logging.log_debug(
            f"\tEpoch {epoch}/{recipe.epochs}: loss {record.train_loss:.4f} "
            f"val OA {100 * record.val_oa:.2f}% mAcc {100 * record.val_macc:.2f}% "
            f"lr {lr:.2e}{' (kept)' if kept else ''}"
        )
        if on_epoch is not None:
            on_epoch(record)

    best = store.best
    pc_logging.log(
        f"Training finished: best val OA {100 * best.val_oa:.2f}% at epoch {best.epoch}",
        "OKGREEN",
    )
    return TrainingResult(model, store, history)
