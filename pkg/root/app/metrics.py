from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

import classifier
import pc_errors
import pc_logging
from parallel import WorkerPool
from point_cloud import PointCloud
from set_abstraction import StageGeometry


@dataclass(frozen=True)
class ClassRecall:
    class_id: int
    support: int
    correct: int

    @property
    def recall(self) -> Optional[float]:
        return self.correct / self.support if self.support else None


@dataclass(frozen=True)
class Metrics:
    """
    Classification quality on one dataset.

    Attributes:
        overall_accuracy (float): correct / total (OA).
        mean_class_accuracy (float): Unweighted mean recall over classes that
            have at least one sample (mAcc).
        per_class (tuple[ClassRecall, ...]): Support and hits per class id.
        confusion (np.ndarray): (K, K) counts, rows are true classes.
        warnings (tuple[str, ...]): Warning records, e.g. absent classes.
    """

    overall_accuracy: float
    mean_class_accuracy: float
    per_class: tuple[ClassRecall, ...] = ()
    confusion: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))
    warnings: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "oa": self.overall_accuracy,
            "macc": self.mean_class_accuracy,
            "per_class": [
                {"class_id": c.class_id, "support": c.support, "recall": c.recall}
                for c in self.per_class
            ],
            "confusion": self.confusion.tolist(),
            "warnings": list(self.warnings),
        }


def metrics_from_predictions(
    labels: Sequence[int], predictions: Sequence[int], num_classes: int
) -> Metrics:
    """
    Builds OA, mAcc, per-class recall and the confusion matrix.

    Classes with no sample are left out of mAcc and reported as warnings.

    Raises:
        pc_errors.InvalidRequest: If a label or prediction is out of range, or
            the dataset is empty.
    """
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.size == 0:
        raise pc_errors.InvalidRequest("Cannot evaluate an empty dataset")
    if labels.shape != predictions.shape:
        raise pc_errors.ShapeError("Labels and predictions differ in length")
    for name, values in (("label", labels), ("prediction", predictions)):
        if values.min() < 0 or values.max() >= num_classes:
            raise pc_errors.InvalidRequest(
                f"A {name} is out of range for {num_classes} classes"
            )
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    support = confusion.sum(axis=1)
    correct = np.diag(confusion)
    per_class = tuple(
        ClassRecall(c, int(support[c]), int(correct[c])) for c in range(num_classes)
    )
    warnings = []
    for c in range(num_classes):
        if support[c] == 0:
            message = f"Class {c} has no samples and is excluded from mAcc"
            pc_logging.log_warning(message)
            warnings.append(message)
    present = support > 0
    oa = float(np.trace(confusion) / confusion.sum())
    macc = float(np.mean(correct[present] / support[present]))
    return Metrics(oa, macc, per_class, confusion, tuple(warnings))


def _predict(model, cloud, geometry):
    return classifier.predict(model, cloud, geometry=geometry)


def evaluate(
    model: classifier.ClassifierModel,
    params: Optional[classifier.ParameterVector],
    dataset: Sequence[PointCloud],
    geometries: Optional[Sequence[list[StageGeometry]]] = None,
    pool: Optional[WorkerPool] = None,
) -> Metrics:
    """
    Evaluates `params` (or the model's current parameters when None) on a
    labelled dataset. Samples are independent and may run in parallel.
    """
    if params is not None:
        model = model.copy()
        model.load(params)
    pool = pool or WorkerPool(1)
    geometries = geometries or [None] * len(dataset)
    predictions = pool.map(
        _predict, [(model, cloud, geo) for cloud, geo in zip(dataset, geometries)]
    )
    labels = [cloud.label for cloud in dataset]
    return metrics_from_predictions(labels, predictions, model.config.num_classes)


def make_evaluator(
    model: classifier.ClassifierModel,
    dataset: Sequence[PointCloud],
    geometries: Optional[Sequence[list[StageGeometry]]] = None,
    pool: Optional[WorkerPool] = None,
) -> Callable[[classifier.ParameterVector], Metrics]:
    """Binds a dataset so parameter vectors can be scored with one call."""

    def evaluator(params: classifier.ParameterVector) -> Metrics:
        return evaluate(model, params, dataset, geometries, pool)

    return evaluator


def format_metrics(metrics: Metrics, class_names: Optional[Sequence[str]] = None) -> str:
    """Human-readable OA/mAcc line, per-class recall table and confusion matrix."""
    names = list(class_names or [str(c.class_id) for c in metrics.per_class])
    width = max([len(n) for n in names] + [5])
    lines = [
        f"OA {100 * metrics.overall_accuracy:.2f}%  mAcc {100 * metrics.mean_class_accuracy:.2f}%",
        "",
        f"{'class':<{width}}  support  recall",
    ]
    for name, row in zip(names, metrics.per_class):
        recall = "-" if row.recall is None else f"{100 * row.recall:.2f}%"
        lines.append(f"{name:<{width}}  {row.support:>7}  {recall:>6}")
    lines.append("")
    lines.append("confusion (rows = true class)")
    for name, row in zip(names, metrics.confusion):
        lines.append(f"{name:<{width}}  " + " ".join(f"{v:>4}" for v in row))
    return "\n".join(lines)
