import math
from dataclasses import dataclass
from typing import Sequence

import pc_errors
from point_cloud import PointCloud

TRAIN_FRACTION = 0.70
VAL_FRACTION = 0.15


@dataclass(frozen=True)
class DatasetSplit:
    """
    Labelled train/val/test clouds and the class names behind the ids.
    """

    train: tuple[PointCloud, ...]
    val: tuple[PointCloud, ...]
    test: tuple[PointCloud, ...]
    class_names: tuple[str, ...]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def validate(self) -> None:
        """
        Raises:
            pc_errors.InvalidDataset: If train or val is empty, a label is out
                of range, or a class has no training cloud.
        """
        if not self.train:
            raise pc_errors.InvalidDataset("Training split is empty")
        if not self.val:
            raise pc_errors.InvalidDataset("Validation split is empty")
        for name, clouds in (("train", self.train), ("val", self.val), ("test", self.test)):
            for cloud in clouds:
                if cloud.label is None or not 0 <= cloud.label < self.num_classes:
                    raise pc_errors.InvalidDataset(
                        f"A {name} cloud has label {cloud.label} outside "
                        f"[0, {self.num_classes})"
                    )
        present = {cloud.label for cloud in self.train}
        missing = [self.class_names[c] for c in range(self.num_classes) if c not in present]
        if missing:
            raise pc_errors.InvalidDataset(f"Classes missing from train: {missing}")


def _largest_remainder(ideals: Sequence[float], total: int, caps: Sequence[int], floors: Sequence[int]) -> list[int]:
    counts = [min(max(math.floor(x), lo), cap) for x, lo, cap in zip(ideals, floors, caps)]
    order = sorted(range(len(ideals)), key=lambda i: (-(ideals[i] - math.floor(ideals[i])), i))
    remaining = total - sum(counts)
    while remaining > 0 and any(counts[i] < caps[i] for i in order):
        for i in order:
            if remaining == 0:
                break
            if counts[i] < caps[i]:
                counts[i] += 1
                remaining -= 1
    return counts


def allocate_counts(class_counts: Sequence[int]) -> list[tuple[int, int, int]]:
    """
    Per-class (train, val, test) sizes for a 70/15/15 stratified split.

    Split totals are round(0.70 N) and round(0.15 N), spread over classes by
    largest remainder (ties to the lower class id). Every non-empty class
    keeps at least one training cloud.
    """
    total = sum(class_counts)
    train = _largest_remainder(
        [TRAIN_FRACTION * c for c in class_counts],
        round(TRAIN_FRACTION * total),
        class_counts,
        [1 if c else 0 for c in class_counts],
    )
    val = _largest_remainder(
        [VAL_FRACTION * c for c in class_counts],
        round(VAL_FRACTION * total),
        [c - t for c, t in zip(class_counts, train)],
        [0] * len(class_counts),
    )
    return [(t, v, c - t - v) for c, t, v in zip(class_counts, train, val)]


def stratified_split(
    clouds_by_class: Sequence[Sequence[PointCloud]], class_names: Sequence[str]
) -> DatasetSplit:
    """Splits each class in order: the first clouds train, then val, then test."""
    allocation = allocate_counts([len(c) for c in clouds_by_class])
    train, val, test = [], [], []
    for clouds, (n_train, n_val, _) in zip(clouds_by_class, allocation):
        train.extend(clouds[:n_train])
        val.extend(clouds[n_train : n_train + n_val])
        test.extend(clouds[n_train + n_val :])
    return DatasetSplit(tuple(train), tuple(val), tuple(test), tuple(class_names))
