from typing import Callable, Optional, Sequence

import numpy as np

import pc_errors
import pc_logging
from ablation_report import AblationReport, VariantResult, summarize
from checkpoint import Checkpoint, CheckpointStore
from classifier import ParameterVector
from metrics import Metrics

DEFAULT_SWEEP = (1, 2, 3, 5, 10, 15)
BASELINE_ROW = "best checkpoint"


def soup_average(
    store: CheckpointStore,
    k: int,
    evaluator: Optional[Callable[[ParameterVector], Metrics]] = None,
) -> Checkpoint:
    """
    Elementwise mean of the parameters of the store's top-k checkpoints.

    Every parameter array is averaged the same way, including any
    normalization statistics. The sum runs in float64 over the checkpoints in
    rank order, so the result does not depend on how they were stored. The
    averaged parameters stay float64; only saving narrows them to the file
    dtype. Metrics are re-evaluated with `evaluator` when given and left as
    None otherwise; they are never averaged.

    Raises:
        pc_errors.InvalidRequest: If k is not in [1, len(store)].
        pc_errors.IncompatibleCheckpoints: If fingerprints or layouts differ.
    """
    chosen = store.top(k)
    chosen.sort(key=Checkpoint.rank_key, reverse=True)
    best = chosen[0]
    for other in chosen[1:]:
        if other.fingerprint != best.fingerprint or not other.params.same_layout(best.params):
            raise pc_errors.IncompatibleCheckpoints(
                f"Cannot average epoch {other.epoch} with epoch {best.epoch}: configs differ"
            )
    total = np.zeros(best.params.values.shape, dtype=np.float64)
    for c in chosen:
        total += c.params.values.astype(np.float64)
    values = total / k
    params = best.params.with_values(values)
    val_oa = val_macc = None
    if evaluator is not None:
        metrics = evaluator(params)
        val_oa, val_macc = metrics.overall_accuracy, metrics.mean_class_accuracy
    pc_logging.log(
        f"Averaged top-{k} checkpoints (epochs {[c.epoch for c in chosen]})", "OKGREEN"
    )
    return Checkpoint(
        params=params,
        epoch=best.epoch,
        val_oa=val_oa,
        val_macc=val_macc,
        fingerprint=best.fingerprint,
        members=tuple(c.epoch for c in chosen),
    )


def soup_sweep(
    store: CheckpointStore,
    ks: Sequence[int],
    evaluator: Callable[[ParameterVector], Metrics],
) -> AblationReport:
    """
    Scores top-k soups for every valid k against the best single checkpoint.

    The first row is the best checkpoint (k = 1); each further row is
    "+ top-k" for k in `ks` with 2 <= k <= len(store), with deltas against the
    first row.
    """
    if len(store) == 0:
        raise pc_errors.InvalidRequest("Cannot sweep an empty checkpoint store")
    variants = [VariantResult(BASELINE_ROW, [evaluator(store.best.params)])]
    for k in sorted(set(ks)):
        if 2 <= k <= len(store):
            soup = soup_average(store, k)
            variants.append(VariantResult(f"+ top-{k}", [evaluator(soup.params)]))
    return summarize("Weight averaging of checkpoints", variants)
