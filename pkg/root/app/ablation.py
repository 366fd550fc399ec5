"""
Ablation runners: sequentially adding grouping features and checkpoint
averaging, and raw against radius-normalized distance.

Every variant is trained once per seed and scored on the test split (val
when the dataset has no test clouds) with its best checkpoint.
"""

from typing import Callable, Optional, Sequence

import classifier
import metrics
import pc_errors
import pc_logging
from ablation_report import AblationReport, VariantResult, summarize
from dataset_split import DatasetSplit
from local_features import AugmentMode
from parallel import WorkerPool
from seeded_rng import Rng
from soup import soup_average
from trainer import Recipe, TrainingResult, train

ADDITIVE_TITLE = "Sequentially adding grouping features"
ADDITIVE_VARIANTS = ("base", "+distance", "+directional vectors", "+best-two-average")
DISTANCE_TITLE = "Distance normalization"
DISTANCE_VARIANTS = ("distance", "r-normalized distance")
SOUP_K = 2


def scoring_split(splits: DatasetSplit):
    if splits.test:
        return splits.test
    pc_logging.log_warning("Dataset has no test split; scoring ablations on val")
    return splits.val


def _train_and_score(
    model_config: classifier.ModelConfig,
    splits: DatasetSplit,
    recipe: Recipe,
    seed: int,
    pool: Optional[WorkerPool],
    deterministic: bool,
) -> tuple[TrainingResult, metrics.Metrics]:
    mode = model_config.stages[0].mode.value
    with pc_logging.timed(f"\tTraining mode {mode} with seed {seed}", color=None):
        result = train(model_config, splits, recipe, Rng(seed), pool, deterministic)
    scored = metrics.evaluate(
        result.model, result.store.best.params, scoring_split(splits), pool=pool
    )
    return result, scored


def additive_ablation(
    model_config: classifier.ModelConfig,
    splits: DatasetSplit,
    recipe: Recipe,
    seeds: Sequence[int],
    pool: Optional[WorkerPool] = None,
    deterministic: bool = True,
    on_trained: Optional[Callable[[int, TrainingResult], None]] = None,
) -> AblationReport:
    """
    Rows, in order: base; +distance; +directional vectors (with distance);
    +best-two-average (the previous variant scored with the average of its two
    best checkpoints). Rows report mean and stddev over `seeds`.

    `on_trained` receives (seed, result) for every +directional vectors model.
    """
    if not seeds:
        raise pc_errors.InvalidRequest("An ablation needs at least one seed")
    runs = {name: [] for name in ADDITIVE_VARIANTS}
    for seed in seeds:
        pc_logging.log(f"Additive ablation, seed {seed}", "HEADER")
        _, scored = _train_and_score(
            model_config.with_mode(AugmentMode.BASE), splits, recipe, seed, pool, deterministic
        )
        runs["base"].append(scored)
        _, scored = _train_and_score(
            model_config.with_mode(AugmentMode.DISTANCE), splits, recipe, seed, pool, deterministic
        )
        runs["+distance"].append(scored)
        result, scored = _train_and_score(
            model_config.with_mode(AugmentMode.BOTH), splits, recipe, seed, pool, deterministic
        )
        runs["+directional vectors"].append(scored)
        if on_trained is not None:
            on_trained(seed, result)
        soup = soup_average(result.store, min(SOUP_K, len(result.store)))
        runs["+best-two-average"].append(
            metrics.evaluate(result.model, soup.params, scoring_split(splits), pool=pool)
        )
    return summarize(
        ADDITIVE_TITLE,
        [VariantResult(name, runs[name]) for name in ADDITIVE_VARIANTS],
        with_overall_best=True,
    )


def distance_ablation(
    model_config: classifier.ModelConfig,
    splits: DatasetSplit,
    recipe: Recipe,
    seeds: Sequence[int],
    pool: Optional[WorkerPool] = None,
    deterministic: bool = True,
) -> AblationReport:
    """Raw distance against distance divided by the radius, both in distance mode."""
    if not seeds:
        raise pc_errors.InvalidRequest("An ablation needs at least one seed")
    runs = {name: [] for name in DISTANCE_VARIANTS}
    for seed in seeds:
        pc_logging.log(f"Distance ablation, seed {seed}", "HEADER")
        for name, normalize in zip(DISTANCE_VARIANTS, (False, True)):
            config = model_config.with_mode(AugmentMode.DISTANCE, normalize_distance=normalize)
            _, scored = _train_and_score(config, splits, recipe, seed, pool, deterministic)
            runs[name].append(scored)
    return summarize(
        DISTANCE_TITLE, [VariantResult(name, runs[name]) for name in DISTANCE_VARIANTS]
    )
