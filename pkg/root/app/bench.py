"""
Wall-time benchmark of the stage pipeline and of the cost of feature
augmentation.

Every measurement is repeated and reported as min and median; the overhead
ratio compares the median stage_forward time with both grouping features
against the base stage.
"""

import statistics
import time
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

import classifier
import pc_errors
import pc_logging
from grouping import ball_query
from local_features import (
    AugmentMode,
    FeatureTensor,
    assemble_features,
    directional_vectors,
    normalized_distance,
)
from point_cloud import PointCloud, normalize_unit_sphere
from sampling import farthest_point_sample
from seeded_rng import Rng
from set_abstraction import SetAbstractionStage, StageConfig, stage_forward

MIN_REPS = 5


class Timing(NamedTuple):
    min: float
    median: float


def time_call(func: Callable[[], object], reps: int) -> Timing:
    """Times `reps` calls of `func` with a monotonic clock, in seconds."""
    samples = []
    for _ in range(reps):
        start = time.perf_counter()
        func()
        samples.append(time.perf_counter() - start)
    return Timing(min(samples), statistics.median(samples))


@dataclass(frozen=True)
class BenchRow:
    n: int
    m: int
    k_max: int
    fps: Timing
    ball_query: Timing
    assembly: Timing
    forward_backward: Timing
    stage_base: Timing
    stage_both: Timing

    @property
    def overhead(self) -> float:
        """(t_both - t_base) / t_base on median stage_forward times."""
        return (self.stage_both.median - self.stage_base.median) / self.stage_base.median

    def to_record(self) -> dict:
        record = {"record": "bench_row", "n": self.n, "m": self.m, "k_max": self.k_max}
        for name in ("fps", "ball_query", "assembly", "forward_backward", "stage_base", "stage_both"):
            timing = getattr(self, name)
            record[f"{name}_min_s"] = timing.min
            record[f"{name}_median_s"] = timing.median
        record["overhead"] = self.overhead
        return record


def bench_size(
    n: int,
    anchors: int,
    radius: float,
    k_max: int,
    lift: Sequence[int],
    reps: int = MIN_REPS,
    seed: int = 0,
) -> BenchRow:
    """Times every pipeline step on one random cloud of `n` points."""
    if reps < MIN_REPS:
        raise pc_errors.InvalidRequest(f"Benchmarks need at least {MIN_REPS} repetitions")
    init_rng, data_rng = Rng(seed).spawn(2)
    cloud = normalize_unit_sphere(PointCloud(data_rng.normal(size=(n, 3))))
    m = min(anchors, n)
    base_config = StageConfig(m, radius, k_max, tuple(lift), AugmentMode.BASE)
    both_config = StageConfig(m, radius, k_max, tuple(lift), AugmentMode.BOTH)
    base_stage = SetAbstractionStage.build(base_config, 0, init_rng)
    both_stage = SetAbstractionStage(both_config, base_stage.lift)

    anchor_set = farthest_point_sample(cloud, m)
    grouping = ball_query(cloud, anchor_set, base_config.ball)
    lifted = FeatureTensor.lifted(
        np.ones((m, grouping.k, base_config.lift[-1]), dtype=np.float32)
    )

    def assemble():
        dv = directional_vectors(cloud, grouping, radius)
        d = normalized_distance(grouping, radius)
        return assemble_features(lifted, dv, d, AugmentMode.BOTH)

    model = classifier.build_model(
        classifier.ModelConfig(num_classes=2, stages=(both_config,)), init_rng
    )
    labelled = cloud.with_label(0)
    row = BenchRow(
        n=n,
        m=m,
        k_max=k_max,
        fps=time_call(lambda: farthest_point_sample(cloud, m), reps),
        ball_query=time_call(lambda: ball_query(cloud, anchor_set, base_config.ball), reps),
        assembly=time_call(assemble, reps),
        forward_backward=time_call(lambda: classifier.backward(model, labelled, 0), reps),
        stage_base=time_call(lambda: stage_forward(base_stage, cloud.xyz), reps),
        stage_both=time_call(lambda: stage_forward(both_stage, cloud.xyz), reps),
    )
    pc_logging.log_debug(f"\tBenchmarked n={n}: overhead {100 * row.overhead:+.1f}%")
    return row


def run_bench(
    sizes: Sequence[int],
    anchors: int,
    radius: float,
    k_max: int,
    lift: Sequence[int],
    reps: int = MIN_REPS,
    seed: int = 0,
) -> list[BenchRow]:
    if not sizes or min(sizes) < 1:
        raise pc_errors.InvalidRequest("Benchmark sizes must be positive")
    return [bench_size(n, anchors, radius, k_max, lift, reps, seed) for n in sizes]


def render_bench(rows: Sequence[BenchRow]) -> str:
    """Milliseconds as median (min) per step, plus the augmentation overhead."""
    header = ("n", "m", "k", "fps", "ball query", "assembly", "fwd+bwd", "stage base", "stage both", "overhead")
    body = [
        (
            str(r.n),
            str(r.m),
            str(r.k_max),
            *(
                f"{1e3 * t.median:.2f} ({1e3 * t.min:.2f})"
                for t in (r.fps, r.ball_query, r.assembly, r.forward_backward, r.stage_base, r.stage_both)
            ),
            f"{100 * r.overhead:+.1f}%",
        )
        for r in rows
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = [" | ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("-+-".join("-" * w for w in widths))
    lines.extend(" | ".join(c.rjust(w) for c, w in zip(row, widths)) for row in body)
    return "\n".join(lines)
