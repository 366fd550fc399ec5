"""
Command-line entry point.

    python pointcls.py --config run.toml train [--seed N] [--epochs N] ...
    python pointcls.py --config run.toml eval [--checkpoint FILE]
    python pointcls.py --config run.toml ablate
    python pointcls.py --config run.toml soup [--checkpoints DIR] [-k K] [--sweep]
    python pointcls.py --config run.toml extract [--cloud FILE | --index I]
    python pointcls.py --config run.toml bench [--sizes N ...]

Exit codes: 0 success, 2 configuration or usage error, 3 numeric failure,
4 incompatible artifacts.
"""

import argparse
import os
import signal
import sys
from typing import Optional

import ablation
import ablation_report
import bench
import checkpoint
import classifier
import dataset_dir
import metrics
import notification_wrapper
import pc_errors
import pc_logging
import pushbullet_notification
import records
import run_config
import soup
import system_utils
import trainer
from local_features import AugmentMode
from parallel import WorkerPool
from seeded_rng import Rng
from set_abstraction import stage_geometry

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_INCOMPATIBLE = 4


def parse_arguments(argv: Optional[list[str]] = None) -> argparse.Namespace:
    """
    Parses command-line arguments. Flags shared by every command override the
    matching config values; unset flags leave the config untouched.
    """
    overrides = argparse.ArgumentParser(add_help=False)
    overrides.add_argument("--seed", type=int, help="Override run.seed")
    overrides.add_argument("--epochs", type=int, help="Override recipe.epochs")
    overrides.add_argument("--output-dir", help="Override run.output_dir")
    overrides.add_argument("--workers", type=int, help="Override run.workers")
    overrides.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Sum gradients in fixed order",
    )
    overrides.add_argument(
        "--mode", choices=[m.value for m in AugmentMode], help="Override run.mode"
    )

    parser = argparse.ArgumentParser(description="Point-cloud classification with grouping features.")
    parser.add_argument(
        "--config",
        default="../config.default/config.toml",
        help="The location of the config.toml file",
    )
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("train", parents=[overrides], help="Train and keep the best checkpoints")
    evaluate = commands.add_parser("eval", parents=[overrides], help="Evaluate a checkpoint on the test split")
    evaluate.add_argument("--checkpoint", help="Checkpoint file; defaults to the best stored one")
    commands.add_parser("ablate", parents=[overrides], help="Run the feature and soup ablations")
    soup_cmd = commands.add_parser("soup", parents=[overrides], help="Average the top-k checkpoints")
    soup_cmd.add_argument("--checkpoints", help="Checkpoint directory; defaults to <output>/checkpoints")
    soup_cmd.add_argument("-k", type=int, help="Override soup.k")
    soup_cmd.add_argument("--sweep", action="store_true", help="Also score every k of soup.sweep")
    extract = commands.add_parser("extract", parents=[overrides], help="Dump stage-1 grouping features")
    extract.add_argument("--cloud", help="OFF/XYZ file; defaults to a cloud of the configured dataset")
    extract.add_argument("--index", type=int, default=0, help="Test cloud index when --cloud is unset")
    extract.add_argument("--output", help="JSONL file; defaults to <output>/extract.jsonl")
    bench_cmd = commands.add_parser("bench", parents=[overrides], help="Time the stage pipeline")
    bench_cmd.add_argument("--sizes", type=int, nargs="+", help="Override bench.sizes")
    return parser.parse_args(argv)


def signal_handler(pool: WorkerPool):
    """Creates a SIGTERM handler that terminates the worker pool."""

    def handler(sig, frame):
        pc_logging.log_failure("Terminating worker pool...")
        pool.terminate()
        sys.exit(1)

    return handler


def build_notifier(config_path: str) -> notification_wrapper.NotificationWrapper:
    notifier = notification_wrapper.NotificationWrapper()
    if os.path.isfile(config_path):
        notifier.add_notification_worker(
            pushbullet_notification.PushbulletNotification(config_path)
        )
    return notifier


def output_dir(config: run_config.RunConfig) -> str:
    path = system_utils.resolve_output_dir(config.run.output_dir, config.run.name)
    os.makedirs(path, exist_ok=True)
    return path


def _base_summary(config: run_config.RunConfig, command: str) -> dict:
    return {
        "command": command,
        "config_fingerprint": config.fingerprint(),
        "seed": config.run.seed,
        "mode": config.run.mode,
    }


def cmd_train(config: run_config.RunConfig, args, notifier) -> int:
    splits = config.load_dataset()
    model_config = config.model_config(splits.num_classes)
    out = output_dir(config)
    with WorkerPool(config.run.workers) as pool:
        signal.signal(signal.SIGTERM, signal_handler(pool))
        with records.RecordWriter(os.path.join(out, "metrics.jsonl")) as writer:
            result = trainer.train(
                model_config,
                splits,
                config.recipe,
                Rng(config.run.seed),
                pool,
                config.run.deterministic,
                on_epoch=lambda record: writer.write(record.to_record()),
            )
        paths = result.store.save(os.path.join(out, "checkpoints"))
        best = result.store.best
        test = None
        if splits.test:
            test = metrics.evaluate(result.model, best.params, splits.test, pool=pool)
    summary = {
        **_base_summary(config, "train"),
        "model_fingerprint": model_config.fingerprint(),
        "epochs": config.recipe.epochs,
        "best_epoch": best.epoch,
        "val_oa": best.val_oa,
        "val_macc": best.val_macc,
        "test_oa": None if test is None else test.overall_accuracy,
        "test_macc": None if test is None else test.mean_class_accuracy,
        "checkpoints": [os.path.basename(p) for p in paths],
    }
    records.write_summary(os.path.join(out, "summary.json"), summary)
    message = f"Best val OA {100 * best.val_oa:.2f}% at epoch {best.epoch}"
    if test is not None:
        message += f", test OA {100 * test.overall_accuracy:.2f}%"
    pc_logging.log(message, "OKGREEN")
    notifier.send_notification("Training finished", message, config.run.name)
    return EXIT_OK


def _check_fingerprint(expected: str, found: str, what: str) -> None:
    if expected != found:
        raise pc_errors.IncompatibleCheckpoints(
            f"{what} was trained with a different model config "
            f"({found[:12]} != {expected[:12]})"
        )


def cmd_eval(config: run_config.RunConfig, args, notifier) -> int:
    out = output_dir(config)
    if args.checkpoint:
        ckpt = checkpoint.load_checkpoint(args.checkpoint)
    else:
        ckpt = checkpoint.CheckpointStore.load(os.path.join(out, "checkpoints")).best
    splits = config.load_dataset()
    model_config = config.model_config(splits.num_classes)
    _check_fingerprint(model_config.fingerprint(), ckpt.fingerprint, "Checkpoint")
    model = classifier.build_model(model_config, Rng(config.run.seed))
    with WorkerPool(config.run.workers) as pool:
        signal.signal(signal.SIGTERM, signal_handler(pool))
        result = metrics.evaluate(model, ckpt.params, ablation.scoring_split(splits), pool=pool)
    print(metrics.format_metrics(result, splits.class_names))
    summary = {**_base_summary(config, "eval"), "epoch": ckpt.epoch, **result.to_record()}
    records.write_summary(os.path.join(out, "eval.json"), summary)
    return EXIT_OK


def _write_reports(out: str, reports: list) -> None:
    with records.RecordWriter(os.path.join(out, "ablation.jsonl")) as writer:
        for report in reports:
            writer.write_all(ablation_report.report_records(report))
    tables = "\n\n".join(ablation_report.render_table(r) for r in reports)
    with open(os.path.join(out, "ablation.txt"), "w", encoding="utf-8") as file:
        file.write(tables + "\n")
    print(tables)


def cmd_ablate(config: run_config.RunConfig, args, notifier) -> int:
    splits = config.load_dataset()
    model_config = config.model_config(splits.num_classes)
    seeds = list(config.ablation.seeds)
    if args.seed is not None:
        seeds = [config.run.seed]
    out = output_dir(config)
    reports = []
    with WorkerPool(config.run.workers) as pool:
        signal.signal(signal.SIGTERM, signal_handler(pool))
        deterministic = config.run.deterministic
        trained = {}
        reports.append(
            ablation.additive_ablation(
                model_config,
                splits,
                config.recipe,
                seeds,
                pool,
                deterministic,
                on_trained=trained.setdefault,
            )
        )
        if config.ablation.soup_sweep:
            result = trained[seeds[0]]
            evaluator = metrics.make_evaluator(result.model, splits.val, pool=pool)
            reports.append(soup.soup_sweep(result.store, config.soup.sweep, evaluator))
        if config.ablation.distance:
            reports.append(
                ablation.distance_ablation(
                    model_config, splits, config.recipe, seeds, pool, deterministic
                )
            )
    _write_reports(out, reports)
    records.write_summary(
        os.path.join(out, "summary.json"),
        {
            **_base_summary(config, "ablate"),
            "seeds": seeds,
            "reports": [r.title for r in reports],
        },
    )
    notifier.send_notification(
        "Ablation finished", f"{len(reports)} reports over {len(seeds)} seeds", config.run.name
    )
    return EXIT_OK


def cmd_soup(config: run_config.RunConfig, args, notifier) -> int:
    out = output_dir(config)
    directory = args.checkpoints or os.path.join(out, "checkpoints")
    store = checkpoint.CheckpointStore.load(directory)
    k = args.k if args.k is not None else config.soup.k
    averaged = soup.soup_average(store, k)
    splits = config.load_dataset()
    model_config = config.model_config(splits.num_classes)
    _check_fingerprint(model_config.fingerprint(), store.fingerprint, f"Store {directory}")
    model = classifier.build_model(model_config, Rng(config.run.seed))
    with WorkerPool(config.run.workers) as pool:
        signal.signal(signal.SIGTERM, signal_handler(pool))
        val_metrics = metrics.evaluate(model, averaged.params, splits.val, pool=pool)
        averaged = checkpoint.Checkpoint(
            params=averaged.params,
            epoch=averaged.epoch,
            val_oa=val_metrics.overall_accuracy,
            val_macc=val_metrics.mean_class_accuracy,
            fingerprint=averaged.fingerprint,
            members=averaged.members,
        )
        path = checkpoint.save_checkpoint(os.path.join(out, "soup", f"soup-top{k}.npz"), averaged)
        result = metrics.evaluate(model, averaged.params, ablation.scoring_split(splits), pool=pool)
        print(metrics.format_metrics(result, splits.class_names))
        if args.sweep:
            evaluator = metrics.make_evaluator(model, splits.val, pool=pool)
            _write_reports(out, [soup.soup_sweep(store, config.soup.sweep, evaluator)])
    records.write_summary(
        os.path.join(out, "soup.json"),
        {
            **_base_summary(config, "soup"),
            "k": k,
            "members": list(averaged.members),
            "checkpoint": path,
            **result.to_record(),
        },
    )
    return EXIT_OK


def cmd_extract(config: run_config.RunConfig, args, notifier) -> int:
    out = output_dir(config)
    if args.cloud:
        cloud = dataset_dir.load_cloud_file(args.cloud, config.dataset.points, Rng(config.run.seed))
    else:
        clouds = ablation.scoring_split(config.load_dataset())
        if not 0 <= args.index < len(clouds):
            raise pc_errors.InvalidRequest(
                f"Cloud index {args.index} out of range for {len(clouds)} clouds"
            )
        cloud = clouds[args.index]
    stage = config.stage_configs()[0]
    geometry = stage_geometry(stage, cloud.xyz)
    path = args.output or os.path.join(out, "extract.jsonl")
    with records.RecordWriter(path) as writer:
        writer.write_all(records.anchor_records(geometry))
    pc_logging.log(f"Wrote {len(geometry.anchors)} anchor records to {path}", "OKGREEN")
    return EXIT_OK


def cmd_bench(config: run_config.RunConfig, args, notifier) -> int:
    out = output_dir(config)
    settings = config.bench
    rows = bench.run_bench(
        args.sizes or settings.sizes,
        settings.anchors,
        settings.radius,
        settings.k_max,
        settings.lift,
        settings.reps,
        config.run.seed,
    )
    with records.RecordWriter(os.path.join(out, "bench.jsonl")) as writer:
        writer.write_all(row.to_record() for row in rows)
    print(bench.render_bench(rows))
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "soup": cmd_soup,
    "extract": cmd_extract,
    "bench": cmd_bench,
}


def main(argv: Optional[list[str]] = None) -> int:
    """Runs one command and maps failures onto exit codes."""
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    pc_logging.set_verbose(args.verbose)
    try:
        config = run_config.load_config(args.config).with_overrides(
            seed=args.seed,
            epochs=args.epochs,
            output_dir=args.output_dir,
            workers=args.workers,
            deterministic=args.deterministic,
            mode=args.mode,
        )
        pc_logging.set_verbose(args.verbose or config.run.verbose)
        notifier = build_notifier(args.config)
        try:
            with pc_logging.timed(f"Command '{args.command}'"):
                return COMMANDS[args.command](config, args, notifier)
        except pc_errors.DivergedError as e:
            pc_logging.log_failure(str(e))
            notifier.send_notification("Run diverged", str(e), config.run.name)
            return EXIT_NUMERIC
    except pc_errors.ConfigError as e:
        for diagnostic in e.diagnostics:
            pc_logging.log_failure(f"Config error: {diagnostic}")
        return EXIT_USAGE
    except pc_errors.IncompatibleCheckpoints as e:
        pc_logging.log_failure(str(e))
        return EXIT_INCOMPATIBLE
    except (ValueError, FileNotFoundError) as e:
        pc_logging.log_failure(str(e))
        return EXIT_USAGE
    except ArithmeticError as e:
        pc_logging.log_failure(str(e))
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
