"""
Declarative run configuration.

A run is described by one TOML document. Every table maps onto a frozen
dataclass below; unknown keys and wrongly typed values are collected into a
single ConfigError whose diagnostics name the dotted key path. Command-line
flags only override values of a loaded config.
"""

import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass, replace
from typing import Any, Optional, get_args, get_origin, get_type_hints

import classifier
import dataset_dir
import pc_errors
import pc_logging
import synthetic_shapes
from dataset_split import DatasetSplit
from local_features import AugmentMode
from set_abstraction import StageConfig
from trainer import Recipe

# Fields that change where or how fast a run happens, never its results
OUTPUT_ONLY = ("output_dir", "workers", "verbose")


@dataclass(frozen=True)
class RunSection:
    name: str = "pointcls"
    seed: int = 0
    output_dir: str = ""
    workers: int = 1
    deterministic: bool = True
    verbose: bool = False
    mode: str = "base"


@dataclass(frozen=True)
class SyntheticSection:
    classes: tuple[str, ...] = synthetic_shapes.FAMILIES
    per_class: int = 50
    noise: float = 0.02
    seed: int = 0
    rotation: str = "z"


@dataclass(frozen=True)
class DatasetSection:
    source: str = "synthetic"
    path: str = ""
    points: int = 512
    synthetic: SyntheticSection = field(default_factory=SyntheticSection)


@dataclass(frozen=True)
class StageSection:
    anchors: int
    radius: float
    k_max: int
    lift: tuple[int, ...]
    query: str = "ball"
    normalize_distance: bool = True
    # Empty follows run.mode
    mode: str = ""


def _default_stages() -> tuple[StageSection, ...]:
    return tuple(
        StageSection(s.anchors, s.radius, s.k_max, s.lift, s.query, s.normalize_distance)
        for s in classifier.default_stages()
    )


@dataclass(frozen=True)
class ModelSection:
    head: tuple[int, ...] = (32,)
    fps_random_start: bool = False
    stages: tuple[StageSection, ...] = field(default_factory=_default_stages)


@dataclass(frozen=True)
class AblationSection:
    seeds: tuple[int, ...] = (0, 1, 2)
    distance: bool = True
    soup_sweep: bool = True


@dataclass(frozen=True)
class SoupSection:
    k: int = 2
    sweep: tuple[int, ...] = (1, 2, 3, 5, 10, 15)


@dataclass(frozen=True)
class BenchSection:
    sizes: tuple[int, ...] = (1024,)
    anchors: int = 128
    radius: float = 0.2
    k_max: int = 16
    lift: tuple[int, ...] = (32, 32)
    reps: int = 5


@dataclass(frozen=True)
class PushbulletSection:
    enabled: bool = False
    api_key: str = ""
    device: str = ""


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    recipe: Recipe = field(default_factory=Recipe)
    ablation: AblationSection = field(default_factory=AblationSection)
    soup: SoupSection = field(default_factory=SoupSection)
    bench: BenchSection = field(default_factory=BenchSection)
    pushbullet: PushbulletSection = field(default_factory=PushbulletSection)

    @property
    def mode(self) -> AugmentMode:
        return AugmentMode(self.run.mode)

    def stage_configs(self, mode: Optional[AugmentMode] = None) -> tuple[StageConfig, ...]:
        """Stage configs in `mode` (default run.mode), except stages that set their own."""
        mode = self.mode if mode is None else mode
        return tuple(
            StageConfig(
                anchors=s.anchors,
                radius=s.radius,
                k_max=s.k_max,
                lift=s.lift,
                mode=AugmentMode(s.mode) if s.mode else mode,
                query=s.query,
                normalize_distance=s.normalize_distance,
            )
            for s in self.model.stages
        )

    def model_config(self, num_classes: int) -> classifier.ModelConfig:
        return classifier.ModelConfig(
            num_classes=num_classes,
            stages=self.stage_configs(),
            head=self.model.head,
            fps_random_start=self.model.fps_random_start,
        )

    def synthetic_spec(self) -> synthetic_shapes.SyntheticSpec:
        s = self.dataset.synthetic
        return synthetic_shapes.SyntheticSpec(
            classes=s.classes,
            per_class=s.per_class,
            points=self.dataset.points,
            noise=s.noise,
            seed=s.seed,
            rotation=s.rotation,
        )

    def load_dataset(self) -> DatasetSplit:
        if self.dataset.source == "synthetic":
            splits = synthetic_shapes.generate(self.synthetic_spec())
        else:
            splits = dataset_dir.load_directory(
                self.dataset.path, self.dataset.points, self.dataset.synthetic.seed
            )
        splits.validate()
        return splits

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON of everything that affects results."""
        data = asdict(self)
        for key in OUTPUT_ONLY:
            data["run"].pop(key, None)
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(
        self,
        seed: Optional[int] = None,
        epochs: Optional[int] = None,
        output_dir: Optional[str] = None,
        workers: Optional[int] = None,
        deterministic: Optional[bool] = None,
        mode: Optional[str] = None,
    ) -> "RunConfig":
        """Copy with every non-None argument replacing its config value."""
        run_changes = {
            key: value
            for key, value in (
                ("seed", seed),
                ("output_dir", output_dir),
                ("workers", workers),
                ("deterministic", deterministic),
                ("mode", mode),
            )
            if value is not None
        }
        config = replace(self, run=replace(self.run, **run_changes))
        if epochs is not None:
            config = replace(config, recipe=replace(config.recipe, epochs=epochs))
        diagnostics = config.semantic_diagnostics()
        if diagnostics:
            raise pc_errors.ConfigError(diagnostics)
        return config

    def semantic_diagnostics(self) -> list[str]:
        """Range and cross-field checks that the schema cannot express."""
        diagnostics = []
        if self.run.mode not in [m.value for m in AugmentMode]:
            diagnostics.append(
                f"run.mode: expected one of {[m.value for m in AugmentMode]}, got {self.run.mode!r}"
            )
        if self.run.workers < 1:
            diagnostics.append("run.workers: must be >= 1")
        if self.dataset.source not in ("synthetic", "directory"):
            diagnostics.append(
                f"dataset.source: expected 'synthetic' or 'directory', got {self.dataset.source!r}"
            )
        if self.dataset.source == "directory" and not self.dataset.path:
            diagnostics.append("dataset.path: required when dataset.source = 'directory'")
        if not self.model.stages:
            diagnostics.append("model.stages: at least one stage is required")
        if not self.ablation.seeds:
            diagnostics.append("ablation.seeds: at least one seed is required")
        if self.soup.k < 1:
            diagnostics.append("soup.k: must be >= 1")
        if self.bench.reps < 5:
            diagnostics.append("bench.reps: at least 5 repetitions are required")
        checks = [
            ("dataset.synthetic", lambda: self.synthetic_spec().validate()),
            ("recipe", self.recipe.validate),
            ("model.stages", lambda: self.stage_configs(AugmentMode.BASE)),
        ]
        for path, check in checks:
            try:
                check()
            except ValueError as e:
                diagnostics.append(f"{path}: {e}")
        return diagnostics


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _convert(value: Any, hint: Any, path: str, diagnostics: list[str]) -> Any:
    if is_dataclass(hint):
        return _build(hint, value, path, diagnostics)
    if get_origin(hint) is tuple:
        if not isinstance(value, list):
            diagnostics.append(f"{path}: expected an array, got {type(value).__name__}")
            return None
        item = get_args(hint)[0]
        return tuple(
            _convert(v, item, f"{path}[{i}]", diagnostics) for i, v in enumerate(value)
        )
    if hint is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if hint is int and isinstance(value, bool):
        diagnostics.append(f"{path}: expected int, got bool")
        return None
    if not isinstance(value, hint):
        diagnostics.append(f"{path}: expected {hint.__name__}, got {type(value).__name__}")
        return None
    return value


def _build(cls: type, data: Any, path: str, diagnostics: list[str]) -> Any:
    if not isinstance(data, dict):
        diagnostics.append(f"{path or 'config'}: expected a table")
        return None
    hints = get_type_hints(cls)
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            diagnostics.append(f"{_join(path, key)}: unknown key")
    before = len(diagnostics)
    kwargs = {}
    for name, f in known.items():
        if name in data:
            kwargs[name] = _convert(data[name], hints[name], _join(path, name), diagnostics)
        elif f.default is MISSING and f.default_factory is MISSING:
            diagnostics.append(f"{_join(path, name)}: missing required key")
    if len(diagnostics) > before:
        return None
    return cls(**kwargs)


def parse_config(data: dict) -> RunConfig:
    """
    Validates a parsed TOML document.

    Raises:
        pc_errors.ConfigError: With one diagnostic per problem found.
    """
    diagnostics: list[str] = []
    config = _build(RunConfig, data, "", diagnostics)
    if config is not None:
        diagnostics.extend(config.semantic_diagnostics())
    if diagnostics:
        raise pc_errors.ConfigError(diagnostics)
    return config


def load_config(path: str) -> RunConfig:
    """Reads and validates the TOML run configuration at `path`."""
    try:
        with open(path, "rb") as file:
            data = tomllib.load(file)
    except FileNotFoundError:
        raise pc_errors.ConfigError([f"{path}: file not found"])
    except tomllib.TOMLDecodeError as e:
        raise pc_errors.ConfigError([f"{path}: {e}"])
    config = parse_config(data)
    pc_logging.log_debug(f"Loaded config {path} (fingerprint {config.fingerprint()[:12]})")
    return config
