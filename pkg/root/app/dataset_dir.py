import os
from typing import Optional

import mesh_io
import pc_errors
import pc_logging
import system_utils
import xyz_io
from dataset_split import VAL_FRACTION, DatasetSplit
from point_cloud import PointCloud, normalize_unit_sphere
from seeded_rng import Rng

SPLITS = ("train", "val", "test")
MESH_EXTENSIONS = (".off",)
TEXT_EXTENSIONS = (".xyz", ".txt", ".csv")


def load_cloud_file(path: str, points: int, rng: Rng, label: Optional[int] = None) -> PointCloud:
    """
    Reads one cloud: OFF meshes are surface sampled to `points` points, text
    files are loaded as they are. The result is unit-sphere normalized.
    """
    with open(path, "r", encoding="utf-8") as file:
        text = file.read()
    try:
        if path.lower().endswith(MESH_EXTENSIONS):
            cloud = mesh_io.sample_surface(mesh_io.parse_off(text), points, rng, label=label)
        else:
            cloud = xyz_io.load_xyz(text, label=label)
    except pc_errors.ParseError as e:
        pc_logging.log_failure(f"Failed to parse {path}: {e}")
        raise
    return normalize_unit_sphere(cloud)


def _list_files(directory: str) -> list[str]:
    if not os.path.isdir(directory):
        return []
    return sorted(
        system_utils.get_files(
            directory, MESH_EXTENSIONS + TEXT_EXTENSIONS, return_full_path=True
        )
    )


def load_directory(root: str, points: int = 512, seed: int = 0) -> DatasetSplit:
    """
    Loads `<root>/<class_name>/<split>/<file>`. Class ids follow the sorted
    class directory names. Without a `val` directory, the last 15% of each
    class's sorted training files become its validation clouds.

    Raises:
        pc_errors.InvalidDataset: If the root has no class directories.
    """
    if not os.path.isdir(root):
        raise pc_errors.InvalidDataset(f"Dataset directory {root} does not exist")
    class_names = sorted(
        d for d in os.listdir(root) if os.path.isdir(os.path.join(root, d))
    )
    if not class_names:
        raise pc_errors.InvalidDataset(f"No class directories under {root}")
    splits = {name: [] for name in SPLITS}
    rng = Rng(seed)
    for label, class_name in enumerate(class_names):
        files = {s: _list_files(os.path.join(root, class_name, s)) for s in SPLITS}
        if not files["val"] and len(files["train"]) > 1:
            carve = max(1, round(VAL_FRACTION * len(files["train"])))
            carve = min(carve, len(files["train"]) - 1)
            files["val"] = files["train"][-carve:]
            files["train"] = files["train"][:-carve]
        for split_name in SPLITS:
            streams = rng.spawn(len(files[split_name])) if files[split_name] else []
            for path, stream in zip(files[split_name], streams):
                splits[split_name].append(load_cloud_file(path, points, stream, label))
    pc_logging.log(
        f"Loaded {len(class_names)} classes from {root}: "
        + ", ".join(f"{len(splits[s])} {s}" for s in SPLITS)
    )
    return DatasetSplit(
        tuple(splits["train"]), tuple(splits["val"]), tuple(splits["test"]), tuple(class_names)
    )
