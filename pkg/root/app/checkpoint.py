"""
Checkpoints and the top-k checkpoint store.

A checkpoint file is a numpy ``.npz`` container holding a ``__meta__`` entry
(UTF-8 JSON: format version, config fingerprint, parameter names and shapes
in declared order, epoch and metrics) followed by one little-endian float32
array per parameter, in the same order.
"""

import bisect
import json
import os
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

import pc_errors
import pc_logging
import system_utils
from classifier import ParameterVector

FORMAT_VERSION = 1
DEFAULT_CAPACITY = 15
_META_KEY = "__meta__"
_FILE_DTYPE = np.dtype("<f4")


@dataclass(frozen=True)
class Checkpoint:
    """
    Parameters saved at one epoch, with the validation metrics that ranked them.

    Attributes:
        params (ParameterVector): Model parameters.
        epoch (int): Epoch the parameters were saved at.
        val_oa (Optional[float]): Validation OA in [0, 1]; None if not evaluated.
        val_macc (Optional[float]): Validation mAcc in [0, 1]; None if not evaluated.
        fingerprint (str): Model config fingerprint.
        members (tuple[int, ...]): Epochs averaged into this checkpoint (soups).
    """

    params: ParameterVector
    epoch: int
    val_oa: Optional[float]
    val_macc: Optional[float]
    fingerprint: str
    members: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("val_oa", "val_macc"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise pc_errors.InvalidRequest(f"{name} must lie in [0, 1], got {value}")

    def rank_key(self) -> tuple[float, float, int]:
        """Higher is better: val OA, then val mAcc, then the later epoch."""
        oa = -1.0 if self.val_oa is None else self.val_oa
        macc = -1.0 if self.val_macc is None else self.val_macc
        return (oa, macc, self.epoch)

    def file_name(self) -> str:
        return f"ckpt-e{self.epoch:04d}.npz"


def save_checkpoint(path: str, checkpoint: Checkpoint) -> str:
    """
    Writes `checkpoint` to `path` atomically and returns the path.
    Parameters are stored as little-endian float32.
    """
    params = checkpoint.params
    meta = {
        "format_version": FORMAT_VERSION,
        "fingerprint": checkpoint.fingerprint,
        "names": list(params.names),
        "shapes": [list(s) for s in params.shapes],
        "epoch": checkpoint.epoch,
        "members": list(checkpoint.members),
        "metrics": {"val_oa": checkpoint.val_oa, "val_macc": checkpoint.val_macc},
    }
    arrays = {_META_KEY: np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)}
    for name, array in params.arrays():
        arrays[name] = np.ascontiguousarray(array, dtype=_FILE_DTYPE)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with system_utils.temporary_directory(directory) as temp_dir:
        staged = os.path.join(temp_dir, "checkpoint.npz")
        with open(staged, "wb") as file:
            np.savez(file, **arrays)
        os.replace(staged, path)
    pc_logging.log_debug(f"\tSaved checkpoint {path}")
    return path


def load_checkpoint(path: str) -> Checkpoint:
    """
    Reads a checkpoint written by `save_checkpoint`.

    Raises:
        pc_errors.IncompatibleCheckpoints: If the format version is unknown.
    """
    with np.load(path, allow_pickle=False) as archive:
        meta = json.loads(archive[_META_KEY].tobytes().decode("utf-8"))
        if meta.get("format_version") != FORMAT_VERSION:
            raise pc_errors.IncompatibleCheckpoints(
                f"{path}: unsupported checkpoint format {meta.get('format_version')}"
            )
        names = tuple(meta["names"])
        shapes = tuple(tuple(s) for s in meta["shapes"])
        values = np.concatenate(
            [archive[name].astype(_FILE_DTYPE).reshape(-1) for name in names]
        ).astype(np.float32)
    return Checkpoint(
        params=ParameterVector(names, shapes, values),
        epoch=int(meta["epoch"]),
        val_oa=meta["metrics"]["val_oa"],
        val_macc=meta["metrics"]["val_macc"],
        fingerprint=meta["fingerprint"],
        members=tuple(meta.get("members", ())),
    )


class CheckpointStore:
    """
    The best checkpoints of one training session, best first.

    Holds at most `capacity` entries ranked by `Checkpoint.rank_key`. All
    entries share one config fingerprint. Only the training loop writes to a
    store.
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise pc_errors.InvalidRequest("Checkpoint store capacity must be >= 1")
        self.capacity = capacity
        self._entries: list[Checkpoint] = []

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Checkpoint]:
        return iter(self._entries)

    def __getitem__(self, index: int) -> Checkpoint:
        return self._entries[index]

    @property
    def fingerprint(self) -> Optional[str]:
        return self._entries[0].fingerprint if self._entries else None

    @property
    def best(self) -> Checkpoint:
        if not self._entries:
            raise pc_errors.InvalidRequest("Checkpoint store is empty")
        return self._entries[0]

    def offer(self, checkpoint: Checkpoint) -> bool:
        """
        Inserts `checkpoint` if it ranks within the top `capacity`; the worst
        entry is dropped when the store is full. Returns True if inserted.
        """
        if self._entries and checkpoint.fingerprint != self.fingerprint:
            raise pc_errors.IncompatibleCheckpoints(
                "Checkpoint fingerprint differs from the rest of the store"
            )
        if len(self._entries) >= self.capacity:
            if checkpoint.rank_key() <= self._entries[-1].rank_key():
                return False
            self._entries.pop()
        keys = [tuple(-x for x in c.rank_key()) for c in self._entries]
        position = bisect.bisect_right(keys, tuple(-x for x in checkpoint.rank_key()))
        self._entries.insert(position, checkpoint)
        return True

    def top(self, k: int) -> list[Checkpoint]:
        if not 1 <= k <= len(self._entries):
            raise pc_errors.InvalidRequest(
                f"Requested top-{k} from a store of {len(self._entries)} checkpoints"
            )
        return list(self._entries[:k])

    def save(self, directory: str) -> list[str]:
        """Writes every entry to `directory`, replacing stale checkpoint files."""
        os.makedirs(directory, exist_ok=True)
        for stale in system_utils.get_files(directory, ".npz", return_full_path=True):
            os.remove(stale)
        return [
            save_checkpoint(os.path.join(directory, c.file_name()), c)
            for c in self._entries
        ]

    @classmethod
    def load(cls, directory: str, capacity: int = DEFAULT_CAPACITY) -> "CheckpointStore":
        """
        Loads every checkpoint file in `directory`.

        Raises:
            pc_errors.IncompatibleCheckpoints: If the files carry different
                fingerprints.
        """
        store = cls(capacity)
        for path in sorted(system_utils.get_files(directory, ".npz", return_full_path=True)):
            store.offer(load_checkpoint(path))
        return store
