"""
Machine-readable run outputs.

Line-delimited files hold one JSON object per line, each with a "record"
field naming its kind: "epoch", "summary", "ablation_row", "overall_best",
"bench_row" or "anchor". Summaries are also written as a standalone JSON
document.
"""

import json
import os
from typing import Iterable, Optional

import numpy as np

import pc_logging


def _default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, default=_default)


class RecordWriter:
    """Appends records to a JSONL file, flushing after every line."""

    def __init__(self, path: str, append: bool = False):
        self.path = path
        self.append = append
        self._file = None

    def __enter__(self) -> "RecordWriter":
        os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)
        self._file = open(self.path, "a" if self.append else "w", encoding="utf-8")
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self._file.close()
        self._file = None

    def write(self, record: dict) -> None:
        self._file.write(dumps(record) + "\n")
        self._file.flush()

    def write_all(self, records: Iterable[dict]) -> None:
        for record in records:
            self.write(record)


def read_records(path: str, kind: Optional[str] = None) -> list[dict]:
    """Every record in `path`, or only those whose "record" field is `kind`."""
    with open(path, "r", encoding="utf-8") as file:
        records = [json.loads(line) for line in file if line.strip()]
    return [r for r in records if kind is None or r.get("record") == kind]


def write_summary(path: str, summary: dict) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        json.dump({"record": "summary", **summary}, file, indent=2, sort_keys=True, default=_default)
        file.write("\n")
    pc_logging.log_debug(f"Wrote summary {path}")
    return path


def read_summary(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as file:
        return json.load(file)


def anchor_records(geometry) -> list[dict]:
    """One "anchor" record per anchor of a stage geometry."""
    grouping = geometry.grouping
    return [
        {
            "record": "anchor",
            "anchor": int(anchor),
            "xyz": geometry.anchor_xyz[i],
            "neighbors": grouping.neighbor_indices[i],
            "pad_mask": grouping.pad_mask[i],
            "dv": geometry.dv[i],
            "d": geometry.d[i],
        }
        for i, anchor in enumerate(geometry.anchors.indices)
    ]
