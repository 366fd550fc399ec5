import math
import re
from typing import Optional

import pc_errors
import pc_logging
from point_cloud import PointCloud

_separator = re.compile(r"[,\s]+")


def load_xyz(
    text: str, warnings: Optional[list[str]] = None, label: Optional[int] = None
) -> PointCloud:
    """
    Reads one point per line from whitespace- or comma-separated text.

    Columns beyond the third (normals, colors, ...) are ignored; a warning
    record is logged and appended to `warnings` once per file. Blank lines and
    `#` comments are skipped.

    Raises:
        pc_errors.ParseError: On non-numeric or non-finite values, short rows,
            or a file without points.
    """
    points = []
    warned = False
    last = 0
    for number, line in enumerate(text.splitlines(), start=1):
        last = number
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        tokens = [t for t in _separator.split(content) if t]
        if len(tokens) < 3:
            raise pc_errors.ParseError(number, f"expected 3 coordinates, got {content!r}")
        try:
            xyz = [float(t) for t in tokens[:3]]
        except ValueError:
            raise pc_errors.ParseError(number, f"non-numeric token in {content!r}")
        if not all(math.isfinite(v) for v in xyz):
            raise pc_errors.ParseError(number, f"non-finite coordinate in {content!r}")
        if len(tokens) > 3 and not warned:
            message = f"line {number}: ignoring {len(tokens) - 3} extra column(s)"
            pc_logging.log_warning(message)
            if warnings is not None:
                warnings.append(message)
            warned = True
        points.append(xyz)
    if not points:
        raise pc_errors.ParseError(max(last, 1), "no points found")
    return PointCloud(points, label)
