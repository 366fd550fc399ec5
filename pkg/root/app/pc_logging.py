"""
Console logging for training runs.

Every line is timestamped and colored by level. Debug lines only appear with
verbose logging, which is a process-shared flag so that pool workers follow
the parent. `timed` logs how long a block took.
"""

import ctypes
import datetime
import time
from contextlib import contextmanager
from multiprocessing import Value
from typing import Iterator, Optional


class bcolors:
    HEADER = "\033[95m"
    OKBLUE = "\033[94m"
    OKGREEN = "\033[92m"
    WARNING = "\033[93m"
    FAIL = "\033[91m"
    ENDC = "\033[0m"
    BOLD = "\033[1m"
    UNDERLINE = "\033[4m"


color_map = {
    name: getattr(bcolors, name)
    for name in ("HEADER", "OKBLUE", "OKGREEN", "WARNING", "FAIL", "ENDC", "BOLD", "UNDERLINE")
}

verbose = Value(ctypes.c_bool, False)


def set_verbose(value: bool) -> None:
    verbose.value = value


def log(msg: str, color: Optional[str] = None) -> None:
    """
    Prints `msg` after a timestamp, in the named color of `color_map`.
    Unknown or missing colors print bold.
    """
    using_col = color_map.get(color, bcolors.BOLD)
    timestamp = datetime.datetime.now().strftime("%Y-%m-%d %I:%M:%S %p")
    print(f"{bcolors.BOLD}{timestamp}{bcolors.ENDC} - {using_col}{msg}{bcolors.ENDC}")


def log_failure(msg: str) -> None:
    log(msg, "FAIL")


def log_warning(msg: str) -> None:
    log(msg, "WARNING")


def log_debug(msg: str) -> None:
    if verbose.value:
        log(msg, "OKBLUE")


def format_duration(seconds: float) -> str:
    """Renders a duration as `1h02m03s`, `2m05s` or `4.21s`."""
    if seconds < 60:
        return f"{seconds:.2f}s"
    minutes, secs = divmod(int(round(seconds)), 60)
    hours, minutes = divmod(minutes, 60)
    if hours:
        return f"{hours}h{minutes:02d}m{secs:02d}s"
    return f"{minutes}m{secs:02d}s"


@contextmanager
def timed(label: str, color: Optional[str] = "OKBLUE") -> Iterator[None]:
    """
    Logs `label` with the wall time of the block once it exits, including
    when it raises. With color None the line is a debug line.
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        message = f"{label} took {format_duration(time.perf_counter() - start)}"
        if color is None:
            log_debug(message)
        else:
            log(message, color)
