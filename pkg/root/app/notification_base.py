"""
Base class for run notifications.

Derived classes implement `send_notification(title, body, run)` and mark
themselves `enabled` once they are able to deliver. Each reads its own table
from the run's TOML file, which is loaded into `self.config`.

`retry_decorator` retries a delivery up to 3 times, sleeping 10 and 20
seconds between attempts.
"""

import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Callable

kSleepTime = 10
kMaxAttempts = 3


class NotificationBase:
    def __init__(self, toml_path: str) -> None:
        self.enabled = False
        with open(toml_path, "rb") as file:
            self.config = tomllib.load(file)

    def send_notification(self, title: str, body: str, run: str) -> bool:
        """
        Delivers one notification about `run`. Returns True on success.
        """
        raise NotImplementedError(
            "send_notification method must be implemented in derived classes"
        )


def retry_decorator(func: Callable) -> Callable:
    """
    Calls `func` until it returns a truthy value, at most kMaxAttempts times,
    with a linearly growing sleep between attempts. Returns the last result.
    """

    def wrapper(*args: Any, **kwargs: Any) -> bool:
        result = False
        for attempt in range(kMaxAttempts):
            result = func(*args, **kwargs)
            if result:
                return result
            if attempt < kMaxAttempts - 1:
                time.sleep(kSleepTime * (attempt + 1))
        return result

    return wrapper
