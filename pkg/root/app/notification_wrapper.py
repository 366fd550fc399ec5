from concurrent.futures import ThreadPoolExecutor

import notification_base
import pc_logging


class NotificationWrapper:
    """Fans a notification out to every enabled worker."""

    def __init__(self):
        self.notification_workers: list[notification_base.NotificationBase] = []

    def add_notification_worker(
        self, notification_worker: notification_base.NotificationBase
    ) -> None:
        self.notification_workers.append(notification_worker)

    @property
    def enabled(self) -> bool:
        return any(worker.enabled for worker in self.notification_workers)

    def send_notification(self, title: str, body: str, run: str) -> None:
        """
        Sends through all enabled workers in parallel. A failing worker is
        logged and never propagates, so notifications cannot change a run's
        outcome.
        """
        enabled_workers = [w for w in self.notification_workers if w.enabled]
        if not enabled_workers:
            return
        with ThreadPoolExecutor() as executor:
            futures = [
                executor.submit(worker.send_notification, title, body, run)
                for worker in enabled_workers
            ]
        for future in futures:
            try:
                future.result()
            except Exception as e:
                pc_logging.log_failure(f"\t({run}) Notification failed: {e}")
