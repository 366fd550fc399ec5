from pushbullet import InvalidKeyError, Pushbullet, PushbulletError
from requests.exceptions import ConnectionError

import notification_base
import pc_logging


class PushbulletNotification(notification_base.NotificationBase):
    """Pushbullet worker configured by the `[pushbullet]` table."""

    def __init__(self, toml_path: str):
        super().__init__(toml_path)
        pushbullet_config = self.config.get("pushbullet", None)
        if pushbullet_config is None:
            return

        self.enabled = pushbullet_config.get("enabled", False)
        if not self.enabled:
            return

        try:
            self.pb = Pushbullet(pushbullet_config["api_key"])
            device = pushbullet_config.get("device", "")
            if device:
                self.pb = self.pb.get_device(device)
        except InvalidKeyError:
            pc_logging.log_failure(
                "Invalid Pushbullet API key in the config file. Cannot send notifications."
            )
            self.enabled = False
        except PushbulletError as e:
            pc_logging.log_failure(f"Pushbullet error: {e}. Cannot send notifications.")
            self.enabled = False

    @notification_base.retry_decorator
    def send_notification(self, title: str, body: str, run: str) -> bool:
        try:
            pc_logging.log(
                f"\t({run}) Sending Pushbullet notification: {title} - {body}",
                "OKGREEN",
            )
            self.pb.push_note(title, body)
            return True
        except PushbulletError as e:
            pc_logging.log_failure(f"\tFailed to send Pushbullet notification: {e}")
            return False
        except ConnectionError as e:
            pc_logging.log_failure(
                f"\tPushbullet notification failed with connection error, retrying: {e}"
            )
            return False
