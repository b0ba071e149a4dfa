from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential
from .logger_utils import logger


def on_retry_callback(retry_state):
    """Callback function to log retry attempts."""
    logger.warning(
        f"Retrying function {retry_state.fn.__name__}, "
        f"attempt {retry_state.attempt_number} after {retry_state.seconds_since_start:.2f}s...",
        extra={"component": "retry_utils"},
    )


# Artifact writes only: transient filesystem errors (NFS, synced folders).
io_retry = retry(
    retry=retry_if_exception_type(OSError),
    wait=wait_exponential(multiplier=0.2, min=0.2, max=5),
    stop=stop_after_attempt(4),
    before_sleep=on_retry_callback,
    reraise=True,
)
