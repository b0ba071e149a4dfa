import logging
import os
import sys
from pythonjsonlogger import jsonlogger

# Pool workers re-import this module; handlers are attached once per process.


def get_logger(name: str, log_level: str = "INFO"):
    logger = logging.getLogger(name)
    logger.setLevel(log_level)
    logger.propagate = False

    formatter = jsonlogger.JsonFormatter(
        '%(asctime)s %(name)s %(levelname)s %(module)s %(funcName)s %(message)s'
    )

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    if not logger.handlers:
        logger.addHandler(handler)

    return logger


def set_level(log_level: str) -> None:
    """Re-level the shared logger after settings are loaded."""
    logger.setLevel(log_level.upper())


# Default logger instance
logger = get_logger("wsn_rlc", os.getenv("LOG_LEVEL", "INFO").upper())
