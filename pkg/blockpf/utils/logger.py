"""
Logging configuration for blockpf.

Console logging goes to stderr so that CLI output on stdout stays clean;
file logging is optional and rotates. JSON output carries experiment context
attached through ContextFilter.
"""

import logging
import logging.config
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

PACKAGE_LOGGER = "blockpf"


def setup_logging(
    log_level: str = "INFO",
    log_dir: str = "logs",
    log_to_file: bool = False,
    log_to_console: bool = True,
    json_format: bool = False,
) -> None:
    """
    Set up logging configuration for the package.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: Directory for log files
        log_to_file: Whether to log to a rotating file
        log_to_console: Whether to log to stderr
        json_format: Emit JSON records instead of text
    """
    if log_to_file:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
    log_file = os.path.join(log_dir, "blockpf.log")
    formatter = "json" if json_format else "detailed"

    config: Dict[str, Any] = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "detailed": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(lineno)d - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S"
            },
            "simple": {
                "format": "%(levelname)s - %(name)s - %(message)s"
            },
            "json": {
                "format": "%(asctime)s %(name)s %(levelname)s %(module)s %(lineno)d %(message)s",
                "class": "pythonjsonlogger.jsonlogger.JsonFormatter"
            }
        },
        "handlers": {},
        "loggers": {
            PACKAGE_LOGGER: {
                "level": log_level,
                "handlers": [],
                "propagate": False
            }
        }
    }

    if log_to_console:
        config["handlers"]["console"] = {
            "class": "logging.StreamHandler",
            "level": log_level,
            "formatter": formatter if json_format else "simple",
            "stream": sys.stderr
        }
        config["loggers"][PACKAGE_LOGGER]["handlers"].append("console")

    if log_to_file:
        config["handlers"]["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": log_level,
            "formatter": formatter,
            "filename": log_file,
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
            "encoding": "utf-8"
        }
        config["loggers"][PACKAGE_LOGGER]["handlers"].append("file")

    logging.config.dictConfig(config)

    logger = logging.getLogger(f"{PACKAGE_LOGGER}.startup")
    logger.debug(f"Logging configured - Level: {log_level}, File: {log_file if log_to_file else 'None'}")


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger under the package namespace.

    Args:
        name: Logger name (usually __name__)
    """
    if name == PACKAGE_LOGGER or name.startswith(f"{PACKAGE_LOGGER}."):
        return logging.getLogger(name)
    return logging.getLogger(f"{PACKAGE_LOGGER}.{name}")


class ContextFilter(logging.Filter):
    """
    Logging filter to add context information to log records.
    """

    def __init__(self, context: Optional[Dict[str, Any]] = None):
        super().__init__()
        self.context = context or {}

    def filter(self, record):
        for key, value in self.context.items():
            setattr(record, key, value)
        return True


def add_context_to_logger(logger: logging.Logger, **context) -> ContextFilter:
    """
    Attach context (e.g. experiment name, seed) to every record of a logger.

    Returns:
        The installed filter, so callers can remove it again.
    """
    context_filter = ContextFilter(context)
    logger.addFilter(context_filter)
    return context_filter
