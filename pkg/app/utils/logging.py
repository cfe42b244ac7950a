"""
Logging configuration for the FD-MIMO simulator
"""

import logging
import logging.config
import sys
from typing import Dict, Any, Optional

import structlog

from app.config import settings

_CORE_MODULES = (
    "array",
    "txru",
    "spectra",
    "channel",
    "correlation",
    "beamforming",
    "sdb",
    "experiment_engine",
    "experiment_manager",
    "validation",
)


def _console_formatter() -> Dict[str, Any]:
    if settings.LOG_FORMAT == "json":
        return {
            "()": structlog.stdlib.ProcessorFormatter,
            "processors": [
                structlog.stdlib.ProcessorFormatter.remove_processors_meta,
                structlog.processors.JSONRenderer(sort_keys=True),
            ],
            "foreign_pre_chain": [
                structlog.processors.TimeStamper(fmt="iso"),
                structlog.stdlib.add_log_level,
                structlog.stdlib.add_logger_name,
            ],
        }
    return {
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        "datefmt": "%Y-%m-%d %H:%M:%S",
    }


def setup_logging(level: Optional[str] = None) -> logging.Logger:
    """Setup application logging configuration

    Args:
        level: Overrides settings.LOG_LEVEL (the CLI passes --verbose here)

    Returns:
        Logger of this module
    """
    level = (level or settings.LOG_LEVEL).upper()

    core_loggers: Dict[str, Any] = {
        f"app.core.{module}": {
            "level": level,
            "handlers": ["console"],
            "propagate": False,
        }
        for module in _CORE_MODULES
    }

    logging_config: Dict[str, Any] = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": _console_formatter(),
            "detailed": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(funcName)s:%(lineno)d - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S",
            },
        },
        "handlers": {
            # stderr keeps stdout free for CSV written to "-"
            "console": {
                "class": "logging.StreamHandler",
                "level": level,
                "formatter": "default",
                "stream": sys.stderr,
            },
            "error_console": {
                "class": "logging.StreamHandler",
                "level": "ERROR",
                "formatter": "detailed",
                "stream": sys.stderr,
            },
        },
        "loggers": {
            "app": {
                "level": level,
                "handlers": ["console", "error_console"],
                "propagate": False,
            },
            **core_loggers,
            "uvicorn": {
                "level": "INFO",
                "handlers": ["console"],
                "propagate": False,
            },
            "uvicorn.error": {
                "level": "INFO",
                "handlers": ["console", "error_console"],
                "propagate": False,
            },
            "uvicorn.access": {
                "level": "INFO",
                "handlers": ["console"],
                "propagate": False,
            },
        },
        "root": {
            "level": level,
            "handlers": ["console"],
        },
    }

    logging.config.dictConfig(logging_config)

    # Solver backends are chatty at INFO
    logging.getLogger("asyncio").setLevel(logging.WARNING)
    logging.getLogger("cvxpy").setLevel(logging.WARNING)

    logger = logging.getLogger("app.utils.logging")
    logger.debug(f"Logging configured - Level: {level}, Format: {settings.LOG_FORMAT}")
    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance with the specified name

    Args:
        name: Logger name, relative to the app package

    Returns:
        Configured logger instance
    """
    return logging.getLogger(f"app.{name}")


class ExperimentLogger:
    """
    Logger wrapper that tags every message with an experiment id
    """

    def __init__(self, name: str, experiment_id: str):
        self.logger = get_logger(name)
        self.experiment_id = experiment_id

    def log_experiment_event(self, event: str, details: Optional[Dict] = None):
        message = f"[{self.experiment_id}] {event}"
        if details:
            message += f" - {details}"
        self.logger.info(message)

    def log_trial_progress(self, done: int, total: int):
        self.logger.debug(f"[{self.experiment_id}] Trials: {done}/{total}")

    def log_performance_metric(self, metric: str, value: float, unit: str = ""):
        self.logger.info(f"[{self.experiment_id}] Performance - {metric}: {value:.3f} {unit}".rstrip())

    def log_error(self, error: Exception, context: str = ""):
        message = (
            f"[{self.experiment_id}] Error in {context}: {error}"
            if context
            else f"[{self.experiment_id}] Error: {error}"
        )
        self.logger.error(message, exc_info=True)
