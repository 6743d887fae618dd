"""Logging system for the Ising laboratory"""

import logging
import os
import sys
from pathlib import Path
from typing import Optional, Union

LOG_DIR_ENV = "ISINGLAB_LOG_DIR"
LOG_LEVEL_ENV = "ISINGLAB_LOG_LEVEL"


def _resolve_level(level: Union[int, str, None]) -> int:
    override = os.getenv(LOG_LEVEL_ENV)
    if override:
        level = override
    if level is None:
        return logging.INFO
    if isinstance(level, str):
        value = logging.getLevelName(level.upper())
        return value if isinstance(value, int) else logging.INFO
    return int(level)


class IsingLabLogger:
    """Logger class for the laboratory pipelines"""

    def __init__(self, name: str = "isinglab", level: Union[int, str, None] = logging.INFO,
                 log_dir: Optional[str] = None):
        self.logger = logging.getLogger(name)
        resolved = _resolve_level(level)
        self.logger.setLevel(resolved)

        # Handlers are attached once per logger name
        if getattr(self.logger, "_isinglab_configured", False):
            for handler in self.logger.handlers:
                handler.setLevel(resolved)
            return

        log_path = Path(log_dir or os.getenv(LOG_DIR_ENV, "logs"))
        try:
            log_path.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_path / "isinglab.log")
            file_handler.setLevel(resolved)
            file_handler.setFormatter(
                logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
            self.logger.addHandler(file_handler)
        except OSError:
            # read-only working directory: console only
            pass

        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(resolved)
        console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
        self.logger.addHandler(console_handler)
        self.logger.propagate = False
        self.logger._isinglab_configured = True

    def debug(self, message: str) -> None:
        """Log debug message"""
        self.logger.debug(message)

    def info(self, message: str) -> None:
        """Log info message"""
        self.logger.info(message)

    def warning(self, message: str) -> None:
        """Log warning message"""
        self.logger.warning(message)

    def error(self, message: str) -> None:
        """Log error message"""
        self.logger.error(message)

    def critical(self, message: str) -> None:
        """Log critical message"""
        self.logger.critical(message)

    def exception(self, message: str) -> None:
        """Log an exception message with traceback."""
        self.logger.exception(message)


def set_package_level(level: Union[int, str, None]) -> int:
    """Apply one level to every configured isinglab logger and its handlers."""
    resolved = _resolve_level(level)
    for name, candidate in list(logging.root.manager.loggerDict.items()):
        if not name.startswith("isinglab") or not isinstance(candidate, logging.Logger):
            continue
        candidate.setLevel(resolved)
        for handler in candidate.handlers:
            handler.setLevel(resolved)
    return resolved
