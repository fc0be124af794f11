"""
Process runtime for the toolkit
Provides the shared logger and the settings/runtime directories
"""
import logging
import os
import sys
from pathlib import Path

SETTINGS_DIR = Path(os.environ.get("CARNOT_SETTINGS_DIR", Path.home() / ".config" / "carnot-schauder"))
RUNTIME_DIR = Path(os.environ.get("CARNOT_RUNTIME_DIR", Path.home() / ".cache" / "carnot-schauder"))

LOG_FORMAT = "[%(asctime)s][%(levelname)s]: %(message)s"

logger = logging.getLogger("carnot")


def configure_logging(level: str = "INFO", log_to_file: bool = True) -> logging.Logger:
    """Attach handlers once; stdout stays reserved for reports"""
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    if logger.handlers:
        return logger

    formatter = logging.Formatter(LOG_FORMAT)
    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(formatter)
    logger.addHandler(stream)

    if log_to_file:
        try:
            RUNTIME_DIR.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(RUNTIME_DIR / "carnot.log")
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)
        except OSError as e:
            logger.warning(f"File logging disabled: {e}")

    logger.propagate = False
    return logger