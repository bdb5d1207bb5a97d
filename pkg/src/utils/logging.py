"""
Logging configuration for the condensation laboratory.

Provides centralized logging setup and configuration.
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Optional


def setup_logging(level: str = 'INFO', log_file: Optional[str] = None) -> None:
    """
    Setup logging configuration for the laboratory.

    Log records go to stderr; stdout is reserved for data output.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Path to log file (optional)
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.handlers.RotatingFileHandler(
            log_path,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5
        )
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    logging.getLogger('src.core').setLevel(numeric_level)
    logging.getLogger('src.cli').setLevel(logging.INFO if numeric_level > logging.DEBUG else numeric_level)

    # numpy/scipy stay quiet; networkx occasionally logs on import
    logging.getLogger('networkx').setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for the specified name.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)


def log_trial_event(logger: logging.Logger, kind: str, index: int, seed: int,
                    status: str, runtime: Optional[float] = None) -> None:
    """
    Log Monte-Carlo trial events with consistent formatting.

    Args:
        logger: Logger instance
        kind: Experiment kind
        index: Trial index
        seed: Derived 64-bit trial seed
        status: 'ok', 'error' or 'timed_out'
        runtime: Trial wall time in seconds (optional)
    """
    if runtime is not None:
        logger.debug(f"TRIAL: {kind} #{index} seed={seed:#018x} {status} in {runtime:.3f}s")
    else:
        logger.debug(f"TRIAL: {kind} #{index} seed={seed:#018x} {status}")
    if status != 'ok':
        logger.warning(f"TRIAL: {kind} #{index} finished with status {status}")


def log_scan_event(logger: logging.Logger, kind: str, point: float, details: dict = None) -> None:
    """
    Log one line per scan grid point.

    Args:
        logger: Logger instance
        kind: Scan kind
        point: Grid value (r or lambda)
        details: Additional details dictionary
    """
    if details:
        logger.info(f"SCAN: {kind} at {point:.6g} - {details}")
    else:
        logger.info(f"SCAN: {kind} at {point:.6g}")
