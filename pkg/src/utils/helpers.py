"""
Helper utilities for the condensation laboratory.

Common utility functions used across the project: seed splitting, number
formatting, list parsing and the CSV/JSON writers shared by every command.
"""

import csv
import json
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy import stats

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15

SCHEMA_VERSION = 1


def hash64(master_seed: int, index: int) -> int:
    """
    Derive the seed of trial `index` from a master seed.

    SplitMix64 finalizer applied to master_seed * GOLDEN64 + index. The
    function is published so other implementations can reproduce the
    stream structure.

    Args:
        master_seed: Master seed (any integer, reduced mod 2^64)
        index: Trial index

    Returns:
        64-bit unsigned seed
    """
    z = ((master_seed & MASK64) * GOLDEN64 + (index & MASK64)) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fmt(value: Any) -> str:
    """
    Format a value for data output; floats get 17 significant digits.

    Args:
        value: Value to format

    Returns:
        String representation
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, '.17g')
    if isinstance(value, np.floating):
        return fmt(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def parse_float_list(text: str) -> List[float]:
    """
    Parse a comma separated list of floats, or a `start:stop:count` range.

    Args:
        text: e.g. "0,1,5" or "0.5:2.5:20"

    Returns:
        List of floats

    Raises:
        ValueError: On malformed input
    """
    text = text.strip()
    if not text:
        raise ValueError("empty list")
    if ':' in text:
        parts = text.split(':')
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("range count must be positive")
        if count == 1:
            return [start]
        step = (stop - start) / (count - 1)
        return [start + i * step for i in range(count)]
    return [float(part) for part in text.split(',') if part.strip()]


def parse_int_list(text: str) -> List[int]:
    """
    Parse a comma separated list of integers.

    Args:
        text: e.g. "1,2,3"

    Returns:
        List of integers
    """
    values = [int(part) for part in text.split(',') if part.strip()]
    if not values:
        raise ValueError("empty list")
    return values


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    """
    Sample mean and standard error of the mean.

    Args:
        values: Observations

    Returns:
        (mean, stderr); stderr is 0 for a single or constant sample
    """
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        return float('nan'), float('nan')
    if np.all(data == data[0]):
        return float(data[0]), 0.0
    return float(np.mean(data)), float(stats.sem(data, ddof=1))


def config_header_lines(config: Dict[str, Any]) -> List[str]:
    """
    Render a resolved configuration as `# key=value` comment lines.

    Args:
        config: Flat configuration dictionary

    Returns:
        Header lines (without newlines), keys sorted
    """
    lines = []
    for key in sorted(config):
        value = config[key]
        if isinstance(value, (list, tuple)):
            value = ",".join(fmt(v) for v in value)
        else:
            value = fmt(value)
        lines.append(f"# {key}={value}")
    return lines


def write_csv(stream: TextIO, columns: Sequence[str], rows: Iterable[Sequence[Any]],
              config: Optional[Dict[str, Any]] = None) -> int:
    """
    Write a CSV table with an optional configuration header.

    Args:
        stream: Output text stream
        columns: Column names
        rows: Row sequences
        config: Resolved configuration echoed as comment lines (optional)

    Returns:
        Number of data rows written
    """
    if config:
        for line in config_header_lines(config):
            stream.write(line + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    count = 0
    for row in rows:
        writer.writerow([fmt(v) for v in row])
        count += 1
    return count


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [_jsonable(v) for v in items]
    if isinstance(value, float):
        if math.isfinite(value):
            return float(format(value, '.17g'))
        return fmt(value)
    if isinstance(value, np.floating):
        return _jsonable(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    return value


def write_json(stream: TextIO, payload: Dict[str, Any], config: Optional[Dict[str, Any]] = None) -> None:
    """
    Write a versioned JSON object.

    Args:
        stream: Output text stream
        payload: Result dictionary
        config: Resolved configuration echoed under the `config` key (optional)
    """
    document = {'schema': SCHEMA_VERSION}
    if config is not None:
        document['config'] = config
    document.update(payload)
    stream.write(json.dumps(_jsonable(document), indent=2, sort_keys=True) + "\n")
