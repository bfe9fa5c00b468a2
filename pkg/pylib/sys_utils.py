# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Shared constants and small helpers for the tuning tools."""

import csv
import json
import logging
import math
import os
import sys
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

LOGGER_ROOT: str = 'pylib'
LOG_FORMAT: str = '[%(levelname)s] %(message)s'

DEBUG_ENV: str = 'SVCTUNE_DEBUG'
DATA_DIR_ENV: str = 'SVCTUNE_DATA_DIR'

DEFAULT_SEED: int = 20240101
SIGNIFICANT_DIGITS: int = 6
VERSION: str = '0.1.0'

# Dataset name -> (l1, l2, n): CV pool size, hold-out size, feature count
DATASET_TABLE: Dict[str, Tuple[int, int, int]] = {
    'fourclass': (735, 127, 2),
    'diabetes': (540, 228, 8),
    'breast-cancer': (540, 143, 10),
    'heart': (162, 108, 13),
    'australian': (600, 90, 14),
    'svmguide4': (30, 11, 22),
    'german.numer': (600, 400, 24),
    'ionosphere': (243, 108, 34),
    'sonar': (150, 58, 60),
    'phishing': (1500, 500, 68),
    'a2a': (1800, 465, 119),
    'a3a': (1200, 985, 122),
    'a4a': (1200, 581, 122),
    'a6a': (2250, 8970, 122),
    'a7a': (2700, 13400, 122),
    'a9a': (3300, 29261, 123),
    'w1a': (1500, 977, 300),
    'w2a': (1800, 1670, 300),
    'w4a': (3000, 4366, 300),
    'w5a': (3000, 6888, 300),
}

# Alternate file names of the LIBSVM-hosted copies
DATASET_ALIASES: Dict[str, str] = {
    'german.number': 'german.numer',
    'breast_cancer': 'breast-cancer',
    'diabetes_scale': 'diabetes',
    'heart_scale': 'heart',
    'fourclass_scale': 'fourclass',
    'breast-cancer_scale': 'breast-cancer',
    'australian_scale': 'australian',
    'ionosphere_scale': 'ionosphere',
    'sonar_scale': 'sonar',
}

DEFAULT_C_GRID: Tuple[float, ...] = (
    0.5e-4,
    1e-4,
    0.5e-3,
    1e-3,
    0.5e-2,
    1e-2,
    0.5e-1,
    1e-1,
    0.5,
    1.0,
    0.5e1,
    1e1,
    0.5e2,
    1e2,
    0.5e3,
    1e3,
    0.5e4,
    1e4,
)


def normpath(path: str) -> str:
    """Normalize path using forward slashes for cross-platform consistency."""
    return os.path.normpath(path).replace('\\', '/')


def dataset_key(path: str) -> str:
    """Map a dataset file path to its `DATASET_TABLE` key (or the bare stem)."""
    name = os.path.basename(path)
    for ext in ('.txt', '.libsvm', '.svm', '.data'):
        if name.endswith(ext):
            name = name[: -len(ext)]
            break
    name = DATASET_ALIASES.get(name, name)
    return name


def lookup_sizes(path: str) -> Optional[Tuple[int, int, int]]:
    """Look up (l1, l2, n) of a benchmark dataset by file name."""
    return DATASET_TABLE.get(dataset_key(path))


def setup_logging(verbose: bool = False, quiet: bool = False) -> logging.Logger:
    """Install the stderr handler of the `pylib` logger tree."""
    logger = logging.getLogger(LOGGER_ROOT)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    if quiet:
        logger.setLevel(logging.ERROR)
    elif verbose:
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.INFO)
    logger.propagate = False
    return logger


def debug_enabled() -> bool:
    return os.environ.get(DEBUG_ENV) in ('1', 'ON')


def fmt_num(value: Any, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Format a number with a fixed count of significant digits."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return str(value)
    return f'{value:.{digits}g}'


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and dataclass-like containers for JSON."""
    import numpy as np

    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def ensure_dir(path: str) -> str:
    if path and not os.path.isdir(path):
        os.makedirs(path, exist_ok=True)
    return path


def write_json(path: str, data: Any) -> None:
    ensure_dir(os.path.dirname(path))
    with open(path, 'w', encoding='utf-8', newline='\n') as fp:
        json.dump(to_jsonable(data), fp, indent=2, sort_keys=True)
        fp.write('\n')


def read_json(path: str) -> Any:
    with open(path, 'r', encoding='utf-8') as fp:
        return json.load(fp)


def write_csv(
    path: str,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> None:
    """Write rows as CSV, formatting numbers with `fmt_num`."""
    ensure_dir(os.path.dirname(path))
    with open(path, 'w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([fmt_num(x) if not isinstance(x, str) else x for x in row])


def format_table(header: Sequence[str], rows: List[Sequence[Any]]) -> str:
    """Render rows as a plain fixed-width text table."""
    cells = [list(header)] + [
        [fmt_num(x) if not isinstance(x, str) else x for x in row] for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for i, row in enumerate(cells):
        lines.append('  '.join(c.rjust(w) for c, w in zip(row, widths)))
        if i == 0:
            lines.append('  '.join('-' * w for w in widths))
    return '\n'.join(lines)
