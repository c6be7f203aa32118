import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pyarrow as pa
from pyarrow import csv

from rte_tools.exceptions import FactorizationFormatError
from rte_tools.rsm import serialization
from rte_tools.rsm.factorization import MultilevelFactorization


logger = logging.getLogger()

CACHE_ENVIRONMENT_VARIABLE = "RTE_CACHE_DIR"
CHUNK_SIZE = 32768
Cell = Union[float, int, str, None]


def load_json(filepath: Path) -> dict:
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            return json.load(f)
    except Exception as e:
        logger.error(f"Failed to open file at {filepath}")
        raise e


def write_json(filepath: Path, content: dict) -> None:
    with open(filepath, "w", encoding="utf-8") as json_file:
        json.dump(content, json_file, indent=4, ensure_ascii=False)


def _format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_table(filepath: Path, columns: Dict[str, Sequence[Cell]]) -> None:
    """
    Comma separated table with an unquoted header row. Floats are written
    with 17 significant digits, missing values as empty cells.
    """
    table = pa.table(
        {
            name: pa.array([_format_cell(v) for v in values], pa.string())
            for name, values in columns.items()
        }
    )
    header = ",".join(columns) + "\n"
    with open(filepath, "wb") as f:
        f.write(header.encode("utf-8"))
        csv.write_csv(
            table,
            f,
            write_options=csv.WriteOptions(
                include_header=False, quoting_style="none"
            ),
        )
    logger.debug(f"Wrote {table.num_rows} rows to {filepath}")


def write_grid(filepath: Path, grid: np.ndarray) -> None:
    """(I, I) cell grid indexed [ix, iy] as ix, iy, x, y, value rows."""
    I = grid.shape[0]
    ix, iy = np.meshgrid(np.arange(I), np.arange(I), indexing="ij")
    write_table(
        filepath,
        {
            "ix": ix.ravel(),
            "iy": iy.ravel(),
            "x": (ix.ravel() + 0.5) / I,
            "y": (iy.ravel() + 0.5) / I,
            "value": np.asarray(grid).ravel(),
        },
    )


def calculate_checksum(filepath: Path) -> str:
    """
    Reads a file in chunks and returns the MD5 hash of the file
    """
    hash_md5 = hashlib.md5()
    with open(filepath, "rb") as f:
        for chunk in iter(lambda: f.read(CHUNK_SIZE), b""):
            hash_md5.update(chunk)
    return hash_md5.hexdigest()


def content_hash(content: dict) -> str:
    """MD5 of the canonical JSON form of content."""
    canonical = json.dumps(content, sort_keys=True, separators=(",", ":"))
    return hashlib.md5(canonical.encode("utf-8")).hexdigest()


def cache_directory() -> Optional[Path]:
    directory = os.environ.get(CACHE_ENVIRONMENT_VARIABLE)
    if not directory:
        return None
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cache_file(directory: Path, key: str) -> Path:
    return directory / f"{key}.rsmf"


def _checksum_file(directory: Path, key: str) -> Path:
    return directory / f"{key}.md5"


def load_factorization(key: str) -> Optional[MultilevelFactorization]:
    """
    Cached factorization for key, or None. Files that are unreadable or
    do not match their stored checksum are ignored.
    """
    directory = cache_directory()
    if directory is None:
        return None
    filepath = _cache_file(directory, key)
    if not filepath.exists():
        logger.info(f"No cached factorization for {key}")
        return None
    checksum_file = _checksum_file(directory, key)
    if checksum_file.exists():
        expected = checksum_file.read_text(encoding="utf-8").strip()
        if calculate_checksum(filepath) != expected:
            logger.warning(f"Checksum mismatch for cache file {filepath}")
            return None
    try:
        factorization = serialization.from_bytes(filepath.read_bytes())
    except FactorizationFormatError:
        logger.warning(f"Ignoring unreadable cache file {filepath}")
        return None
    logger.info(f"Loaded cached factorization from {filepath}")
    return factorization


def store_factorization(
    key: str, factorization: MultilevelFactorization
) -> Optional[Path]:
    directory = cache_directory()
    if directory is None:
        return None
    filepath = _cache_file(directory, key)
    filepath.write_bytes(serialization.to_bytes(factorization))
    _checksum_file(directory, key).write_text(
        calculate_checksum(filepath), encoding="utf-8"
    )
    logger.info(f"Stored factorization in {filepath}")
    return filepath
