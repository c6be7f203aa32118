import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from rte_tools.exceptions import ConfigurationError


logger = logging.getLogger()

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int) -> int:
    """0 means one worker per available CPU."""
    if threads < 0:
        raise ConfigurationError(
            "threads", [f"threads must be nonnegative, got {threads}"]
        )
    return threads or os.cpu_count() or 1


def parallel_map(
    function: Callable[[T], R], items: Iterable[T], threads: int = 1
) -> List[R]:
    """Order-preserving map, on a thread pool when threads != 1."""
    items = list(items)
    workers = resolve_threads(threads)
    if workers == 1 or len(items) < 2:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))
