# /src/core/parallel.py

import concurrent.futures
from typing import Callable, Iterable, List, Optional, TypeVar

import psutil
from pydantic import ValidationError

from src.utils.config.settings import get_runtime_settings, settings
from src.utils.resources.logger import logger

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit value, then IONTRAP_THREADS, then parallel.threads, then the CPU count."""
    if threads is not None:
        return max(1, int(threads))

    try:
        env_threads = get_runtime_settings().threads
    except ValidationError:
        logger.warning("invalid_thread_override", variable="IONTRAP_THREADS")
        env_threads = None
    if env_threads:
        return max(1, env_threads)

    configured = settings.get("parallel.threads")
    if configured not in (None, ""):
        try:
            return max(1, int(configured))
        except (TypeError, ValueError):
            logger.warning("invalid_thread_setting", value=configured)

    return psutil.cpu_count() or 1


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item on a thread pool; results keep the input order."""
    work = list(items)
    workers = min(resolve_threads(threads), max(1, len(work)))
    if workers == 1:
        return [fn(item) for item in work]

    results: List[Optional[R]] = [None] * len(work)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(fn, item): index for index, item in enumerate(work)}
        for future in concurrent.futures.as_completed(futures):
            results[futures[future]] = future.result()
    return results  # type: ignore[return-value]
