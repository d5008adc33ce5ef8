import functools
import hashlib
import json
import logging
import math
import os
import time
from typing import Any, Callable, Sequence

import dask
import numpy as np

from qkt import settings

logger = logging.getLogger(__name__)


def timer(func: Callable) -> Callable:
    """Log the wall time of an experiment runner, or its failure."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception:
            logger.exception(
                "'%s' failed after %.2f s", func.__name__, time.perf_counter() - start
            )
            raise
        logger.info("'%s' finished in %.2f s", func.__name__, time.perf_counter() - start)
        return result

    return wrapper


def to_python(obj: Any) -> Any:
    """Recursively convert numpy types (and tuples) to plain JSON-ready Python.

    Non-finite floats become None so that the JSON output stays standard.
    """
    if isinstance(obj, np.ndarray):
        return [to_python(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): to_python(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_python(v) for v in obj]
    return obj


def config_hash(payload: dict) -> str:
    """Short, stable hash of a configuration mapping."""
    canonical = json.dumps(to_python(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def worker_count() -> int | None:
    """Worker threads allowed by QKT_OE_THREADS; None means all cores."""
    raw = os.environ.get(settings.THREADS_ENV_VAR)
    if not raw:
        return None
    try:
        count = int(raw)
    except ValueError:
        logger.warning(
            "Ignoring non-integer %s=%r", settings.THREADS_ENV_VAR, raw
        )
        return None
    return max(count, 1)


def compute_ordered(tasks: Sequence) -> list:
    """Compute dask.delayed tasks on the threaded scheduler, keeping task order."""
    if not tasks:
        return []
    results = dask.compute(*tasks, scheduler="threads", num_workers=worker_count())
    return list(results)
