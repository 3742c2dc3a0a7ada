"""Input validation and small runtime helpers."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .exceptions import ValidationError

T = TypeVar("T")
U = TypeVar("U")

THREADS_ENV = "CORESET_LAB_THREADS"


def check_rng(rng: int | np.random.Generator | None) -> np.random.Generator:
    """Coerce an int seed, Generator, or None into a numpy Generator."""
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng))
    raise ValidationError(f"expected an int seed or numpy Generator, got {type(rng).__name__}")


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Derive n independent deterministic streams from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def seed_of(rng: int | np.random.Generator | None) -> int | None:
    """The recordable seed, when the caller passed one."""
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return None


def check_points(X, name: str = "points") -> np.ndarray:
    """Validate and return a finite float64 (n, d) coordinate array."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be a 2-d array, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValidationError(f"{name} must contain at least one point")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite coordinates")
    return arr


def check_weights(weights, n: int) -> np.ndarray | None:
    if weights is None:
        return None
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != n:
        raise ValidationError(f"weights length {w.shape[0]} does not match point count {n}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValidationError("weights must be finite and nonnegative")
    return w


def near_int(value: float, rel_tol: float = 1e-9) -> float:
    """Snap a float to the nearest integer when it is within rounding noise.

    Quantities like eps**-2 land a few ulps off an exact integer; dyadic
    index formulas must not flip on that noise.
    """
    nearest = round(value)
    if abs(value - nearest) <= rel_tol * max(1.0, abs(value)):
        return float(nearest)
    return value


def floor_log2(value: float) -> int:
    if value <= 0:
        raise ValidationError("floor_log2 requires a positive argument")
    return int(math.floor(near_int(math.log2(value))))


def ceil_log2(value: float) -> int:
    if value <= 0:
        raise ValidationError("ceil_log2 requires a positive argument")
    return int(math.ceil(near_int(math.log2(value))))


def thread_count() -> int:
    """Task parallelism, controlled by CORESET_LAB_THREADS (0 = auto)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValidationError(f"{THREADS_ENV} must be >= 0")
    if n == 0:
        return os.cpu_count() or 1
    return n


def parallel_map(fn: Callable[[T], U], items: Sequence[T]) -> list[U]:
    """Map fn over items, threaded when configured. Output order matches input."""
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
