"""Dynamic time warping between 1-D curves (absolute-difference local cost)."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from mdkin.errors import DomainError

try:  # optional compiled kernel; the numpy path below is the fallback
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None


@dataclass(frozen=True)
class WarpResult:
    distance: float
    path: tuple  # ((i0, j0), ..., (n-1, m-1))


def _as_series(x, name):
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _accumulate_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Accumulated-cost matrix, filled one anti-diagonal at a time.

    Each cell is ``|a_i - b_j| + min(diag, up, left)`` evaluated with the
    same float operations as the textbook double loop, so results are
    identical to it; only the evaluation order is vectorised.
    """
    n, m = a.size, b.size
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for k in range(n + m - 1):
        i = np.arange(max(0, k - m + 1), min(n, k + 1))
        j = k - i
        best = np.minimum(np.minimum(acc[i, j], acc[i, j + 1]), acc[i + 1, j])
        acc[i + 1, j + 1] = np.abs(a[i] - b[j]) + best
    return acc


def _accumulate_loop(a, b):
    n, m = a.size, b.size
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(n):
        for j in range(m):
            best = min(min(acc[i, j], acc[i, j + 1]), acc[i + 1, j])
            acc[i + 1, j + 1] = abs(a[i] - b[j]) + best
    return acc


_accumulate = _accumulate_numpy if njit is None else njit(cache=True)(_accumulate_loop)


def _traceback(acc: np.ndarray) -> tuple:
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i - 1, j - 1)]
    while i > 1 or j > 1:
        diag, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
        # ties prefer the diagonal, then the vertical (i-1) move
        if diag <= up and diag <= left:
            i, j = i - 1, j - 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
        path.append((i - 1, j - 1))
    return tuple(reversed(path))


def dtw_distance(a: Sequence[float], b: Sequence[float]) -> WarpResult:
    """Full-alignment DTW with steps (1,0), (0,1), (1,1) and no window."""
    a = _as_series(a, "a")
    b = _as_series(b, "b")
    acc = _accumulate(a, b)
    return WarpResult(float(acc[-1, -1]), _traceback(acc))


def pairwise_dtw_stats(samples: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Mean and sample standard deviation of DTW distance over all pairs.

    Uses every unordered pair once; the std has an ``(npairs - 1)``
    denominator and is 0 when there is a single pair.
    """
    if len(samples) < 2:
        raise DomainError("at least two samples are required")
    d = np.array([dtw_distance(x, y).distance for x, y in combinations(samples, 2)])
    std = float(np.std(d, ddof=1)) if d.size > 1 else 0.0
    return float(d.mean()), std
