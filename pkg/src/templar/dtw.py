"""Dynamic time warping over feature sequences.

Cumulative cost follows the three-predecessor recurrence

    D[i, j] = d(i, j) + min(D[i-1, j], D[i-1, j-1], D[i, j-1])

with ``D[0, 0] = d(0, 0)``. Indices are 0-based throughout; the warp path
runs from ``(0, 0)`` to ``(I-1, J-1)``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from .errors import (
    EmptyInputError,
    IncompatibleFeaturesError,
    InfeasibleBandError,
    ShapeError,
)
from .mfcc import FeatureMatrix


class Metric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    SQUARED_EUCLIDEAN = "sqeuclidean"
    MANHATTAN = "manhattan"


class Normalize(str, enum.Enum):
    NONE = "none"
    PATH_LENGTH_AVERAGE = "path-length"


@dataclass(frozen=True)
class DtwOptions:
    """Matching options.

    ``band_radius`` is a Sakoe-Chiba half-width: only cells with
    ``|i - j| <= band_radius`` are reachable. ``strict`` turns a config
    fingerprint mismatch between inputs into an error instead of a warning.
    """

    metric: Metric = Metric.EUCLIDEAN
    band_radius: int | None = None
    normalize: Normalize = Normalize.NONE
    return_path: bool = False
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        object.__setattr__(self, "normalize", Normalize(self.normalize))
        if self.band_radius is not None and self.band_radius < 0:
            raise ValueError("band_radius must be non-negative")


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: list[tuple[int, int]] | None = None
    cells_evaluated: int = 0


def _as_sequence(x) -> tuple[np.ndarray, int | None]:
    if isinstance(x, FeatureMatrix):
        return np.asarray(x.frames, dtype=np.float64), x.config_fingerprint
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"expected a 1-D or 2-D sequence, got shape {arr.shape}")
    return arr, None


def local_distance(x, y, metric: Metric = Metric.EUCLIDEAN) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise ShapeError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(pairwise_distances(x[None, :], y[None, :], metric)[0, 0])


def pairwise_distances(a: np.ndarray, b: np.ndarray, metric: Metric) -> np.ndarray:
    """Local cost matrix ``C[i, j] = d(a[i], b[j])``."""
    metric = Metric(metric)
    diff = a[:, None, :] - b[None, :, :]
    if metric is Metric.MANHATTAN:
        return np.abs(diff).sum(axis=2)
    sq = (diff * diff).sum(axis=2)
    return sq if metric is Metric.SQUARED_EUCLIDEAN else np.sqrt(sq)


@numba.njit(cache=False, nogil=True)
def _accumulate(cost, band):
    n, m = cost.shape
    acc = np.full((n, m), np.inf)
    cells = 0
    for i in range(n):
        if band < 0:
            lo, hi = 0, m
        else:
            lo, hi = max(0, i - band), min(m, i + band + 1)
        for j in range(lo, hi):
            cells += 1
            if i == 0 and j == 0:
                acc[i, j] = cost[i, j]
                continue
            best = np.inf
            if i > 0 and acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if i > 0 and j > 0 and acc[i - 1, j - 1] < best:
                best = acc[i - 1, j - 1]
            if j > 0 and acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost[i, j] + best
    return acc, cells


def cumulative_cost(cost: np.ndarray, band_radius: int | None = None) -> tuple[np.ndarray, int]:
    """Fill the full accumulated-cost matrix; returns it with the in-band cell count."""
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    band = -1 if band_radius is None else int(band_radius)
    return _accumulate(cost, band)


def backtrack(acc: np.ndarray) -> list[tuple[int, int]]:
    """Recover the optimal path; ties prefer diagonal, then (i, j-1), then (i-1, j)."""
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        candidates = []
        if i > 0 and j > 0:
            candidates.append((acc[i - 1, j - 1], i - 1, j - 1))
        if j > 0:
            candidates.append((acc[i, j - 1], i, j - 1))
        if i > 0:
            candidates.append((acc[i - 1, j], i - 1, j))
        # min() keeps the first of equal keys, which encodes the tie order
        _, i, j = min(candidates, key=lambda c: c[0])
        path.append((i, j))
    path.reverse()
    return path


def dtw_distance(a, b, opts: DtwOptions = DtwOptions()) -> DtwResult:
    """Global DTW distance between two sequences.

    ``a`` and ``b`` are :class:`FeatureMatrix` objects or array-likes of
    shape ``(T,)`` / ``(T, dim)``. With ``Normalize.PATH_LENGTH_AVERAGE`` the
    distance is divided by ``I + J``.

    Raises:
        EmptyInputError: either sequence has no frames.
        ShapeError: feature dimensions differ.
        IncompatibleFeaturesError: fingerprints differ and ``opts.strict``.
        InfeasibleBandError: the band excludes the final cell.
    """
    xa, fa = _as_sequence(a)
    xb, fb = _as_sequence(b)
    if xa.shape[0] == 0 or xb.shape[0] == 0:
        raise EmptyInputError("DTW needs non-empty sequences")
    if xa.shape[1] != xb.shape[1]:
        raise ShapeError(f"feature dimension mismatch: {xa.shape[1]} vs {xb.shape[1]}")
    if fa is not None and fb is not None and fa != fb:
        msg = f"config fingerprints differ: {fa:016x} vs {fb:016x}"
        if opts.strict:
            raise IncompatibleFeaturesError(msg)
        warnings.warn(msg, stacklevel=2)

    n, m = xa.shape[0], xb.shape[0]
    if opts.band_radius is not None and abs(n - m) > opts.band_radius:
        raise InfeasibleBandError(
            f"band radius {opts.band_radius} cannot reach cell ({n - 1}, {m - 1})"
        )
    acc, cells = cumulative_cost(pairwise_distances(xa, xb, opts.metric), opts.band_radius)
    distance = float(acc[-1, -1])
    if opts.normalize is Normalize.PATH_LENGTH_AVERAGE:
        distance /= n + m
    path = backtrack(acc) if opts.return_path else None
    return DtwResult(distance, path, int(cells))
