"""Diversity and similarity indicators of composition vectors."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionMismatchError",
    "Index",
    "IndexValue",
    "as_simplex",
    "euclidean_similarity",
    "index_range",
    "pma",
    "shannon",
    "simpson",
]

SIMPLEX_ATOL = 1e-10


class DimensionMismatchError(ValueError):
    pass


class Index(str, enum.Enum):
    SHANNON = "Shannon"
    SIMPSON = "Simpson"
    PMA = "PMA"
    EUCLIDEAN = "Euclidean"

    @property
    def needs_reference(self) -> bool:
        return self in (Index.PMA, Index.EUCLIDEAN)


@dataclass(frozen=True)
class IndexValue:
    index: Index
    value: float


def index_range(index: Index, k: int) -> tuple[float, float]:
    """Attainable range of ``index`` over the (k-1)-simplex."""
    return {
        Index.SHANNON: (0.0, math.log(k)),
        Index.SIMPSON: (1.0 / k, 1.0),
        Index.PMA: (0.0, 1.0),
        Index.EUCLIDEAN: (-1.0, 1.0),
    }[Index(index)]


def as_simplex(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"expected a one-dimensional composition vector, got shape {arr.shape}")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("composition entries must lie in [0, 1]")
    if abs(arr.sum() - 1.0) > SIMPLEX_ATOL:
        raise ValueError(f"composition sums to {arr.sum()!r}, not 1")
    return arr


def _pair(p_hat, p_star) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_simplex(p_hat), as_simplex(p_star)
    if a.size != b.size:
        raise DimensionMismatchError(f"compositions have different k: {a.size} vs {b.size}")
    return a, b


def shannon(p) -> float:
    """Shannon entropy in nats; zero proportions contribute nothing."""
    p = as_simplex(p)
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log(nz)))
    return max(h, 0.0)


def simpson(p) -> float:
    """Sum of squared proportions (probability two draws share a category)."""
    p = as_simplex(p)
    return float(p @ p)


def pma(p_hat, p_star) -> float:
    """Percent model affinity, one minus half the L1 distance."""
    a, b = _pair(p_hat, p_star)
    return 1.0 - 0.5 * float(np.abs(a - b).sum())


def euclidean_similarity(p_hat, p_star) -> float:
    """One minus the squared Euclidean distance."""
    a, b = _pair(p_hat, p_star)
    d = a - b
    return 1.0 - float(d @ d)


def compute_all(p_hat, p_star=None) -> dict[Index, float]:
    out = {Index.SHANNON: shannon(p_hat), Index.SIMPSON: simpson(p_hat)}
    if p_star is not None:
        out[Index.PMA] = pma(p_hat, p_star)
        out[Index.EUCLIDEAN] = euclidean_similarity(p_hat, p_star)
    return out
