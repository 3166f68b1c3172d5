"""Sampling summaries of index estimates and relative efficiency of EB over ML."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "EfficiencyCell",
    "ErrorCell",
    "IndexSummary",
    "MissingCellsError",
    "Quantiles",
    "Scope",
    "partial_efficiency",
    "relative_efficiency",
    "summarize",
    "total_efficiency",
]


class MissingCellsError(ValueError):
    def __init__(self, missing: Sequence[Hashable]):
        self.missing = list(missing)
        super().__init__("missing scenario cells: " + ", ".join(map(str, self.missing)))


class Scope(str, enum.Enum):
    SPECIFIC = "Specific"
    PARTIAL = "Partial"
    TOTAL = "Total"


@dataclass(frozen=True)
class Quantiles:
    min: float
    q1: float
    median: float
    q3: float
    max: float


@dataclass(frozen=True)
class IndexSummary:
    """Sampling statistics of one index under one estimator and scenario.

    ``rmse`` uses the 1/m convention, so ``rmse**2 == bias**2 + sd**2 * (m-1)/m``.
    ``sd`` is None when m = 1.
    """

    mean: float
    sd: float | None
    bias: float
    rmse: float
    quantiles: Quantiles
    m: int
    true_value: float
    index: str | None = None
    estimator: str | None = None
    scenario_id: str | None = None

    @property
    def squared_error_sum(self) -> float:
        return self.m * self.rmse**2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "IndexSummary":
        d = dict(d)
        d["quantiles"] = Quantiles(**d["quantiles"])
        return cls(**d)


@dataclass(frozen=True)
class EfficiencyCell:
    index: str
    scope: Scope
    value: float
    scenario_id: str | None = None
    profile_kind: str | None = None


@dataclass(frozen=True)
class ErrorCell:
    """Sums of squared errors around the true value for both estimators."""

    sse_ml: float
    sse_eb: float
    m: int

    @classmethod
    def from_summaries(cls, ml: IndexSummary, eb: IndexSummary) -> "ErrorCell":
        if ml.m != eb.m:
            raise ValueError(f"replicate counts differ between estimators: {ml.m} vs {eb.m}")
        return cls(ml.squared_error_sum, eb.squared_error_sum, ml.m)


def summarize(
    values: Sequence[float],
    true_value: float,
    *,
    index: str | None = None,
    estimator: str | None = None,
    scenario_id: str | None = None,
) -> IndexSummary:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot summarize an empty sequence of values")
    if not math.isfinite(true_value):
        raise ValueError(f"true value must be finite, got {true_value!r}")
    m = int(v.size)
    mean = float(v.mean())
    err = v - true_value
    rmse = math.sqrt(float(err @ err) / m)
    sd = float(v.std(ddof=1)) if m > 1 else None
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return IndexSummary(
        mean=mean,
        sd=sd,
        bias=mean - true_value,
        rmse=rmse,
        quantiles=Quantiles(*map(float, q)),
        m=m,
        true_value=float(true_value),
        index=index,
        estimator=estimator,
        scenario_id=scenario_id,
    )


def relative_efficiency(rmse_ml: float, rmse_eb: float) -> float:
    """RMSE_ML / RMSE_EB; values above 1 favour the EB estimator."""
    if not (rmse_ml > 0 and rmse_eb > 0):
        raise ValueError(f"RMSEs must be strictly positive, got ML={rmse_ml!r}, EB={rmse_eb!r}")
    return rmse_ml / rmse_eb


def _pooled(cells: Mapping[Hashable, ErrorCell], expected: Iterable[Hashable] | None) -> float:
    if expected is not None:
        missing = [key for key in expected if key not in cells]
        if missing:
            raise MissingCellsError(missing)
    if not cells:
        raise MissingCellsError(["<all>"])
    ml = math.fsum(c.sse_ml for c in cells.values())
    eb = math.fsum(c.sse_eb for c in cells.values())
    return relative_efficiency(math.sqrt(ml), math.sqrt(eb))


def partial_efficiency(
    cells: Mapping[Hashable, ErrorCell], expected: Iterable[Hashable] | None = None
) -> float:
    """Efficiency pooled over the scenarios of one profile.

    ``cells`` maps scenario keys to squared-error sums; every key listed in
    ``expected`` must be present.
    """
    return _pooled(cells, expected)


def total_efficiency(
    cells: Mapping[Hashable, ErrorCell], expected: Iterable[Hashable] | None = None
) -> float:
    """Efficiency pooled over every (profile, scenario) cell of one index."""
    return _pooled(cells, expected)
