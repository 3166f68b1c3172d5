"""Scenario-grid driver: simulate, estimate with ML and EB, score, summarize."""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evaluation import (
    EfficiencyCell,
    ErrorCell,
    IndexSummary,
    Scope,
    partial_efficiency,
    relative_efficiency,
    summarize,
    total_efficiency,
)
from .indices import Index, compute_all
from .model import (
    EmptySampleError,
    EtaSolverOptions,
    SolverStatus,
    eb_proportions,
    estimate_eta,
    mle_proportions,
)
from .simulation import Profile, Scenario, make_profile, run_scenario

log = logging.getLogger(__name__)

ESTIMATORS = ("EB", "ML")
INDICES = tuple(Index)
EMPTY_SAMPLE = "EmptySample"
EXCLUDED_STATUSES = frozenset({EMPTY_SAMPLE, SolverStatus.MAX_ITERATIONS.value})


class NumericalFailure(RuntimeError):
    pass


@dataclass
class CellResult:
    scenario: Scenario
    summaries: dict[tuple[str, str], IndexSummary]
    status_counts: dict[str, int]
    excluded: int
    values: dict[tuple[str, str], np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def scenario_id(self) -> str:
        return self.scenario.scenario_id

    def error_cell(self, index: Index | str) -> ErrorCell:
        index = Index(index).value
        return ErrorCell.from_summaries(self.summaries[(index, "ML")], self.summaries[(index, "EB")])


def true_values(profile: Profile) -> dict[Index, float]:
    return compute_all(profile.pi_star, profile.pi_star)


def run_cell(
    scenario: Scenario,
    opts: EtaSolverOptions | None = None,
    keep_values: bool = False,
) -> CellResult:
    opts = opts or EtaSolverOptions()
    profile = make_profile(scenario.profile_kind, scenario.k)
    truth = true_values(profile)
    rows: dict[str, list[list[float]]] = {"ML": [], "EB": []}
    statuses: Counter[str] = Counter()
    for sample in run_scenario(scenario, profile):
        x = sample.counts
        try:
            ml = mle_proportions(x)
        except EmptySampleError:
            statuses[EMPTY_SAMPLE] += 1
            continue
        sol = estimate_eta(x, opts)
        statuses[sol.status.value] += 1
        if sol.status.value in EXCLUDED_STATUSES:
            log.warning("%s replicate %d excluded: %s", scenario.scenario_id, sample.replicate_index, sol.status.value)
            continue
        eb = eb_proportions(x, sol.eta)
        for label, est in (("ML", ml), ("EB", eb)):
            vals = compute_all(est.proportions, profile.pi_star)
            rows[label].append([vals[i] for i in INDICES])

    excluded = sum(statuses[s] for s in EXCLUDED_STATUSES)
    if not rows["ML"]:
        raise NumericalFailure(f"{scenario.scenario_id}: every replicate was excluded ({dict(statuses)})")

    summaries = {}
    values = {}
    for label in ESTIMATORS:
        table = np.asarray(rows[label])
        for col, index in enumerate(INDICES):
            key = (index.value, label)
            summaries[key] = summarize(
                table[:, col], truth[index],
                index=index.value, estimator=label, scenario_id=scenario.scenario_id,
            )
            if keep_values:
                values[key] = table[:, col]
    return CellResult(scenario, summaries, dict(sorted(statuses.items())), excluded, values)


def _run_cell_star(args):
    return run_cell(*args)


def run_grid(
    scenarios: Sequence[Scenario],
    opts: EtaSolverOptions | None = None,
    threads: int = 1,
) -> list[CellResult]:
    """Run every scenario; results come back in declaration order."""
    opts = opts or EtaSolverOptions()
    jobs = [(s, opts) for s in scenarios]
    if threads <= 1 or len(jobs) <= 1:
        return [_run_cell_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_cell_star, jobs))


def efficiency_cells(results: Sequence[CellResult]) -> list[EfficiencyCell]:
    """Specific, partial (per profile) and total efficiency for every index."""
    out: list[EfficiencyCell] = []
    profiles = list(dict.fromkeys(r.scenario.profile_kind.value for r in results))
    for index in INDICES:
        by_profile: dict[str, dict[str, ErrorCell]] = {p: {} for p in profiles}
        for r in results:
            cell = r.error_cell(index)
            by_profile[r.scenario.profile_kind.value][r.scenario_id] = cell
            out.append(EfficiencyCell(
                index.value, Scope.SPECIFIC,
                _safe_ratio(r.summaries[(index.value, "ML")].rmse, r.summaries[(index.value, "EB")].rmse),
                scenario_id=r.scenario_id, profile_kind=r.scenario.profile_kind.value,
            ))
        for p in profiles:
            out.append(EfficiencyCell(
                index.value, Scope.PARTIAL, _guard(partial_efficiency, by_profile[p]), profile_kind=p,
            ))
        pooled = {(p, sid): c for p, cells in by_profile.items() for sid, c in cells.items()}
        out.append(EfficiencyCell(index.value, Scope.TOTAL, _guard(total_efficiency, pooled)))
    return out


def _safe_ratio(ml: float, eb: float) -> float | None:
    # a zero RMSE (e.g. m = 1 with an exact estimate) has no defined ratio
    try:
        return relative_efficiency(ml, eb)
    except ValueError:
        return None


def _guard(fn, cells) -> float | None:
    try:
        return fn(cells)
    except ValueError:
        return None
