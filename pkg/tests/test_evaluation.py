import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebdiversity.evaluation import (
    ErrorCell,
    IndexSummary,
    MissingCellsError,
    partial_efficiency,
    relative_efficiency,
    summarize,
    total_efficiency,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_summarize_constant():
    s = summarize([2.5, 2.5, 2.5], 2.5)
    assert (s.mean, s.sd, s.bias, s.rmse) == (2.5, 0.0, 0.0, 0.0)
    assert s.quantiles.min == s.quantiles.max == 2.5


def test_summarize_examples():
    assert summarize([0.0, 2.0], 1.0).rmse == pytest.approx(1.0)
    s = summarize([1.0, 3.0], 0.0)
    assert s.rmse == pytest.approx(math.sqrt(5))
    assert s.bias == pytest.approx(2.0)
    assert s.sd == pytest.approx(math.sqrt(2))
    assert s.quantiles.median == pytest.approx(2.0)
    assert s.quantiles.q1 == pytest.approx(1.5)


def test_summarize_single_value_has_no_sd():
    s = summarize([0.4], 0.5)
    assert s.sd is None
    assert s.rmse == pytest.approx(0.1)


def test_summarize_rejects_empty_and_nonfinite_truth():
    with pytest.raises(ValueError):
        summarize([], 0.0)
    with pytest.raises(ValueError):
        summarize([1.0], float("nan"))


def test_summary_round_trip():
    s = summarize([0.1, 0.4, 0.2], 0.3, index="shannon", estimator="EB", scenario_id="x")
    assert IndexSummary.from_dict(s.to_dict()) == s


@settings(max_examples=200, deadline=None)
@given(values=st.lists(finite, min_size=2, max_size=50), truth=finite)
def test_rmse_decomposition(values, truth):
    s = summarize(values, truth)
    m = s.m
    lhs = s.rmse**2
    rhs = s.bias**2 + s.sd**2 * (m - 1) / m
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
    q = s.quantiles
    assert q.min <= q.q1 <= q.median <= q.q3 <= q.max
    assert q.min <= s.mean <= q.max or math.isclose(s.mean, q.min) or math.isclose(s.mean, q.max)


def test_relative_efficiency_examples():
    assert relative_efficiency(0.908, 0.203) == pytest.approx(4.47, abs=0.01)
    assert relative_efficiency(0.639, 0.015) == pytest.approx(42.6, abs=0.1)
    assert relative_efficiency(1.0, 1.0) == 1.0


@pytest.mark.parametrize("ml, eb", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (1.0, -0.5)])
def test_relative_efficiency_rejects_nonpositive(ml, eb):
    with pytest.raises(ValueError):
        relative_efficiency(ml, eb)


def test_partial_of_single_cell_equals_specific():
    ml = summarize([0.0, 2.0, 1.5], 1.0)
    eb = summarize([0.9, 1.1, 1.2], 1.0)
    cell = ErrorCell.from_summaries(ml, eb)
    assert partial_efficiency({"a": cell}) == pytest.approx(relative_efficiency(ml.rmse, eb.rmse))


def test_missing_cells_are_named():
    cell = ErrorCell(1.0, 0.5, 10)
    with pytest.raises(MissingCellsError) as info:
        partial_efficiency({"a": cell}, expected=["a", "b", "c"])
    assert info.value.missing == ["b", "c"]
    with pytest.raises(MissingCellsError):
        total_efficiency({})


def test_error_cell_requires_matching_m():
    with pytest.raises(ValueError):
        ErrorCell.from_summaries(summarize([1.0, 2.0], 1.0), summarize([1.0], 1.0))


@settings(max_examples=100, deadline=None)
@given(
    errs=st.lists(
        st.tuples(
            st.lists(st.floats(-5, 5), min_size=3, max_size=3),
            st.lists(st.floats(-5, 5), min_size=3, max_size=3),
        ),
        min_size=1,
        max_size=9,
    ),
    scale=st.floats(1e-3, 1e3),
)
def test_pooling_identity_and_scale_invariance(errs, scale):
    ml_all = np.concatenate([np.array(a) for a, _ in errs])
    eb_all = np.concatenate([np.array(b) for _, b in errs])
    if not (np.any(ml_all) and np.any(eb_all)):
        return
    cells = {
        i: ErrorCell.from_summaries(summarize(a, 0.0), summarize(b, 0.0)) for i, (a, b) in enumerate(errs)
    }
    expected = math.sqrt(ml_all @ ml_all) / math.sqrt(eb_all @ eb_all)
    assert total_efficiency(cells) == pytest.approx(expected, rel=1e-9)
    scaled = {i: ErrorCell(c.sse_ml * scale**2, c.sse_eb * scale**2, c.m) for i, c in cells.items()}
    assert partial_efficiency(scaled) == pytest.approx(partial_efficiency(cells), rel=1e-9)
