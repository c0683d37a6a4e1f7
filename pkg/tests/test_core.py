import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rfspp.core import (
    Dataset,
    PointPattern,
    UnitContext,
    dumps_jsonl,
    loads_jsonl,
    rescale_pattern,
)
from rfspp.errors import DataValidationError, DimensionMismatchError


def test_rescale_meters_to_centimeters():
    p = rescale_pattern(PointPattern([[0.8]]), 100)
    assert p.points.tolist() == [[80.0]]


def test_rescale_identity_and_elementwise():
    p = PointPattern([[1, 2], [3, 4]])
    assert rescale_pattern(p, 1) == p
    assert rescale_pattern(p, 2).points.tolist() == [[2, 4], [6, 8]]


@pytest.mark.parametrize("s", [0, -1.5])
def test_rescale_rejects_nonpositive(s):
    with pytest.raises(ValueError):
        rescale_pattern(PointPattern([[1.0]]), s)


@settings(max_examples=50, deadline=None)
@given(
    arrays(float, st.tuples(st.integers(0, 6), st.integers(1, 3)),
           elements=st.floats(-1e6, 1e6, allow_nan=False)),
    st.floats(1e-3, 1e3),
)
def test_rescale_round_trip(x, s):
    p = PointPattern(x, dim=x.shape[1])
    back = rescale_pattern(rescale_pattern(p, s), 1 / s)
    assert len(back) == len(p)
    np.testing.assert_allclose(back.points, p.points, rtol=1e-12, atol=1e-300)


def test_empty_pattern_is_valid():
    p = PointPattern([], dim=3)
    assert len(p) == 0 and p.dim == 3
    with pytest.raises(DataValidationError):
        PointPattern([])


def test_points_are_read_only():
    p = PointPattern([[1.0, 2.0]])
    with pytest.raises(ValueError):
        p.points[0, 0] = 5


def test_duplicates_kept_and_same_set():
    p = PointPattern([[1.0], [1.0], [2.0]])
    q = PointPattern([[2.0], [1.0], [1.0]])
    assert len(p) == 3
    assert p.same_set(q) and p != q
    assert not p.same_set(PointPattern([[1.0], [2.0], [2.0]]))


def test_unit_context_validation():
    assert UnitContext().hyper_volume_unit == 1.0
    for bad in (0.0, -1.0, float("inf")):
        with pytest.raises(ValueError):
            UnitContext(bad)


def test_dataset_invariants():
    a, b = PointPattern([[0.0, 1.0]]), PointPattern([[1.0]])
    with pytest.raises(DimensionMismatchError):
        Dataset.from_patterns([a, b])
    with pytest.raises(DataValidationError):
        Dataset.from_patterns([a], labels=[3], class_count=2)
    ds = Dataset.from_patterns([a, PointPattern([], dim=2)], labels=[1, 2])
    assert ds.class_count == 2
    assert ds.cardinalities.tolist() == [1, 0]
    assert ds.pooled_features().shape == (1, 2)


def test_jsonl_round_trip_with_empty_pattern():
    text = (
        '{"id": "a", "label": 1, "points": [[0.1, 0.2], [0.3, 0.4]]}\n'
        '{"id": "b", "label": null, "points": []}\n'
    )
    ds = loads_jsonl(text)
    assert ds.dim == 2 and len(ds) == 2
    assert ds.items[1].label is None and len(ds.items[1].pattern) == 0
    again = loads_jsonl(dumps_jsonl(ds))
    assert [it.id for it in again] == ["a", "b"]
    assert np.array_equal(again.items[0].pattern.points, ds.items[0].pattern.points)


def test_jsonl_full_precision():
    x = 0.1 + 0.2
    ds = loads_jsonl('{"id": "a", "label": null, "points": [[%r]]}\n' % x)
    assert loads_jsonl(dumps_jsonl(ds)).items[0].pattern.points[0, 0] == x


@pytest.mark.parametrize(
    "text",
    [
        '{"id": "a", "points": [[1, 2]]}\n{"id": "b", "points": [[1]]}\n',
        '{"id": "a", "points": [[1, 2], [3]]}\n',
        "not json\n",
        '{"id": "a", "label": "x", "points": [[1]]}\n',
        '{"id": "a", "points": []}\n',
        "",
    ],
)
def test_jsonl_rejects_malformed(text):
    with pytest.raises(DataValidationError):
        loads_jsonl(text)
