from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from usageprofiles import vectorspace
from usageprofiles.sessionize import EmptyInput, Hit, Session, UserKey
from usageprofiles.vectorspace import (
    DimensionMismatch, SessionMatrix, UrlIndex, WeightingMode, build_matrix, squared_euclidean,
)

T0 = datetime(2011, 2, 1, tzinfo=timezone.utc)


def session(*hits):
    """hits as (url, seconds, bytes)."""
    return Session(UserKey("x", None), tuple(Hit(u, T0 + timedelta(seconds=s), b) for u, s, b in hits))


def test_binary_vector():
    # index order a, b, c comes from first appearance
    sessions = [session(("a", 0, 1), ("b", 1, 1)), session(("c", 0, 1), ("a", 5, 1))]
    mat = build_matrix(sessions, "binary")
    assert mat.index.urls == ["a", "b", "c"]
    assert mat.data[1].tolist() == [1, 0, 1]


def test_frequency_counts_repeats():
    mat = build_matrix([session(("a", 0, None), ("a", 10, None), ("b", 20, None))], "frequency")
    assert mat.data[0].tolist() == [2, 1]


def test_duration_with_mean_fallback():
    mat = build_matrix([session(("a", 0, None), ("b", 60, None))], WeightingMode.DURATION)
    assert mat.data[0].tolist() == [60, 60]


def test_duration_single_hit_is_zero_and_repeats_sum():
    mat = build_matrix([session(("a", 0, None)), session(("a", 0, None), ("b", 10, None), ("a", 40, None))], "duration")
    assert mat.data[0].tolist() == [0, 0]
    # gaps 10, 30; last hit gets mean 20 -> a = 10 + 20, b = 30
    assert mat.data[1].tolist() == [30, 30]


def test_bytes_mode_absent_is_zero():
    mat = build_matrix([session(("a", 0, 100), ("a", 1, None), ("b", 2, 7))], "bytes")
    assert mat.data[0].tolist() == [100, 7]


def test_empty_sessions():
    with pytest.raises(EmptyInput):
        build_matrix([], "binary")


def test_squared_euclidean_examples():
    assert squared_euclidean([0, 0], [0, 0]) == 0
    assert squared_euclidean([1, 0, 1], [0, 0, 1]) == 1
    assert squared_euclidean([2, 1], [0, 0]) == 5
    with pytest.raises(DimensionMismatch):
        squared_euclidean([1, 2], [1, 2, 3])


@given(st.integers(1, 20).flatmap(lambda n: st.tuples(
    arrays(np.int8, n, elements=st.integers(0, 1)), arrays(np.int8, n, elements=st.integers(0, 1)))))
def test_binary_distance_is_hamming(pair):
    x, y = pair
    hamming = sum(int(a != b) for a, b in zip(x, y))
    assert squared_euclidean(x, y) == hamming


# weights on a 1/8 grid: squares of subnormal differences would underflow to 0
_weight = st.integers(-8000, 8000).map(lambda v: v / 8)
_vec = st.integers(1, 8).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=_weight), arrays(float, n, elements=_weight)))


@given(_vec)
def test_distance_symmetric_and_zero_iff_equal(pair):
    x, y = pair
    assert squared_euclidean(x, y) == squared_euclidean(y, x)
    assert squared_euclidean(x, x) == 0
    if not np.array_equal(x, y):
        assert squared_euclidean(x, y) > 0


def test_pairwise_table_matches_scalar():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(15, 4))
    table = vectorspace.pairwise_sq_distances(data)
    for i in range(15):
        for j in range(15):
            assert table[i, j] == pytest.approx(squared_euclidean(data[i], data[j]), rel=1e-12, abs=1e-12)
    assert np.array_equal(table, table.T)
    assert np.all(np.diag(table) == 0)


def test_url_index_bijective():
    idx = UrlIndex(["/b", "/a", "/b", "/c"])
    assert idx.urls == ["/b", "/a", "/c"]
    assert [idx.id(u) for u in idx.urls] == [0, 1, 2]
    assert all(idx.url(idx.id(u)) == u for u in idx.urls)


def test_matrix_immutable_and_shape_checks():
    mat = SessionMatrix.from_array([[1.0, 0.0]])
    with pytest.raises(ValueError):
        mat.data[0, 0] = 5
    with pytest.raises(ValueError):
        SessionMatrix.from_array(np.zeros((0, 2)))
    with pytest.raises(DimensionMismatch):
        SessionMatrix(np.zeros((1, 2)), UrlIndex(["/a"]), (0,))


@pytest.mark.parametrize("mode", [m.value for m in WeightingMode])
def test_rebuild_bit_identical(fixture_sessions, mode):
    a = build_matrix(fixture_sessions, mode)
    b = build_matrix(fixture_sessions, mode)
    assert a.data.tobytes() == b.data.tobytes() and a.index == b.index


def test_binary_rows_are_zero_one(fixture_matrix):
    assert set(np.unique(fixture_matrix.data)) <= {0.0, 1.0}
    assert fixture_matrix.n == 10 and fixture_matrix.m == 32


@pytest.mark.parametrize("mode", ["binary", "duration"])
def test_matrix_file_round_trip(tmp_path, fixture_sessions, mode):
    mat = build_matrix(fixture_sessions, mode)
    path = tmp_path / "m.csv"
    vectorspace.write_matrix(mat, path, mode)
    back = vectorspace.read_matrix(path)
    assert back.data.tobytes() == mat.data.tobytes()
    assert back.index == mat.index and back.session_ids == mat.session_ids
    assert path.read_text().splitlines()[0].split(",") == mat.index.urls
    assert vectorspace.sidecar_path(path).exists()
