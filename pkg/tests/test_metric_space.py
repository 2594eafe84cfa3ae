import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dmoc.metric_space import (
    EUCLIDEAN,
    MANHATTAN,
    DataSet,
    Metric,
    diameter,
    distance,
    fill_distance,
    geometry,
    pair_indices,
    pair_stream,
    separation_distance,
    uniform_reference,
)
from reference import euclid, manhattan, pair_matrix

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_distance_examples():
    assert distance(EUCLIDEAN, [0, 0], [3, 4]) == 5.0
    assert distance(EUCLIDEAN, [1, 1], [1, 1]) == 0.0
    assert distance(MANHATTAN, [0, 0], [3, 4]) == 7.0


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        distance(EUCLIDEAN, [0, 0], [1, 2, 3])


def test_custom_metric():
    chebyshev = Metric("custom", func=lambda a, b: float(np.max(np.abs(a - b))))
    assert distance(chebyshev, [0, 0], [3, 4]) == 4.0
    ds = DataSet([[0, 0], [3, 4], [1, 1]], [0, 1, 2], metric_x=chebyshev)
    assert separation_distance(ds) == 1.0
    assert diameter(ds) == 4.0


def test_unknown_metric_rejected():
    with pytest.raises(ValueError):
        Metric("cosine")
    with pytest.raises(ValueError):
        Metric("custom")


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 6).flatmap(
        lambda n: st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite))
    ),
    st.sampled_from([EUCLIDEAN, MANHATTAN]),
)
def test_metric_axioms(ab, metric):
    a, b = ab
    d = distance(metric, a, b)
    assert d >= 0
    assert d == distance(metric, b, a)
    assert distance(metric, a, a) == 0
    ref = euclid if metric is EUCLIDEAN else manhattan
    assert d == ref(a.tolist(), b.tolist())


class TestDataSet:
    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            DataSet([[0.0], [np.nan]], [1, 2])

    def test_rejects_inf_in_values(self):
        with pytest.raises(ValueError, match="row 1"):
            DataSet([0.0, 1.0], [0.0, np.inf])

    def test_row_mismatch(self):
        with pytest.raises(ValueError, match="row counts"):
            DataSet([0.0, 1.0, 2.0], [0.0, 1.0])

    def test_immutable(self):
        ds = DataSet([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            ds.sites[0, 0] = 3.0

    def test_one_dimensional_inputs_become_columns(self):
        ds = DataSet([0.0, 1.0, 2.0], [5.0, 6.0, 7.0])
        assert ds.sites.shape == (3, 1) and ds.values.shape == (3, 1)


class TestPairStream:
    def test_three_points(self, three_points):
        recs = list(pair_stream(three_points))
        assert len(recs) == 3
        assert [(r.i, r.j) for r in recs] == [(0, 1), (0, 2), (1, 2)]

    def test_single_pair(self):
        (rec,) = pair_stream(DataSet([0.0, 1.0], [0.0, 3.0]))
        assert (rec.r, rec.s) == (1.0, 3.0)

    def test_matches_double_loop(self, rng):
        X = rng.random((20, 3))
        Y = rng.random((20, 2))
        recs = list(pair_stream(DataSet(X, Y)))
        expected = [
            (i, j, euclid(X[i].tolist(), X[j].tolist()), euclid(Y[i].tolist(), Y[j].tolist()))
            for i in range(20)
            for j in range(i + 1, 20)
        ]
        assert [tuple(r) for r in recs] == expected

    def test_partition_independent(self, rng):
        ds = DataSet(rng.random((17, 2)), rng.random(17))
        whole = list(pair_stream(ds))
        pieces = list(pair_stream(ds, 0, 50, chunk=7)) + list(pair_stream(ds, 50, None, chunk=11))
        assert whole == pieces

    @pytest.mark.parametrize("n", [2, 3, 10, 31])
    def test_index_bijection(self, n):
        i, j = pair_indices(n)
        got = list(zip(i.tolist(), j.tolist()))
        assert got == [(a, b) for a in range(n) for b in range(a + 1, n)]

    def test_bad_range(self):
        with pytest.raises(ValueError):
            pair_indices(4, 2, 10)


class TestGeometry:
    def test_separation_examples(self):
        assert separation_distance(DataSet([0, 0.5, 1], [0, 0, 0])) == 0.5
        assert separation_distance(DataSet([0, 0.1, 0.5, 1], [0, 0, 0, 0])) == 0.1

    def test_diameter_examples(self):
        assert diameter(DataSet([0, 0.5, 1], [0, 0, 0])) == 1.0
        square = DataSet([[0, 0], [1, 0], [0, 1], [1, 1]], np.zeros(4))
        assert diameter(square) == math.sqrt(2)

    def test_against_brute_force(self, rng):
        X = rng.random((50, 3))
        D = pair_matrix(X)
        off = [D[i][j] for i in range(50) for j in range(50) if i < j]
        g = geometry(DataSet(X, np.zeros(50)))
        assert g.separation == min(off)
        assert g.diameter == max(off)

    def test_duplicates_give_zero_separation(self):
        g = geometry(DataSet([0.0, 1.0, 1.0, 3.0], np.zeros(4)))
        assert g.separation == 0.0 and g.has_duplicates
        assert g.min_positive == 1.0

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            separation_distance(DataSet([0.0], [0.0]))

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, st.tuples(st.integers(2, 30), st.integers(1, 4)), elements=finite))
    def test_separation_le_diameter(self, X):
        g = geometry(DataSet(X, np.zeros(len(X))))
        assert g.separation <= g.diameter


class TestFillDistance:
    ref = np.arange(1001).reshape(-1, 1) * 1e-3

    def test_two_sites(self):
        assert fill_distance(DataSet([0.0, 1.0], [0, 0]), self.ref) == pytest.approx(0.5, abs=1e-3)

    def test_three_sites(self):
        assert fill_distance(DataSet([0.0, 0.5, 1.0], [0, 0, 0]), self.ref) == pytest.approx(0.25, abs=1e-3)

    def test_against_double_loop(self, rng):
        X = rng.random((30, 2))
        R = rng.random((200, 2))
        expected = max(min(euclid(r, x) for x in X.tolist()) for r in R.tolist())
        assert fill_distance(DataSet(X, np.zeros(30)), R) == expected

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            fill_distance(DataSet([0.0, 1.0], [0, 0]), np.empty((0, 1)))

    def test_uniform_reference_is_seeded(self, rng):
        ds = DataSet(rng.random((10, 2)), np.zeros(10))
        a = uniform_reference(ds, 100, seed=3)
        assert np.array_equal(a, uniform_reference(ds, 100, seed=3))
        assert np.all(a >= ds.sites.min(axis=0)) and np.all(a <= ds.sites.max(axis=0))
