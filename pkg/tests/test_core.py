import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmoc.core import (
    DuplicateSiteWarning,
    compute_dmoc,
    default_grid,
    dmoc_at_pair_distances,
    explicit_grid,
    grid_bucket,
    grid_buckets,
    make_grid,
)
from dmoc.metric_space import DataSet, geometry
from dmoc.oracles import OracleFunction, generate_net, sample_dataset
from reference import naive_dmoc


class TestMakeGrid:
    def test_linear(self):
        assert make_grid("linear", 3, 0.5, 1.0).scales.tolist() == [0.5, 0.75, 1.0]

    def test_exponential(self):
        assert make_grid("exponential", 3, 0.25, 1.0).scales.tolist() == pytest.approx([0.25, 0.5, 1.0])

    @pytest.mark.parametrize("kind", ["linear", "exponential"])
    def test_degenerate(self, kind):
        assert make_grid(kind, 1, 1.0, 1.0).scales.tolist() == [1.0]

    @pytest.mark.parametrize("t_min,t_max", [(0.0, 1.0), (-1.0, 1.0), (2.0, 1.0)])
    def test_rejects(self, t_min, t_max):
        with pytest.raises(ValueError):
            make_grid("exponential", 5, t_min, t_max)

    def test_endpoints_exact_and_ratio_constant(self):
        g = make_grid("exponential", 10_000, 1e-4, 3.7)
        assert g.scales[0] == 1e-4 and g.scales[-1] == 3.7
        ratios = g.scales[1:] / g.scales[:-1]
        assert np.allclose(ratios, ratios[0], rtol=1e-10)
        assert np.all(np.diff(g.scales) > 0)

    def test_linear_difference_constant(self):
        g = make_grid("linear", 100, 0.1, 2.0)
        assert np.allclose(np.diff(g.scales), (2.0 - 0.1) / 99, rtol=1e-9)

    def test_explicit_must_increase(self):
        with pytest.raises(ValueError):
            explicit_grid([0.1, 0.1, 0.2])
        with pytest.raises(ValueError):
            explicit_grid([0.0, 0.1])


class TestBucket:
    grid = explicit_grid([0.25, 0.5, 1.0])

    def test_examples(self):
        assert grid_bucket(self.grid, 0.3) == 1
        assert grid_bucket(self.grid, 0.0) == 0
        assert grid_bucket(self.grid, 0.5) == 1  # r == t_k belongs to bucket k
        assert grid_bucket(self.grid, 1.0001) is None

    @pytest.mark.parametrize("kind", ["exponential", "linear"])
    def test_closed_form_matches_linear_scan(self, rng, kind):
        g = make_grid(kind, int(rng.integers(2, 500)), rng.uniform(1e-3, 0.1), rng.uniform(1, 5))
        r = np.concatenate([rng.uniform(0, g.scales[-1] * 1.1, 10_000), g.scales, np.nextafter(g.scales, 0)])
        got = grid_buckets(g, r)
        scales = g.scales.tolist()
        expected = [next((k for k, t in enumerate(scales) if x <= t), -1) for x in r.tolist()]
        assert got.tolist() == expected


class TestComputeDmoc:
    def test_three_points(self, three_points):
        curve = compute_dmoc(three_points, explicit_grid([0.25, 0.5, 1.0]))
        assert curve.omega.tolist() == [0.0, 0.75, 1.0]

    def test_constant_values(self, rng):
        ds = DataSet(rng.random((15, 2)), np.full(15, 3.0))
        assert not compute_dmoc(ds).omega.any()

    def test_single_pair(self):
        curve = compute_dmoc(DataSet([0.0, 1.0], [0.0, 3.0]), explicit_grid([0.5, 1.0]))
        assert curve.omega.tolist() == [0.0, 3.0]

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            compute_dmoc(DataSet([0.0], [1.0]), explicit_grid([1.0]))

    def test_pairs_past_grid_ignored(self):
        curve = compute_dmoc(DataSet([0.0, 0.1, 5.0], [0.0, 1.0, 100.0]), explicit_grid([0.2, 1.0]))
        assert curve.omega.tolist() == [1.0, 1.0]

    def test_default_grid(self, rng):
        ds = DataSet(rng.random((40, 3)), rng.random(40))
        curve = compute_dmoc(ds)
        g = geometry(ds)
        assert curve.grid.K == 10_000
        assert curve.scales[0] == g.separation and curve.scales[-1] == g.diameter

    def test_default_grid_two_points(self):
        assert default_grid(DataSet([0.0, 1.0], [0.0, 1.0])).scales.tolist() == [1.0]

    def test_duplicates_warn_and_count_at_every_scale(self):
        ds = DataSet([0.0, 0.0, 1.0], [0.0, 2.0, 0.5])
        with pytest.warns(DuplicateSiteWarning):
            curve = compute_dmoc(ds, explicit_grid([0.5, 1.0]))
        assert curve.omega.tolist() == [2.0, 2.0]
        assert curve.warnings

    @pytest.mark.parametrize("kind", ["exponential", "linear", "explicit"])
    def test_matches_naive_triple_loop(self, rng, kind):
        for _ in range(20):
            N = int(rng.integers(2, 60))
            X = rng.standard_normal((N, int(rng.integers(1, 6))))
            Y = rng.standard_normal((N, int(rng.integers(1, 3))))
            ds = DataSet(X, Y)
            g = geometry(ds)
            K = int(rng.integers(2, 40))
            if kind == "explicit":
                grid = explicit_grid(np.sort(rng.uniform(0.5 * g.separation, 1.2 * g.diameter, K)))
            else:
                grid = make_grid(kind, K, 0.9 * g.separation, g.diameter)
            assert compute_dmoc(ds, grid).omega.tolist() == naive_dmoc(X, Y, grid.scales.tolist())

    def test_thread_count_does_not_change_output(self, rng):
        ds = DataSet(rng.random((300, 4)), rng.random((300, 2)))
        grid = default_grid(ds, K=500)
        a = compute_dmoc(ds, grid, threads=1).omega
        b = compute_dmoc(ds, grid, threads=4).omega
        assert a.tobytes() == b.tobytes()

    def test_pair_count(self, rng):
        ds = DataSet(rng.random((25, 2)), rng.random(25))
        assert compute_dmoc(ds).pair_evaluations == 25 * 24 // 2


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(1, 5), st.integers(1, 60), st.integers(0, 2**32 - 1))
def test_structure(n, dim, K, seed):
    rng = np.random.default_rng(seed)
    ds = DataSet(rng.random((n, dim)), rng.standard_normal((n, 2)))
    g = geometry(ds)
    grid = explicit_grid(np.sort(rng.uniform(0.01, 1.5, K)) + np.arange(K) * 1e-9)
    omega = compute_dmoc(ds, grid, geom=g).omega
    assert np.all(omega >= 0) and np.all(np.diff(omega) >= 0)
    assert not omega[grid.scales < g.separation].any()
    top = grid.scales >= g.diameter
    if top.any():
        Y = ds.values
        smax = max(np.sqrt(((Y[i] - Y[j]) ** 2).sum()) for i in range(n) for j in range(i + 1, n))
        assert omega[top] == pytest.approx(smax, rel=1e-15)


def test_nested_datasets_increase(rng):
    X = rng.random((60, 2))
    Y = rng.random(60)
    grid = make_grid("exponential", 200, 1e-3, 1.5)
    small = compute_dmoc(DataSet(X[:30], Y[:30]), grid).omega
    big = compute_dmoc(DataSet(X, Y), grid).omega
    assert np.all(small <= big)


class TestPairDistances:
    def test_three_points(self, three_points):
        z, w = dmoc_at_pair_distances(three_points)
        assert z.tolist() == [0.5, 1.0] and w.tolist() == [0.75, 1.0]

    def test_two_points(self):
        z, w = dmoc_at_pair_distances(DataSet([0.0, 2.0], [1.0, 0.0]))
        assert z.tolist() == [2.0] and w.tolist() == [1.0]

    def test_constant(self, rng):
        _, w = dmoc_at_pair_distances(DataSet(rng.random(10), np.ones(10)))
        assert not w.any()

    def test_all_identical_rejected(self):
        with pytest.raises(ValueError):
            dmoc_at_pair_distances(DataSet([1.0, 1.0, 1.0], [0.0, 1.0, 2.0]))

    def test_agrees_with_grid_on_same_points(self, rng):
        ds = DataSet(rng.random((40, 3)), rng.random(40))
        z, w = dmoc_at_pair_distances(ds)
        assert np.array_equal(compute_dmoc(ds, explicit_grid(z)).omega, w)


def test_net_approximation_bound():
    # 0 <= sqrt(t) - omega_N(t) <= 3 sqrt(r) on an r/2-net
    fn = OracleFunction("sqrt")
    for e in range(3, 10):
        r = 2.0**-e
        ds = sample_dataset(fn, generate_net(1, r))
        ts = np.geomspace(r, 1.0, 50)
        omega = compute_dmoc(ds, explicit_grid(ts)).omega
        gap = np.sqrt(ts) - omega
        assert np.all(gap >= 0) and np.all(gap <= 3 * math.sqrt(r))
