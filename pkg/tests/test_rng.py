import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpzlab.rng import (
    Grid1D,
    RngStream,
    SamplePath,
    bridge_min_tail,
    sample_bridge,
    white_noise_field,
)

E_MINUS_2 = 0.1353352832366127  # exp(-2), reflection-principle value


def test_stream_determinism():
    a = RngStream(12345, 7).generator().standard_normal(64)
    b = RngStream(12345, 7).generator().standard_normal(64)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(12345, 0).generator().standard_normal(64)
    b = RngStream(12345, 1).generator().standard_normal(64)
    assert not np.array_equal(a, b)


def test_pair_partner_is_distinct_stream():
    s = RngStream(9, 3)
    assert s.pair_partner().stream_id != s.stream_id
    assert s.pair_partner().seed == s.seed


def test_grid_points_exact():
    g = Grid1D(-2.0, 2.0, 9)
    pts = g.points()
    assert pts[0] == -2.0 and pts[-1] == 2.0
    assert g.dx == 0.5
    assert g.index_of(1.5) == 7
    with pytest.raises(ValueError):
        g.index_of(0.3)


@given(st.integers(2, 50), st.floats(-10, 10), st.floats(0.1, 10))
@settings(max_examples=50, deadline=None)
def test_grid_points_formula(n, lo, width):
    g = Grid1D(lo, lo + width, n)
    pts = g.points()
    for i in (0, n // 2, n - 1):
        assert pts[i] == lo + i * g.dx


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid1D(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 1)


def test_sample_path_interpolates_linearly():
    p = SamplePath(Grid1D(0.0, 1.0, 3), np.array([0.0, 1.0, 0.0]))
    assert p(0.25) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        p(1.5)


def test_sample_path_rejects_nonfinite():
    with pytest.raises(ValueError):
        SamplePath(Grid1D(0.0, 1.0, 2), np.array([0.0, np.inf]))


def test_bridge_endpoints_exact_and_n2_degenerate():
    grid = Grid1D(0.0, 1.0, 2)
    b = sample_bridge(0.0, 1.0, 1.5, -2.5, grid, RngStream(1, 1))
    assert b.values[0] == 1.5 and b.values[-1] == -2.5

    grid = Grid1D(0.0, 2.0, 65)
    b = sample_bridge(0.0, 2.0, 0.3, 0.9, grid, RngStream(1, 2))
    assert b.values[0] == 0.3 and b.values[-1] == 0.9


def test_bridge_degenerate_interval_rejected():
    with pytest.raises(ValueError):
        sample_bridge(1.0, 1.0, 0.0, 0.0, Grid1D(0.0, 1.0, 5), RngStream(1, 0))
    with pytest.raises(ValueError):
        sample_bridge(0.0, 1.0, 0.0, 0.0, Grid1D(0.0, 0.5, 5), RngStream(1, 0))


def test_bridge_midpoint_variance():
    # Var at the midpoint of a unit bridge is 1/4.
    n = 100_000
    grid = Grid1D(0.0, 1.0, 17)
    gen = RngStream(7, 0).generator()
    dt = grid.dx
    steps = gen.standard_normal((n, 16)) * math.sqrt(dt)
    walk = np.cumsum(steps, axis=1)
    frac = np.arange(1, 17) / 16
    mids = walk[:, 7] - frac[7] * walk[:, -1]
    var = mids.var()
    se = math.sqrt(2.0 / n) * 0.25
    assert abs(var - 0.25) < 3 * se


def test_bridge_covariance_matches_formula():
    # Cov(B(s), B(u)) = (s-a)(b-u)/(b-a) for s <= u; bridge on [0, 2].
    n = 40_000
    grid = Grid1D(0.0, 2.0, 33)
    vals = np.empty((n, 33))
    for i in range(n // 200):
        for j in range(200):
            k = i * 200 + j
            vals[k] = sample_bridge(0.0, 2.0, 0.0, 0.0, grid,
                                    RngStream(11, k)).values
    i_s, i_u = 8, 24  # s = 0.5, u = 1.5
    emp = np.mean(vals[:, i_s] * vals[:, i_u])
    target = 0.5 * (2.0 - 1.5) / 2.0
    se = np.std(vals[:, i_s] * vals[:, i_u]) / math.sqrt(n)
    assert abs(emp - target) < 3 * se


def test_bridge_min_tail_values():
    assert bridge_min_tail(0.0, 0.0, 1.0, 1.0) == pytest.approx(E_MINUS_2, abs=1e-15)
    assert bridge_min_tail(0.0, 0.0, 5.0, 0.0) == 1.0
    assert bridge_min_tail(1.0, 2.0, 1.0, -1.5) == 1.0  # level above an endpoint
    with pytest.raises(ValueError):
        bridge_min_tail(0.0, 0.0, 0.0, 1.0)


@given(st.floats(0.1, 5), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(0.05, 4), st.floats(0.05, 2))
@settings(max_examples=80, deadline=None)
def test_bridge_min_tail_monotone(length, a, b, m, dm):
    # decreasing in m and in the endpoint heights
    assert bridge_min_tail(a, b, length, m + dm) <= bridge_min_tail(a, b, length, m)
    assert bridge_min_tail(a + dm, b + dm, length, m) <= bridge_min_tail(
        a, b, length, m)


def test_bridge_min_tail_boundary_is_one():
    assert bridge_min_tail(1.0, 3.0, 2.0, -1.0) == 1.0


def test_bridge_min_mc_agrees_with_formula():
    # Monte Carlo oracle from sample_bridge vs the closed form; the
    # counting level carries the discrete-monitoring correction.
    n, steps = 20_000, 4096
    grid = Grid1D(0.0, 1.0, steps + 1)
    shift = 0.5826 * math.sqrt(1.0 / steps)
    hits = 0
    for i in range(n // 500):
        gen = RngStream(3, i).generator()
        w = np.cumsum(gen.standard_normal((500, steps)) * math.sqrt(1 / steps),
                      axis=1)
        frac = np.arange(1, steps + 1) / steps
        bridges = w - frac[None, :] * w[:, -1:]
        hits += int(np.count_nonzero(bridges.min(axis=1) <= -(1.0 - shift)))
    p_hat = hits / n
    exact = bridge_min_tail(0.0, 0.0, 1.0, 1.0)
    se = math.sqrt(exact * (1 - exact) / n)
    assert abs(p_hat - exact) < 3 * se


def test_white_noise_field_stats_and_determinism():
    space = Grid1D(0.0, 1.0, 1000)
    tgrid = Grid1D(0.0, 1.0, 1000)
    f1 = white_noise_field(space, tgrid, RngStream(5, 0))
    f2 = white_noise_field(space, tgrid, RngStream(5, 0))
    assert np.array_equal(f1.cells, f2.cells)
    n = f1.cells.size
    assert abs(f1.cells.mean()) < 3.0 / math.sqrt(n)
    dx = space.dx
    dt = tgrid.dx
    scaled_var = (f1.cells / math.sqrt(dx * dt)).var()
    assert abs(scaled_var * dx * dt - 1.0) < 0.01


def test_white_noise_cell_cap():
    with pytest.raises(MemoryError):
        white_noise_field(Grid1D(0, 1, 10**5), Grid1D(0, 1, 10**5),
                          RngStream(0, 0))
