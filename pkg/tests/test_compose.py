import math

import numpy as np
import pytest

from kpzlab.compose import (
    TwoTimePair,
    WindowError,
    compose_finite_t,
    compose_zero_t,
    pairs_to_csv,
    two_time_direct,
    two_time_sample,
)
from kpzlab.rng import Grid1D, RngStream, SamplePath
from kpzlab.she import scaled_height, scaled_profile, she_config, solve_narrow_wedge

LOG_SQRT_PI = 0.5723649429247001


def _path(grid, fn):
    return SamplePath(grid, fn(grid.points()))


def test_gaussian_integral_oracle():
    # f(u) + g(-u) = -u^2, t = 1: I = log sqrt(pi); trapezoid on [-8, 8]
    # at dx = 1/512 against the closed form.
    grid = Grid1D(-8.0, 8.0, 8193)
    f = _path(grid, lambda u: -(u**2))
    g = _path(grid, lambda u: np.zeros_like(u))
    assert compose_finite_t(f, g, 1.0) == pytest.approx(LOG_SQRT_PI, abs=1e-6)


def test_gaussian_integral_adaptive_quad_cross_check():
    from scipy.integrate import quad

    oracle = math.log(quad(lambda y: math.exp(-(y**2)), -8, 8)[0])
    grid = Grid1D(-8.0, 8.0, 8193)
    f = _path(grid, lambda u: -(u**2))
    g = _path(grid, lambda u: np.zeros_like(u))
    assert compose_finite_t(f, g, 1.0) == pytest.approx(oracle, abs=1e-6)


def test_shift_identity_exact():
    grid = Grid1D(-8.0, 8.0, 513)
    gen = RngStream(5, 0).generator()
    rough = np.cumsum(gen.standard_normal(grid.n)) * 0.05
    f = SamplePath(grid, -0.5 * grid.points() ** 2 + rough)
    g = _path(grid, lambda u: -0.25 * u**2)
    base = compose_finite_t(f, g, 2.0)
    shifted = compose_finite_t(f.shifted(7.25), g, 2.0)
    assert abs(shifted - base - 7.25) <= 1e-10


def test_shift_covariance_both_arguments():
    grid = Grid1D(-8.0, 8.0, 513)
    f = _path(grid, lambda u: -0.5 * u**2)
    g = _path(grid, lambda u: -0.3 * u**2)
    base = compose_finite_t(f, g, 1.0)
    both = compose_finite_t(f.shifted(1.25), g.shifted(-0.75), 1.0)
    assert abs(both - base - 0.5) <= 1e-10


def test_monotone_in_f():
    grid = Grid1D(-8.0, 8.0, 257)
    gen = RngStream(6, 0).generator()
    f = _path(grid, lambda u: -0.5 * u**2)
    g = _path(grid, lambda u: -0.5 * u**2)
    base = compose_finite_t(f, g, 1.0)
    bump = np.abs(gen.standard_normal(grid.n))
    higher = compose_finite_t(SamplePath(grid, f.values + bump), g, 1.0)
    assert higher >= base


def test_zero_t_limit_approached_monotonically():
    grid = Grid1D(-8.0, 8.0, 1025)
    f = _path(grid, lambda u: -0.5 * u**2)
    g = _path(grid, lambda u: -0.5 * u**2)
    i_inf, _ = compose_zero_t(f, g)
    gap_small_t = abs(compose_finite_t(f, g, 10.0) - i_inf)
    gap_large_t = abs(compose_finite_t(f, g, 1000.0) - i_inf)
    assert gap_large_t < gap_small_t


def test_dominance_over_max():
    grid = Grid1D(-8.0, 8.0, 257)
    gen = RngStream(16, 0).generator()
    f = SamplePath(grid, -0.5 * grid.points() ** 2
                   + 0.1 * gen.standard_normal(grid.n))
    g = _path(grid, lambda u: -0.5 * u**2)
    for t in (1.0, 8.0):
        m, _ = compose_zero_t(f, g)
        lhs = compose_finite_t(f, g, t)
        dy = t ** (2.0 / 3.0) * grid.dx
        assert lhs >= m + t ** (-1.0 / 3.0) * math.log(dy)


def test_zero_t_parabolas():
    grid = Grid1D(-4.0, 4.0, 801)
    f = _path(grid, lambda y: -((y - 1.0) ** 2))
    g = _path(grid, lambda y: -((y + 1.0) ** 2))
    value, arg = compose_zero_t(f, g)
    assert value == pytest.approx(0.0, abs=1e-12)
    assert arg == pytest.approx(1.0, abs=1e-12)


def test_zero_t_constants_leftmost():
    grid = Grid1D(-2.0, 2.0, 21)
    f = _path(grid, lambda y: np.full_like(y, 3.0))
    g = _path(grid, lambda y: np.full_like(y, 4.0))
    value, arg = compose_zero_t(f, g)
    assert value == 7.0
    assert arg == grid.lo


def test_zero_t_equals_brute_force():
    grid = Grid1D(-3.0, 3.0, 1000)
    gen = RngStream(17, 0).generator()
    f = SamplePath(grid, gen.standard_normal(grid.n))
    g = SamplePath(grid, gen.standard_normal(grid.n))
    value, arg = compose_zero_t(f, g)
    # independent exhaustive scan
    best, best_x = -np.inf, None
    for y in grid.points():
        tot = f(y) + g(-y)
        if tot > best:
            best, best_x = tot, y
    assert value == best
    assert arg == best_x


def test_window_errors():
    f = _path(Grid1D(2.0, 3.0, 5), lambda u: u)
    g = _path(Grid1D(-3.0, -2.0, 5), lambda u: u)
    with pytest.raises(WindowError):
        compose_zero_t(f, g)
    flat = _path(Grid1D(-1.0, 1.0, 9), lambda u: np.zeros_like(u))
    with pytest.raises(WindowError):
        compose_finite_t(flat, flat, 1.0)  # edge within 30 log-units of max


def test_two_time_noise_off_consistency():
    # deterministic oracle: composed value equals a direct longer solve
    cfg = she_config(dx=1 / 32, half_width=8.0, t_final=2.0)
    t, alpha = 1.0, 2.0
    f1 = solve_narrow_wedge(cfg.__class__(dx=cfg.dx, dt=cfg.dt,
                                          half_width=cfg.half_width,
                                          t_final=t, record_times=(t,)), None)
    f2 = solve_narrow_wedge(cfg.__class__(dx=cfg.dx, dt=cfg.dt,
                                          half_width=cfg.half_width,
                                          t_final=(alpha - 1) * t,
                                          record_times=((alpha - 1) * t,)), None)
    composed = compose_finite_t(scaled_profile(f1, t, t),
                                scaled_profile(f2, t, (alpha - 1) * t), t)
    dcfg = cfg.__class__(dx=cfg.dx, dt=cfg.dt, half_width=cfg.half_width,
                         t_final=alpha * t, record_times=(t, alpha * t))
    direct = scaled_height(solve_narrow_wedge(dcfg, None), t, alpha, 0.0)
    assert abs(composed - direct) < 1e-2


def test_two_time_sample_independent_streams():
    cfg = she_config(dx=1 / 8, half_width=6.0, t_final=1.0)
    n = 400
    h_one = np.empty(n)
    rev = np.empty(n)
    for i in range(n):
        rng = RngStream(21, i)
        f1 = solve_narrow_wedge(
            cfg.__class__(dx=cfg.dx, dt=cfg.dt, half_width=cfg.half_width,
                          t_final=1.0, record_times=(1.0,)), rng)
        f2 = solve_narrow_wedge(
            cfg.__class__(dx=cfg.dx, dt=cfg.dt, half_width=cfg.half_width,
                          t_final=1.0, record_times=(1.0,)), rng.pair_partner())
        h_one[i] = scaled_height(f1, 1.0, 1.0, 0.0)
        rev[i] = scaled_height(f2, 1.0, 1.0, 0.0)
    r = np.corrcoef(h_one, rev)[0, 1]
    assert abs(r) < 3.0 / math.sqrt(n)


def test_two_time_pair_validation():
    with pytest.raises(ValueError):
        TwoTimePair(h_one=0.0, h_alpha=0.0, t=1.0, alpha=0.5, method="direct",
                    seed=0, stream=0)
    with pytest.raises(ValueError):
        TwoTimePair(h_one=0.0, h_alpha=0.0, t=1.0, alpha=2.0, method="weird",
                    seed=0, stream=0)


def test_two_time_samplers_and_csv(tmp_path):
    cfg = she_config(dx=1 / 8, half_width=6.0, t_final=2.0)
    a = two_time_sample(cfg, 1.0, 2.0, RngStream(9, 4))
    b = two_time_direct(cfg, 1.0, 2.0, RngStream(9, 5))
    assert a.method == "composed" and b.method == "direct"
    path = tmp_path / "pairs.csv"
    pairs_to_csv([a, b], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,alpha,method,h_one,h_alpha,seed,stream"
    assert len(lines) == 3
    got = lines[1].split(",")
    assert float(got[3]) == a.h_one and float(got[4]) == a.h_alpha
