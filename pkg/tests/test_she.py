import math

import numpy as np
import pytest

from kpzlab.rng import RngStream
from kpzlab.she import (
    HeightField,
    SheConfig,
    evolve,
    heat_kernel,
    mass,
    narrow_wedge_init,
    noise_for,
    scaled_height,
    scaled_profile,
    she_config,
    solve_narrow_wedge,
)


def test_config_validation():
    with pytest.raises(ValueError):
        SheConfig(dx=1 / 16, dt=1e-2, half_width=4.0, t_final=1.0)  # dt too big
    with pytest.raises(ValueError):
        SheConfig(dx=1 / 16, dt=1e-5, half_width=4.0, t_final=1.0)  # dt too small
    with pytest.raises(ValueError):
        she_config(dx=1 / 16, half_width=4.0, t_final=1.0, record_times=[2.0])
    with pytest.raises(ValueError):
        she_config(dx=1 / 16, half_width=4.0, t_final=1.0, record_times=[0.1234])


def test_narrow_wedge_delta():
    cfg = she_config(dx=0.5, half_width=1.0, t_final=0.125)
    init = narrow_wedge_init(cfg)
    assert list(init.values) == [0.0, 0.0, 2.0, 0.0, 0.0]
    assert mass(init) == pytest.approx(1.0, abs=1e-15)


def test_narrow_wedge_mass_exact_any_dx():
    for dx in (1 / 8, 1 / 16, 1 / 32):
        cfg = she_config(dx=dx, half_width=2.0, t_final=dx * dx)
        assert mass(narrow_wedge_init(cfg)) == pytest.approx(1.0, abs=1e-12)


def test_noise_off_matches_heat_kernel():
    cfg = she_config(dx=1 / 64, half_width=8.0, t_final=1.0)
    fld = solve_narrow_wedge(cfg, None)
    xs = fld.space.points()
    win = np.abs(xs) <= 4.0
    err = np.abs(fld.h[0][win] - np.log(heat_kernel(1.0, xs[win])))
    assert err.max() <= 1e-3


def test_noise_off_mass_conserved():
    cfg = she_config(dx=1 / 32, half_width=8.0, t_final=1.0,
                     record_times=[0.5, 1.0])
    fld = solve_narrow_wedge(cfg, None)
    assert abs(mass(fld, 0.5) - 1.0) < 1e-6
    assert abs(mass(fld, 1.0) - 1.0) < 1e-6


def test_mean_one_noise_factor():
    n = 1_000_000
    dx, dt = 1 / 16, 1 / 512
    sigma = math.sqrt(dt / dx)
    eta = RngStream(2, 0).generator().standard_normal(n)
    factor = np.exp(sigma * eta - dt / (2 * dx))
    se = factor.std() / math.sqrt(n)
    assert abs(factor.mean() - 1.0) < 3 * se


def test_expected_value_solves_heat_equation():
    cfg = she_config(dx=1 / 16, half_width=6.0, t_final=1.0)
    vals = np.array([
        solve_narrow_wedge(cfg, RngStream(7, i)).row(1.0)[cfg.interior_grid()
                                                          .index_of(0.0)]
        for i in range(2000)
    ])
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - heat_kernel(1.0, 0.0)) < 3 * se


def test_positivity():
    cfg = she_config(dx=1 / 16, half_width=4.0, t_final=0.5)
    for i in range(20):
        fld = solve_narrow_wedge(cfg, RngStream(8, i))
        assert np.all(fld.z > 0)


def test_determinism_same_stream():
    cfg = she_config(dx=1 / 16, half_width=4.0, t_final=0.25)
    a = solve_narrow_wedge(cfg, RngStream(3, 5))
    b = solve_narrow_wedge(cfg, RngStream(3, 5))
    assert np.array_equal(a.z, b.z)


def test_scaled_height_arithmetic():
    # H identically 0 (Z = 1), t = 8, alpha = 3: 8^{-1/3} (0 + 24/24) = 0.5
    grid_cfg = she_config(dx=1 / 8, half_width=4.0, t_final=24.0,
                          record_times=[24.0])
    fld = HeightField(grid_cfg.interior_grid(), (24.0,),
                      np.ones((1, grid_cfg.n_space - 2)))
    assert scaled_height(fld, 8.0, 3.0, 0.0) == pytest.approx(0.5, abs=1e-14)
    assert scaled_height(fld, 8.0, 3.0, 0.3) == pytest.approx(0.5, abs=1e-14)


def test_scaled_height_shift_value():
    cfg = she_config(dx=1 / 8, half_width=2.0, t_final=1.0)
    z = np.full((1, cfg.n_space - 2), math.exp(-1.0))
    fld = HeightField(cfg.interior_grid(), (1.0,), z)
    assert scaled_height(fld, 1.0, 1.0, 0.0) == pytest.approx(-1 + 1 / 24,
                                                              abs=1e-12)


def test_scaled_height_errors():
    cfg = she_config(dx=1 / 8, half_width=2.0, t_final=1.0)
    fld = HeightField(cfg.interior_grid(), (1.0,),
                      np.ones((1, cfg.n_space - 2)))
    with pytest.raises(ValueError):
        scaled_height(fld, 1.0, 0.5, 0.0)  # unrecorded time
    with pytest.raises(ValueError):
        scaled_height(fld, 1.0, 1.0, 5.0)  # outside the domain


def test_noise_off_parabola_flat():
    cfg = she_config(dx=1 / 64, half_width=8.0, t_final=1.0)
    fld = solve_narrow_wedge(cfg, None)
    prof = scaled_profile(fld, 1.0, 1.0)
    xs = prof.grid.points()
    win = np.abs(xs) <= 4.0
    comp = prof.values[win] + xs[win] ** 2 / 2
    assert np.ptp(comp) <= 1e-3


def test_evolve_rejects_mismatched_noise():
    cfg = she_config(dx=1 / 16, half_width=4.0, t_final=0.25)
    other = she_config(dx=1 / 16, half_width=4.0, t_final=0.5)
    noise = noise_for(other, RngStream(0, 0))
    with pytest.raises(ValueError):
        evolve(narrow_wedge_init(cfg), cfg, noise)


def test_height_field_requires_positive():
    cfg = she_config(dx=1 / 8, half_width=2.0, t_final=1.0)
    bad = np.ones((1, cfg.n_space - 2))
    bad[0, 3] = 0.0
    with pytest.raises(ValueError):
        HeightField(cfg.interior_grid(), (1.0,), bad)


def test_csv_round_trip(tmp_path):
    cfg = she_config(dx=1 / 4, half_width=1.0, t_final=0.25,
                     record_times=[0.125, 0.25])
    fld = solve_narrow_wedge(cfg, RngStream(1, 0))
    path = tmp_path / "field.csv"
    fld.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time,x,Z,H"
    assert len(lines) == 1 + 2 * fld.space.n
    # time-major ordering, then x ascending
    first = lines[1].split(",")
    assert float(first[0]) == 0.125
    assert float(first[1]) == fld.space.lo
    z = float(first[2])
    assert math.log(z) == pytest.approx(float(first[3]), rel=1e-12)
