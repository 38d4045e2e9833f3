"""Stochastic heat equation solver with narrow-wedge data and the 3:2:1 map.

The solver advances ``dZ = 1/2 Z'' dt + Z dW`` by operator splitting: a
trapezoidal (Crank-Nicolson) heat step with a 4th-order compact spatial
stencil and zero Dirichlet boundaries at +-L, followed by a per-cell
multiplicative factor ``exp(eta*sqrt(dt/dx) - dt/(2 dx))``.  The factor has
unit mean, so expectations follow the discrete heat flow exactly, and both
half-steps map positive data to positive data, so log-heights stay finite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from kpzlab import kernels
from kpzlab.rng import Grid1D, NoiseField, RngStream, SamplePath, white_noise_field


@dataclass(frozen=True)
class SheConfig:
    """Numerical parameters of a narrow-wedge solve on [-L, L].

    dt must lie in [dx^2/3, dx^2/2]: the upper end is the usual diffusive
    limit and also caps the noise factor's per-step variance; the lower end
    keeps the compact left matrix an M-matrix, which is what guarantees a
    positive update.
    """

    dx: float
    dt: float
    half_width: float
    t_final: float
    record_times: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("dx and dt must be positive")
        if self.dt > self.dx * self.dx / 2 * (1 + 1e-12):
            raise ValueError(
                f"dt={self.dt} violates the diffusive bound dx^2/2={self.dx**2 / 2}"
            )
        if self.dt < self.dx * self.dx / 3 * (1 - 1e-12):
            raise ValueError(
                f"dt={self.dt} below dx^2/3; the positive-update window is "
                f"[{self.dx**2 / 3}, {self.dx**2 / 2}]"
            )
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if round(2 * self.half_width / self.dx) < 8:
            raise ValueError("domain too narrow for the grid spacing")
        if not self.record_times:
            object.__setattr__(self, "record_times", (self.t_final,))
        times = tuple(sorted(float(t) for t in self.record_times))
        for t in times:
            if not (0 < t <= self.t_final + 1e-12):
                raise ValueError(f"record time {t} outside (0, t_final]")
            k = round(t / self.dt)
            if abs(k * self.dt - t) > 1e-9 * max(1.0, t):
                raise ValueError(f"record time {t} is not a multiple of dt={self.dt}")
        object.__setattr__(self, "record_times", times)

    @property
    def n_space(self) -> int:
        """Number of grid nodes including the two Dirichlet boundary nodes."""
        return int(round(2 * self.half_width / self.dx)) + 1

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def full_grid(self) -> Grid1D:
        return Grid1D(-self.half_width, self.half_width, self.n_space)

    def interior_grid(self) -> Grid1D:
        return Grid1D(-self.half_width + self.dx, self.half_width - self.dx,
                      self.n_space - 2)

    def record_steps(self) -> np.ndarray:
        return np.array([round(t / self.dt) for t in self.record_times], dtype=np.int64)


def she_config(dx: float, half_width: float, t_final: float,
               record_times=()) -> SheConfig:
    """Config with the standard time step dt = dx^2/2."""
    return SheConfig(dx=dx, dt=dx * dx / 2, half_width=half_width,
                     t_final=t_final, record_times=tuple(record_times))


class HeightField:
    """Recorded SHE values Z and log-heights H on the interior grid."""

    __slots__ = ("space", "times", "z")

    def __init__(self, space: Grid1D, times, z: np.ndarray):
        self.space = space
        self.times = tuple(times)
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (len(self.times), space.n):
            raise ValueError("field shape does not match grids")
        if not np.all(z > 0):
            raise ValueError("height field requires strictly positive Z")
        self.z = z

    @property
    def h(self) -> np.ndarray:
        return np.log(self.z)

    def row(self, t: float) -> np.ndarray:
        for i, rt in enumerate(self.times):
            if abs(rt - t) <= 1e-9 * max(1.0, t):
                return self.z[i]
        raise ValueError(f"time {t} was not recorded (have {self.times})")

    def h_at(self, t: float, x) -> np.ndarray | float:
        """log Z at recorded time t and (possibly off-grid) location x."""
        path = SamplePath(self.space, np.log(self.row(t)))
        return path(x)

    def to_csv(self, path) -> None:
        """Columns time,x,Z,H; rows time-major then x ascending."""
        xs = self.space.points()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "x", "Z", "H"])
            for i, t in enumerate(self.times):
                zi = self.z[i]
                hi = np.log(zi)
                for j in range(self.space.n):
                    w.writerow([repr(float(t)), repr(float(xs[j])),
                                repr(float(zi[j])), repr(float(hi[j]))])


def narrow_wedge_init(cfg: SheConfig) -> SamplePath:
    """Lattice delta: mass 1/dx at the node nearest 0, zero elsewhere."""
    grid = cfg.full_grid()
    values = np.zeros(grid.n)
    j = grid.nearest_index(0.0)
    if j == 0 or j == grid.n - 1:
        raise ValueError("origin falls on the boundary; widen the domain")
    values[j] = 1.0 / cfg.dx
    return SamplePath(grid, values)


def noise_for(cfg: SheConfig, rng: RngStream, cell_cap=None) -> NoiseField:
    """White-noise cells sized for one solve under ``cfg``."""
    if cfg.n_steps < 2:
        raise ValueError("solve needs at least 2 time steps")
    tgrid = Grid1D(cfg.dt, cfg.t_final, cfg.n_steps)
    kwargs = {} if cell_cap is None else {"cell_cap": cell_cap}
    return white_noise_field(cfg.interior_grid(), tgrid, rng, **kwargs)


def evolve(init: SamplePath, cfg: SheConfig, noise: NoiseField | None) -> HeightField:
    """Run the splitting scheme; ``noise=None`` evolves the pure heat flow."""
    grid = cfg.full_grid()
    if init.grid != grid:
        raise ValueError("initial data grid does not match the config grid")
    if np.any(init.values < 0):
        raise ValueError("initial data must be nonnegative")
    if noise is None:
        cells = np.zeros((0, cfg.n_space - 2))
        has_noise = False
    else:
        expected = (cfg.n_steps, cfg.n_space - 2)
        if noise.cells.shape != expected:
            raise ValueError(
                f"noise shaped {noise.cells.shape}, solve needs {expected}"
            )
        cells = noise.cells
        has_noise = True
    records, ok, bad_step, bad_cell = kernels.evolve_she(
        init.values.astype(np.float64), cfg.dx, cfg.dt, cfg.n_steps,
        cells, has_noise, cfg.record_steps(),
    )
    if not ok:
        raise FloatingPointError(
            f"non-finite value at step {bad_step} (t={bad_step * cfg.dt:.6g}), "
            f"cell {bad_cell}"
        )
    return HeightField(cfg.interior_grid(), cfg.record_times, records[:, 1:-1])


def scaled_height(field: HeightField, t: float, alpha: float, x: float) -> float:
    """The 3:2:1 scaled height t^{-1/3} ( H(alpha t, t^{2/3} x) + alpha t / 24 ).

    ``alpha * t`` must be one of the recorded times and the scaled location
    ``t^{2/3} x`` must fall inside the field's domain.
    """
    pos = t ** (2.0 / 3.0) * x
    if pos < field.space.lo or pos > field.space.hi:
        raise ValueError(
            f"scaled location {pos} outside the solved domain "
            f"[{field.space.lo}, {field.space.hi}]"
        )
    h = field.h_at(alpha * t, pos)
    return t ** (-1.0 / 3.0) * (h + alpha * t / 24.0)


def scaled_profile(field: HeightField, t_scale: float, time: float) -> SamplePath:
    """Whole-row version of the scaling map, on the grid u = x / t_scale^{2/3}.

    Returns u -> t_scale^{-1/3} ( H(time, t_scale^{2/3} u) + time/24 ),
    evaluated at exact grid nodes (no interpolation).
    """
    s = t_scale ** (2.0 / 3.0)
    ugrid = Grid1D(field.space.lo / s, field.space.hi / s, field.space.n)
    values = t_scale ** (-1.0 / 3.0) * (np.log(field.row(time)) + time / 24.0)
    return SamplePath(ugrid, values)


def solve_narrow_wedge(cfg: SheConfig, rng: RngStream | None) -> HeightField:
    """Narrow-wedge solve; ``rng=None`` switches the noise off."""
    init = narrow_wedge_init(cfg)
    noise = None if rng is None else noise_for(cfg, rng)
    return evolve(init, cfg, noise)


def with_duration(cfg: SheConfig, t_final: float) -> SheConfig:
    """Same numerics, different duration, recording only the final time."""
    return replace(cfg, t_final=t_final, record_times=(t_final,))


def mass(path_or_field, t=None) -> float:
    """Trapezoid mass of a profile; diagnostic for boundary leakage."""
    if isinstance(path_or_field, SamplePath):
        return float(np.trapezoid(path_or_field.values,
                                  path_or_field.grid.points()))
    row = path_or_field.row(t)
    return float(np.trapezoid(row, path_or_field.space.points()))


def heat_kernel(t: float, x) -> np.ndarray | float:
    """Fundamental solution of dZ/dt = 1/2 Z''."""
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-x * x / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out
