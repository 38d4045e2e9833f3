"""Deterministic randomness, grids, sample paths, bridges, noise fields.

Every stochastic routine in the package draws from an :class:`RngStream`,
a thin wrapper over the counter-based Philox generator keyed by
``(seed, stream_id)``.  Identical keys reproduce identical variates on any
platform; distinct stream ids give statistically independent streams, so
replicas can run in parallel without sharing generator state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Stream-id offset used when one logical task needs a second independent
# stream (e.g. the two solves inside a composed two-time sample).
PAIR_STREAM_OFFSET = 2**32

# Refuse to allocate noise fields above this many cells unless the caller
# raises the cap explicitly (~1 GiB of float64).
DEFAULT_CELL_CAP = 2**27


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if not (0 <= self.stream_id < 2**64):
            raise ValueError(f"stream_id must fit in 64 bits, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream_id]))

    def substream(self, offset: int) -> "RngStream":
        """Derived stream for an independent sub-task of this one."""
        return RngStream(self.seed, (self.stream_id + offset) % 2**64)

    def pair_partner(self) -> "RngStream":
        """The conventional second stream of a two-solve task."""
        return self.substream(PAIR_STREAM_OFFSET)


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``n`` points on [lo, hi].

    The grid is stored as (lo, hi, n) so point locations are always
    recomputed as ``lo + i*dx`` rather than accumulated, which keeps grids
    bit-reproducible.
    """

    lo: float
    hi: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("grid endpoints must be finite")
        if self.lo >= self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n}")

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def points(self) -> np.ndarray:
        return self.lo + np.arange(self.n) * self.dx

    def index_of(self, x: float, tol: float = 1e-9) -> int:
        """Index of the grid point equal to ``x`` (within ``tol`` of a node)."""
        i = int(round((x - self.lo) / self.dx))
        if i < 0 or i >= self.n or abs(self.lo + i * self.dx - x) > tol:
            raise ValueError(f"{x} is not a node of {self}")
        return i

    def nearest_index(self, x: float) -> int:
        i = int(round((x - self.lo) / self.dx))
        return min(max(i, 0), self.n - 1)


class SamplePath:
    """A real function sampled on a uniform grid; linear between nodes."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid1D, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample path values must be finite")
        self.grid = grid
        self.values = values

    def __call__(self, x) -> np.ndarray | float:
        pts = self.grid.points()
        x_arr = np.asarray(x, dtype=np.float64)
        if np.any(x_arr < self.grid.lo - 1e-12) or np.any(x_arr > self.grid.hi + 1e-12):
            raise ValueError("evaluation outside the path's grid")
        out = np.interp(x_arr, pts, self.values)
        return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out

    def shifted(self, c: float) -> "SamplePath":
        return SamplePath(self.grid, self.values + c)

    def __repr__(self) -> str:
        return f"SamplePath(grid=[{self.grid.lo}, {self.grid.hi}] n={self.grid.n})"


@dataclass(frozen=True)
class NoiseField:
    """I.i.d. standard normal cells on a space x time lattice.

    The discretized space-time white noise used by the SHE solver is
    ``cells / sqrt(dx*dt)``; the cells themselves are unit normals.
    """

    space: Grid1D
    time: Grid1D
    cells: np.ndarray  # shape (time.n, space.n)

    def __post_init__(self) -> None:
        if self.cells.shape != (self.time.n, self.space.n):
            raise ValueError(
                f"cells shape {self.cells.shape} does not match grids "
                f"({self.time.n}, {self.space.n})"
            )


def white_noise_field(
    space: Grid1D,
    time: Grid1D,
    rng: RngStream,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> NoiseField:
    """I.i.d. N(0,1) variates, one per (time, space) cell.

    Deterministic given ``rng``; raises rather than attempting an
    allocation above ``cell_cap`` cells.
    """
    n_cells = space.n * time.n
    if n_cells > cell_cap:
        raise MemoryError(
            f"noise field of {n_cells} cells exceeds the cap {cell_cap}; "
            "raise cell_cap explicitly if this is intended"
        )
    cells = rng.generator().standard_normal((time.n, space.n))
    return NoiseField(space=space, time=time, cells=cells)


def sample_bridge(
    a_time: float,
    b_time: float,
    a_val: float,
    b_val: float,
    grid: Grid1D,
    rng: RngStream,
) -> SamplePath:
    """Discretized Brownian bridge pinned to (a_time, a_val), (b_time, b_val).

    Built from a Gaussian random walk whose endpoint error is removed by
    subtracting its linear drift, so endpoint values are matched exactly and
    the marginal at interior time s is N(linear interpolation,
    (s-a)(b-s)/(b-a)).

    The grid must span exactly [a_time, b_time].
    """
    if a_time >= b_time:
        raise ValueError(f"degenerate interval: a_time={a_time} >= b_time={b_time}")
    if abs(grid.lo - a_time) > 1e-12 or abs(grid.hi - b_time) > 1e-12:
        raise ValueError(
            f"grid [{grid.lo}, {grid.hi}] does not cover [{a_time}, {b_time}]"
        )
    n = grid.n
    if n == 2:
        return SamplePath(grid, np.array([a_val, b_val]))
    dt = grid.dx
    steps = rng.generator().standard_normal(n - 1) * math.sqrt(dt)
    walk = np.empty(n)
    walk[0] = 0.0
    np.cumsum(steps, out=walk[1:])
    frac = np.arange(n) / (n - 1)
    values = a_val + walk - frac * (walk[-1] - (b_val - a_val))
    values[0] = a_val
    values[-1] = b_val
    return SamplePath(grid, values)


def bridge_min_tail(a_val: float, b_val: float, length: float, m: float) -> float:
    """P(min of a Brownian bridge <= -m) for a bridge from a_val to b_val.

    Closed form from the reflection principle:
    ``exp(-2 (a_val+m)(b_val+m) / length)``.  When the level -m is not
    below both endpoints the event is certain and the probability is 1.
    """
    if length <= 0:
        raise ValueError(f"bridge length must be positive, got {length}")
    lo_end = min(a_val, b_val)
    if m <= -lo_end:
        return 1.0
    return math.exp(-2.0 * (a_val + m) * (b_val + m) / length)
