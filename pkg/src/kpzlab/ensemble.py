"""Finite softly-non-intersecting Gibbs line ensembles.

An :class:`Ensemble` holds k indexed curves on a common grid with pinned
entrance/exit data and optional upper/lower boundary curves (absent
boundaries act as +inf above and -inf below).  The Gibbs weight penalizes
curve inversions through the convex interaction ``H_t(x) = exp(t^{1/3} x)``
applied to each neighbor gap.  ``resample_sweep`` is a single-site
heat-bath pass: each interior site is redrawn from its exact one-site
conditional (a local Gaussian bridge density times the interaction factor)
by inverse CDF on a value lattice.  ``monotone_coupled_sweep`` drives two
ordered ensembles with shared uniforms through a common lattice per site,
which preserves the pointwise ordering deterministically.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from kpzlab import kernels
from kpzlab.rng import Grid1D, RngStream, SamplePath

# Interaction exponents above this are treated as an effectively hard wall.
_EXP_CLIP = 700.0
# Value-lattice resolution of the one-site inverse CDF.
LATTICE_POINTS = 2048


@dataclass(frozen=True)
class Hamiltonian:
    """Convex gap penalty H_t(x) = exp(t^{1/3} x)."""

    t: float

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("Hamiltonian needs t > 0")

    @property
    def coeff(self) -> float:
        return self.t ** (1.0 / 3.0)

    def __call__(self, x) -> np.ndarray | float:
        arg = np.minimum(self.coeff * np.asarray(x, dtype=np.float64), _EXP_CLIP)
        out = np.exp(arg)
        return float(out) if out.ndim == 0 else out


class Ensemble:
    """k curves on a grid, entrance/exit pinned, optional boundary curves.

    ``upper``/``lower`` are :class:`SamplePath` on the same grid or None,
    None meaning +inf above / -inf below (no interaction through that side).
    Curves are ordered by index with index 0 conventionally the top curve.
    """

    __slots__ = ("grid", "curves", "upper", "lower")

    def __init__(self, grid: Grid1D, curves: np.ndarray,
                 upper: SamplePath | None = None,
                 lower: SamplePath | None = None):
        curves = np.asarray(curves, dtype=np.float64)
        if curves.ndim != 2 or curves.shape[1] != grid.n:
            raise ValueError(f"curves must be (k, {grid.n}), got {curves.shape}")
        if not np.all(np.isfinite(curves)):
            raise ValueError("curve values must be finite")
        for b in (upper, lower):
            if b is not None and b.grid != grid:
                raise ValueError("boundary curves must share the ensemble grid")
        self.grid = grid
        self.curves = curves
        self.upper = upper
        self.lower = lower

    @property
    def k(self) -> int:
        return self.curves.shape[0]

    @property
    def entrance(self) -> np.ndarray:
        return self.curves[:, 0].copy()

    @property
    def exit(self) -> np.ndarray:
        return self.curves[:, -1].copy()

    def copy(self) -> "Ensemble":
        return Ensemble(self.grid, self.curves.copy(), self.upper, self.lower)

    def curve(self, i: int) -> SamplePath:
        return SamplePath(self.grid, self.curves[i].copy())

    def to_csv(self, path, sidecar_path=None) -> None:
        """Columns curve,x,value; boundary data goes to a JSON sidecar."""
        xs = self.grid.points()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["curve", "x", "value"])
            for i in range(self.k):
                for j in range(self.grid.n):
                    w.writerow([i, repr(float(xs[j])), repr(float(self.curves[i, j]))])
        if sidecar_path is not None:
            side = {
                "grid": {"lo": self.grid.lo, "hi": self.grid.hi, "n": self.grid.n},
                "entrance": self.entrance.tolist(),
                "exit": self.exit.tolist(),
                "upper": None if self.upper is None else self.upper.values.tolist(),
                "lower": None if self.lower is None else self.lower.values.tolist(),
            }
            with open(sidecar_path, "w") as fh:
                json.dump(side, fh, sort_keys=True, indent=1)


class WeightResult(NamedTuple):
    value: float
    underflow: bool


def interaction_integral(e: Ensemble, h: Hamiltonian) -> float:
    """Trapezoid integral of the summed gap penalties (the weight's exponent)."""
    xs = e.grid.points()
    total = 0.0
    layers = []
    if e.upper is not None:
        layers.append((e.curves[0], e.upper.values))
    for i in range(1, e.k):
        layers.append((e.curves[i], e.curves[i - 1]))
    if e.lower is not None:
        layers.append((e.lower.values, e.curves[-1]))
    for below, above in layers:
        total += float(np.trapezoid(h(below - above), xs))
    return total


def boltzmann_weight(e: Ensemble, h: Hamiltonian) -> WeightResult:
    """exp(-sum of gap-penalty integrals), in (0, 1].

    Boundary terms with an absent (infinite) boundary contribute zero.
    When the exponent is large enough that the weight underflows to 0 the
    result is flagged.
    """
    s = interaction_integral(e, h)
    w = math.exp(-s) if s < _EXP_CLIP else 0.0
    return WeightResult(value=w, underflow=(w == 0.0))


def _boundary_arrays(e: Ensemble):
    n = e.grid.n
    up = e.upper.values if e.upper is not None else np.zeros(n)
    down = e.lower.values if e.lower is not None else np.zeros(n)
    return up, e.upper is not None, down, e.lower is not None


def resample_sweep(e: Ensemble, h: Hamiltonian | None,
                   rng: RngStream) -> Ensemble:
    """One heat-bath sweep (curve-major, left-to-right); returns a new ensemble.

    ``h=None`` switches the interaction off, leaving the exact local
    Gaussian bridge conditional (used for free-measure invariance checks).
    """
    out = e.copy()
    uniforms = rng.generator().random((e.k, e.grid.n - 2))
    up, has_up, down, has_down = _boundary_arrays(e)
    coeff = h.coeff if h is not None else 0.0
    kernels.gibbs_sweep(out.curves, e.grid.dx, coeff, h is not None,
                        up, has_up, down, has_down, uniforms, LATTICE_POINTS)
    return out


def _check_ordered(lo: Ensemble, hi: Ensemble) -> None:
    if lo.grid != hi.grid or lo.k != hi.k:
        raise ValueError("ensembles must share grid and curve count")
    if np.any(lo.curves > hi.curves):
        raise ValueError("input ordering violated: lo must be <= hi pointwise")
    if lo.upper is None and hi.upper is not None:
        raise ValueError("lo upper boundary is +inf but hi's is finite")
    if lo.upper is not None and hi.upper is not None and \
            np.any(lo.upper.values > hi.upper.values):
        raise ValueError("upper boundaries are not ordered")
    if hi.lower is None and lo.lower is not None:
        raise ValueError("hi lower boundary is -inf but lo's is finite")
    if lo.lower is not None and hi.lower is not None and \
            np.any(lo.lower.values > hi.lower.values):
        raise ValueError("lower boundaries are not ordered")


def monotone_coupled_sweep(lo: Ensemble, hi: Ensemble, h: Hamiltonian | None,
                           rng: RngStream) -> tuple[Ensemble, Ensemble]:
    """One coupled sweep of two ordered ensembles; ordering is preserved.

    Each site consumes a single uniform, pushed through both conditionals'
    inverse CDFs on one common value lattice.  The one-site conditional is
    stochastically monotone in its neighbors and boundaries (monotone
    likelihood ratio), so the two sampled values are ordered at every site.
    """
    _check_ordered(lo, hi)
    out_lo = lo.copy()
    out_hi = hi.copy()
    uniforms = rng.generator().random((lo.k, lo.grid.n - 2))
    up_l, has_up_l, down_l, has_down_l = _boundary_arrays(lo)
    up_h, has_up_h, down_h, has_down_h = _boundary_arrays(hi)
    coeff = h.coeff if h is not None else 0.0
    _, violations = kernels.coupled_gibbs_sweep(
        out_lo.curves, out_hi.curves, lo.grid.dx, coeff, h is not None,
        up_l, has_up_l, down_l, has_down_l,
        up_h, has_up_h, down_h, has_down_h,
        uniforms, LATTICE_POINTS,
    )
    if violations:
        raise RuntimeError(
            f"monotone coupling violated at {violations} sites; this is a bug"
        )
    return out_lo, out_hi


def bridge_ensemble(grid: Grid1D, entrance, exit_, upper=None, lower=None,
                    init: str = "linear") -> Ensemble:
    """Convenience constructor: curves start as straight lines (or zeros
    pinned at the endpoints) between their entrance and exit data."""
    entrance = np.asarray(entrance, dtype=np.float64)
    exit_ = np.asarray(exit_, dtype=np.float64)
    if entrance.shape != exit_.shape or entrance.ndim != 1:
        raise ValueError("entrance and exit must be equal-length vectors")
    frac = (grid.points() - grid.lo) / (grid.hi - grid.lo)
    if init == "linear":
        curves = entrance[:, None] + np.outer(exit_ - entrance, frac)
    elif init == "flat":
        curves = np.zeros((len(entrance), grid.n))
        curves[:, 0] = entrance
        curves[:, -1] = exit_
    else:
        raise ValueError(f"unknown init {init!r}")
    return Ensemble(grid, curves, upper=upper, lower=lower)
