"""Pure numpy/scipy reference implementations of the hot kernels.

These define the semantics; :mod:`kpzlab._kernels_nb` mirrors them with
numba-compiled twins.  Selected at import time by :mod:`kpzlab.kernels`
(env flag ``KPZLAB_DISABLE_NUMBA=1`` forces this backend).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_banded

_EXP_CLIP = 700.0


def _cn_coeffs(dx: float, dt: float):
    """Tridiagonal coefficients of the compact (4th order) trapezoidal step.

    The heat operator is discretized as B dZ/dt = A Z with
    A = tridiag(1,-2,1)/(2 dx^2) and the compact mass B = I + tridiag(1,-2,1)/12,
    stepped by the trapezoidal rule.  For dt in [dx^2/3, dx^2/2] the left
    matrix is an M-matrix and the right matrix is nonnegative, so the step
    maps nonnegative data to nonnegative data.
    """
    r = dt / (4.0 * dx * dx)
    lhs_diag = 10.0 / 12.0 + 2.0 * r
    lhs_off = 1.0 / 12.0 - r
    rhs_diag = 10.0 / 12.0 - 2.0 * r
    rhs_off = 1.0 / 12.0 + r
    return lhs_diag, lhs_off, rhs_diag, rhs_off


def evolve_she(z0, dx, dt, n_steps, noise, has_noise, record_steps):
    """Time-step the multiplicative-noise heat equation.

    Parameters
    ----------
    z0 : (n,) initial values on the full grid; the two end nodes are held
        at zero (Dirichlet).
    noise : (n_steps, n-2) unit normals for the interior cells; ignored
        when ``has_noise`` is false.
    record_steps : int64 array of 1-based step counts at which the state
        is copied out.

    Returns
    -------
    records : (len(record_steps), n) array
    ok : bool, False if a non-finite value appeared
    bad_step, bad_cell : location of the first offense (-1 if ok)
    """
    n = z0.shape[0]
    m = n - 2
    lhs_diag, lhs_off, rhs_diag, rhs_off = _cn_coeffs(dx, dt)
    ab = np.zeros((3, m))
    ab[0, 1:] = lhs_off
    ab[1, :] = lhs_diag
    ab[2, :-1] = lhs_off
    sigma = math.sqrt(dt / dx)
    comp = 0.5 * dt / dx

    z = z0[1:-1].astype(np.float64).copy()
    records = np.zeros((len(record_steps), n))
    rec_i = 0
    for step in range(1, n_steps + 1):
        rhs = rhs_diag * z
        rhs[1:] += rhs_off * z[:-1]
        rhs[:-1] += rhs_off * z[1:]
        z = solve_banded((1, 1), ab, rhs)
        if has_noise:
            z = z * np.exp(sigma * noise[step - 1] - comp)
        if not np.all(np.isfinite(z)):
            bad = int(np.flatnonzero(~np.isfinite(z))[0])
            return records, False, step, bad + 1
        if rec_i < len(record_steps) and step == record_steps[rec_i]:
            records[rec_i, 1:-1] = z
            rec_i += 1
    return records, True, -1, -1


def lpp_last_row(inc):
    """Last-passage dynamic program over all columns.

    M[i, j] = max(M[i-1, j], M[i, j-1]) + inc[i, j], with the maximum taken
    over available predecessors only; returns the final line's row M[n-1, :].
    """
    n, m = inc.shape
    row = np.cumsum(inc[0])
    for i in range(1, n):
        w = inc[i]
        # row_new[j] = max_{k<=j}(row[k] - cumsum_{<k} w) + cumsum_{<=j} w
        cw = np.cumsum(w)
        shifted = np.empty(m)
        shifted[0] = 0.0
        shifted[1:] = cw[:-1]
        row = np.maximum.accumulate(row - shifted) + cw
    return row


def _site_mode(mu, sig2, dx, c, use_up, up, use_down, down):
    """Mode of the one-site conditional (zero of its decreasing score)."""
    if not (use_up or use_down):
        return mu

    def score(v):
        s = -(v - mu) / sig2
        if use_up:
            s -= dx * c * math.exp(min(c * (v - up), _EXP_CLIP))
        if use_down:
            s += dx * c * math.exp(min(c * (down - v), _EXP_CLIP))
        return s

    sig = math.sqrt(sig2)
    g0 = score(mu)
    if g0 == 0.0:
        return mu
    if g0 > 0.0:
        lo = mu
        step = sig
        hi = mu + step
        while score(hi) > 0.0:
            step *= 2.0
            hi = mu + step
    else:
        hi = mu
        step = sig
        lo = mu - step
        while score(lo) < 0.0:
            step *= 2.0
            lo = mu - step
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if score(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _site_logdensity(lattice, mu, sig2, dx, c, use_up, up, use_down, down):
    f = -0.5 * (lattice - mu) ** 2 / sig2
    if use_up:
        f = f - dx * np.exp(np.minimum(c * (lattice - up), _EXP_CLIP))
    if use_down:
        f = f - dx * np.exp(np.minimum(c * (down - lattice), _EXP_CLIP))
    return f


def _sample_from_lattice(lattice, logf, u):
    w = np.exp(logf - logf.max())
    cdf = np.cumsum(w)
    total = cdf[-1]
    idx = int(np.searchsorted(cdf, u * total, side="left"))
    if idx >= len(lattice):
        idx = len(lattice) - 1
    return lattice[idx], w


def _edge_saturated(w):
    total = w.sum()
    return (w[0] + w[-1]) > 1e-12 * total


def gibbs_sweep(values, dx, c, h_on, up_arr, has_up, down_arr, has_down,
                uniforms, n_lattice):
    """One in-place heat-bath sweep, curve-major then left-to-right.

    ``values`` is (k, m); columns 0 and m-1 are entrance/exit data and are
    not resampled.  ``up_arr``/``down_arr`` are the boundary curves (used
    only when the corresponding flag is set).  Returns the number of
    lattice widenings that were needed.
    """
    k, m = values.shape
    sig2 = dx / 2.0
    sig = math.sqrt(sig2)
    widened = 0
    for i in range(k):
        for j in range(1, m - 1):
            mu = 0.5 * (values[i, j - 1] + values[i, j + 1])
            if i > 0:
                use_up, up = h_on, values[i - 1, j]
            else:
                use_up, up = h_on and has_up, up_arr[j] if has_up else 0.0
            if i < k - 1:
                use_down, down = h_on, values[i + 1, j]
            else:
                use_down, down = h_on and has_down, down_arr[j] if has_down else 0.0
            v_star = _site_mode(mu, sig2, dx, c, use_up, up, use_down, down)
            u = uniforms[i, j - 1]
            half = 8.0 * sig
            for _ in range(11):
                lattice = np.linspace(v_star - half, v_star + half, n_lattice)
                logf = _site_logdensity(lattice, mu, sig2, dx, c,
                                        use_up, up, use_down, down)
                v, w = _sample_from_lattice(lattice, logf, u)
                if not _edge_saturated(w):
                    break
                half *= 2.0
                widened += 1
            values[i, j] = v
    return widened


def coupled_gibbs_sweep(values_lo, values_hi, dx, c, h_on,
                        up_lo, has_up_lo, down_lo, has_down_lo,
                        up_hi, has_up_hi, down_hi, has_down_hi,
                        uniforms, n_lattice):
    """One sweep of two ordered ensembles driven by shared uniforms.

    Each site uses a value lattice common to both chains, so the two
    inverse-CDF lookups are ordered whenever the conditional CDFs are;
    returns (widened, violations) where violations counts sites at which
    the sampled pair came out strictly out of order (0 by construction).
    """
    k, m = values_lo.shape
    sig2 = dx / 2.0
    sig = math.sqrt(sig2)
    widened = 0
    violations = 0
    for i in range(k):
        for j in range(1, m - 1):
            mu_lo = 0.5 * (values_lo[i, j - 1] + values_lo[i, j + 1])
            mu_hi = 0.5 * (values_hi[i, j - 1] + values_hi[i, j + 1])
            if i > 0:
                uu_lo, up_l = h_on, values_lo[i - 1, j]
                uu_hi, up_h = h_on, values_hi[i - 1, j]
            else:
                uu_lo, up_l = h_on and has_up_lo, up_lo[j] if has_up_lo else 0.0
                uu_hi, up_h = h_on and has_up_hi, up_hi[j] if has_up_hi else 0.0
            if i < k - 1:
                ud_lo, dn_l = h_on, values_lo[i + 1, j]
                ud_hi, dn_h = h_on, values_hi[i + 1, j]
            else:
                ud_lo, dn_l = h_on and has_down_lo, down_lo[j] if has_down_lo else 0.0
                ud_hi, dn_h = h_on and has_down_hi, down_hi[j] if has_down_hi else 0.0
            vs_lo = _site_mode(mu_lo, sig2, dx, c, uu_lo, up_l, ud_lo, dn_l)
            vs_hi = _site_mode(mu_hi, sig2, dx, c, uu_hi, up_h, ud_hi, dn_h)
            u = uniforms[i, j - 1]
            half = 8.0 * sig
            for _ in range(11):
                lo_edge = min(vs_lo, vs_hi) - half
                hi_edge = max(vs_lo, vs_hi) + half
                lattice = np.linspace(lo_edge, hi_edge, n_lattice)
                f_lo = _site_logdensity(lattice, mu_lo, sig2, dx, c,
                                        uu_lo, up_l, ud_lo, dn_l)
                f_hi = _site_logdensity(lattice, mu_hi, sig2, dx, c,
                                        uu_hi, up_h, ud_hi, dn_h)
                v_l, w_l = _sample_from_lattice(lattice, f_lo, u)
                v_h, w_h = _sample_from_lattice(lattice, f_hi, u)
                if not (_edge_saturated(w_l) or _edge_saturated(w_h)):
                    break
                half *= 2.0
                widened += 1
            if v_l > v_h:
                violations += 1
            values_lo[i, j] = v_l
            values_hi[i, j] = v_h
    return widened, violations
