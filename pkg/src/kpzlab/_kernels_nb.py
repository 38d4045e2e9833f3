"""Numba-compiled twins of the kernels in :mod:`kpzlab._kernels_np`.

Same call signatures and same arithmetic (no fastmath), so the two
backends agree to floating-point roundoff.  ``cache=True`` keeps worker
processes from recompiling.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_EXP_CLIP = 700.0


@njit(cache=True)
def evolve_she(z0, dx, dt, n_steps, noise, has_noise, record_steps):
    n = z0.shape[0]
    m = n - 2
    r = dt / (4.0 * dx * dx)
    lhs_diag = 10.0 / 12.0 + 2.0 * r
    lhs_off = 1.0 / 12.0 - r
    rhs_diag = 10.0 / 12.0 - 2.0 * r
    rhs_off = 1.0 / 12.0 + r
    sigma = math.sqrt(dt / dx)
    comp = 0.5 * dt / dx

    # Constant-coefficient Thomas factorization, done once.
    cp = np.empty(m)
    inv_den = np.empty(m)
    inv_den[0] = 1.0 / lhs_diag
    cp[0] = lhs_off * inv_den[0]
    for i in range(1, m):
        inv_den[i] = 1.0 / (lhs_diag - lhs_off * cp[i - 1])
        cp[i] = lhs_off * inv_den[i]

    z = z0[1:-1].copy()
    rhs = np.empty(m)
    dp = np.empty(m)
    records = np.zeros((len(record_steps), n))
    rec_i = 0
    for step in range(1, n_steps + 1):
        for j in range(m):
            v = rhs_diag * z[j]
            if j > 0:
                v += rhs_off * z[j - 1]
            if j < m - 1:
                v += rhs_off * z[j + 1]
            rhs[j] = v
        dp[0] = rhs[0] * inv_den[0]
        for j in range(1, m):
            dp[j] = (rhs[j] - lhs_off * dp[j - 1]) * inv_den[j]
        z[m - 1] = dp[m - 1]
        for j in range(m - 2, -1, -1):
            z[j] = dp[j] - cp[j] * z[j + 1]
        if has_noise:
            for j in range(m):
                z[j] = z[j] * math.exp(sigma * noise[step - 1, j] - comp)
        for j in range(m):
            if not math.isfinite(z[j]):
                return records, False, step, j + 1
        if rec_i < len(record_steps) and step == record_steps[rec_i]:
            for j in range(m):
                records[rec_i, j + 1] = z[j]
            rec_i += 1
    return records, True, -1, -1


@njit(cache=True)
def lpp_last_row(inc):
    n, m = inc.shape
    row = np.empty(m)
    acc = 0.0
    for j in range(m):
        acc += inc[0, j]
        row[j] = acc
    for i in range(1, n):
        prev = row[0]
        row[0] = prev + inc[i, 0]
        for j in range(1, m):
            cur = row[j]
            best = row[j - 1] if row[j - 1] > prev else prev
            row[j] = best + inc[i, j]
            prev = cur
    return row


@njit(cache=True, inline="always")
def _score(v, mu, sig2, dx, c, use_up, up, use_down, down):
    s = -(v - mu) / sig2
    if use_up:
        s -= dx * c * math.exp(min(c * (v - up), _EXP_CLIP))
    if use_down:
        s += dx * c * math.exp(min(c * (down - v), _EXP_CLIP))
    return s


@njit(cache=True)
def _site_mode(mu, sig2, dx, c, use_up, up, use_down, down):
    if not (use_up or use_down):
        return mu
    sig = math.sqrt(sig2)
    g0 = _score(mu, mu, sig2, dx, c, use_up, up, use_down, down)
    if g0 == 0.0:
        return mu
    if g0 > 0.0:
        lo = mu
        step = sig
        hi = mu + step
        while _score(hi, mu, sig2, dx, c, use_up, up, use_down, down) > 0.0:
            step *= 2.0
            hi = mu + step
    else:
        hi = mu
        step = sig
        lo = mu - step
        while _score(lo, mu, sig2, dx, c, use_up, up, use_down, down) < 0.0:
            step *= 2.0
            lo = mu - step
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _score(mid, mu, sig2, dx, c, use_up, up, use_down, down) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def _fill_logdensity(out, lattice, mu, sig2, dx, c, use_up, up, use_down, down):
    for t in range(lattice.shape[0]):
        v = lattice[t]
        f = -0.5 * (v - mu) * (v - mu) / sig2
        if use_up:
            f -= dx * math.exp(min(c * (v - up), _EXP_CLIP))
        if use_down:
            f -= dx * math.exp(min(c * (down - v), _EXP_CLIP))
        out[t] = f


@njit(cache=True)
def _cdf_and_pick(logf, lattice, u):
    L = logf.shape[0]
    fmax = logf[0]
    for t in range(1, L):
        if logf[t] > fmax:
            fmax = logf[t]
    w0 = math.exp(logf[0] - fmax)
    wlast = math.exp(logf[L - 1] - fmax)
    cdf = np.empty(L)
    acc = 0.0
    for t in range(L):
        acc += math.exp(logf[t] - fmax)
        cdf[t] = acc
    idx = np.searchsorted(cdf, u * acc, side="left")
    if idx >= L:
        idx = L - 1
    saturated = (w0 + wlast) > 1e-12 * acc
    return lattice[idx], saturated


@njit(cache=True)
def _lattice(lo_edge, hi_edge, n_lattice):
    out = np.empty(n_lattice)
    step = (hi_edge - lo_edge) / (n_lattice - 1)
    for t in range(n_lattice):
        out[t] = lo_edge + t * step
    return out


@njit(cache=True)
def gibbs_sweep(values, dx, c, h_on, up_arr, has_up, down_arr, has_down,
                uniforms, n_lattice):
    k, m = values.shape
    sig2 = dx / 2.0
    sig = math.sqrt(sig2)
    widened = 0
    logf = np.empty(n_lattice)
    for i in range(k):
        for j in range(1, m - 1):
            mu = 0.5 * (values[i, j - 1] + values[i, j + 1])
            if i > 0:
                use_up = h_on
                up = values[i - 1, j]
            else:
                use_up = h_on and has_up
                up = up_arr[j] if has_up else 0.0
            if i < k - 1:
                use_down = h_on
                down = values[i + 1, j]
            else:
                use_down = h_on and has_down
                down = down_arr[j] if has_down else 0.0
            v_star = _site_mode(mu, sig2, dx, c, use_up, up, use_down, down)
            u = uniforms[i, j - 1]
            half = 8.0 * sig
            v = v_star
            for _ in range(11):
                lattice = _lattice(v_star - half, v_star + half, n_lattice)
                _fill_logdensity(logf, lattice, mu, sig2, dx, c,
                                 use_up, up, use_down, down)
                v, saturated = _cdf_and_pick(logf, lattice, u)
                if not saturated:
                    break
                half *= 2.0
                widened += 1
            values[i, j] = v
    return widened


@njit(cache=True)
def coupled_gibbs_sweep(values_lo, values_hi, dx, c, h_on,
                        up_lo, has_up_lo, down_lo, has_down_lo,
                        up_hi, has_up_hi, down_hi, has_down_hi,
                        uniforms, n_lattice):
    k, m = values_lo.shape
    sig2 = dx / 2.0
    sig = math.sqrt(sig2)
    widened = 0
    violations = 0
    f_lo = np.empty(n_lattice)
    f_hi = np.empty(n_lattice)
    for i in range(k):
        for j in range(1, m - 1):
            mu_lo = 0.5 * (values_lo[i, j - 1] + values_lo[i, j + 1])
            mu_hi = 0.5 * (values_hi[i, j - 1] + values_hi[i, j + 1])
            if i > 0:
                uu_lo = h_on
                up_l = values_lo[i - 1, j]
                uu_hi = h_on
                up_h = values_hi[i - 1, j]
            else:
                uu_lo = h_on and has_up_lo
                up_l = up_lo[j] if has_up_lo else 0.0
                uu_hi = h_on and has_up_hi
                up_h = up_hi[j] if has_up_hi else 0.0
            if i < k - 1:
                ud_lo = h_on
                dn_l = values_lo[i + 1, j]
                ud_hi = h_on
                dn_h = values_hi[i + 1, j]
            else:
                ud_lo = h_on and has_down_lo
                dn_l = down_lo[j] if has_down_lo else 0.0
                ud_hi = h_on and has_down_hi
                dn_h = down_hi[j] if has_down_hi else 0.0
            vs_lo = _site_mode(mu_lo, sig2, dx, c, uu_lo, up_l, ud_lo, dn_l)
            vs_hi = _site_mode(mu_hi, sig2, dx, c, uu_hi, up_h, ud_hi, dn_h)
            u = uniforms[i, j - 1]
            half = 8.0 * sig
            v_l = vs_lo
            v_h = vs_hi
            for _ in range(11):
                lo_edge = min(vs_lo, vs_hi) - half
                hi_edge = max(vs_lo, vs_hi) + half
                lattice = _lattice(lo_edge, hi_edge, n_lattice)
                _fill_logdensity(f_lo, lattice, mu_lo, sig2, dx, c,
                                 uu_lo, up_l, ud_lo, dn_l)
                _fill_logdensity(f_hi, lattice, mu_hi, sig2, dx, c,
                                 uu_hi, up_h, ud_hi, dn_h)
                v_l, sat_l = _cdf_and_pick(f_lo, lattice, u)
                v_h, sat_h = _cdf_and_pick(f_hi, lattice, u)
                if not (sat_l or sat_h):
                    break
                half *= 2.0
                widened += 1
            if v_l > v_h:
                violations += 1
            values_lo[i, j] = v_l
            values_hi[i, j] = v_h
    return widened, violations
