"""Experiment runner: named experiments, parallel replication, reports.

Each experiment maps a parameter dictionary to a :class:`ReportBundle`
holding raw sample rows (CSV), a summary (JSON), and a plot spec (SVG).
All randomness is derived from the config seed with the replica index as
the stream id, and reductions are ordered by replica index, so output
bytes depend only on (config, seed) and not on worker count or timing.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import ks_2samp

from kpzlab import kernels, stats, zerotemp
from kpzlab.compose import two_time_direct, two_time_sample
from kpzlab.ensemble import (
    Hamiltonian,
    boltzmann_weight,
    bridge_ensemble,
    monotone_coupled_sweep,
    resample_sweep,
)
from kpzlab.rng import Grid1D, RngStream, sample_bridge, bridge_min_tail
from kpzlab.she import (
    heat_kernel,
    scaled_height,
    she_config,
    solve_narrow_wedge,
)
from kpzlab.zerotemp import default_x_grid, two_time_zero_temp

# Stream-id offset separating direct-method replicas from composed ones.
DIRECT_STREAM_OFFSET = 2**33
# Stream block size per scan point (alpha or beta index).
SCAN_STREAM_BLOCK = 2**24

EXPERIMENT_NAMES = (
    "she-check",
    "two-time-consistency",
    "corr-scan-remote",
    "corr-scan-adjacent",
    "temporal-tails",
    "spatial-extremes",
    "modulus",
    "gibbs-check",
    "zero-temp-scan",
    "appendix-verify",
)


@dataclass
class ExperimentConfig:
    """A named experiment plus its parameter overrides."""

    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 1
    workers: int = 1
    output_dir: str = "out"

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_NAMES:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; "
                f"choose from {', '.join(EXPERIMENT_NAMES)}"
            )
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        defaults = _DEFAULTS[self.experiment]
        unknown = set(self.parameters) - set(defaults)
        if unknown:
            raise ValueError(
                f"unknown parameters for {self.experiment}: {sorted(unknown)}"
            )
        merged = dict(defaults)
        merged.update(self.parameters)
        self.parameters = merged
        if "replicas" in merged and int(merged["replicas"]) < 1:
            raise ValueError("replicas must be >= 1")


@dataclass
class ReportBundle:
    """Everything an experiment produced, ready for emission."""

    name: str
    columns: list
    rows: list
    summary: dict
    plot: dict | None
    passed: bool
    messages: list = field(default_factory=list)


def load_config(path, overrides=(), workers=None, output_dir=None,
                env=None) -> ExperimentConfig:
    """Read a JSON config; apply --set overrides and the KPZLAB_SEED env var."""
    import os

    with open(path) as fh:
        raw = json.load(fh)
    cfg = {
        "experiment": raw["experiment"],
        "parameters": dict(raw.get("parameters", {})),
        "seed": int(raw.get("seed", 1)),
        "workers": int(raw.get("workers", 1)),
        "output_dir": raw.get("output_dir", "out"),
    }
    for item in overrides:
        key, _, value = item.partition("=")
        if not _:
            raise ValueError(f"--set expects key=value, got {item!r}")
        parsed = json.loads(value) if value and value[0] in "[{0123456789-.tfn\"" else value
        if key in ("seed", "workers"):
            cfg[key] = int(parsed)
        elif key in ("experiment", "output_dir"):
            cfg[key] = str(parsed)
        else:
            cfg["parameters"][key] = parsed
    env = os.environ if env is None else env
    if "KPZLAB_SEED" in env:
        cfg["seed"] = int(env["KPZLAB_SEED"])
    if workers is not None:
        cfg["workers"] = workers
    if output_dir is not None:
        cfg["output_dir"] = output_dir
    return ExperimentConfig(**cfg)


def run_experiment(cfg: ExperimentConfig) -> ReportBundle:
    runner = _RUNNERS[cfg.experiment]
    return runner(cfg.parameters, cfg.seed, cfg.workers)


def emit_report(bundle: ReportBundle, output_dir, formats=("csv", "json", "svg")):
    """Write the bundle's files; returns {format: path}."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    if "csv" in formats:
        p = out / f"{bundle.name}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(bundle.columns)
            for row in bundle.rows:
                w.writerow([_cell(v) for v in row])
        paths["csv"] = p
    if "json" in formats:
        p = out / f"{bundle.name}.json"
        payload = {"name": bundle.name, "passed": bundle.passed,
                   "messages": bundle.messages, "summary": bundle.summary}
        with open(p, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
        paths["json"] = p
    if "svg" in formats and bundle.plot is not None:
        p = out / f"{bundle.name}.svg"
        _render_svg(bundle.plot, p)
        paths["svg"] = p
    return paths


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _render_svg(plot: dict, path) -> None:
    import matplotlib

    matplotlib.use("svg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    kind = plot.get("kind", "lines")
    if kind == "loglog":
        for label, xs, ys in plot["series"]:
            ax.plot(xs, ys, "o-", label=label)
        ax.set_xscale("log")
        ax.set_yscale("log")
    elif kind == "ecdf":
        for label, samples in plot["series"]:
            xs = np.sort(np.asarray(samples))
            ys = np.arange(1, len(xs) + 1) / len(xs)
            ax.step(xs, ys, where="post", label=label)
    elif kind == "hist":
        for label, samples in plot["series"]:
            ax.hist(samples, bins=plot.get("bins", 40), alpha=0.6,
                    label=label, density=True)
    else:
        for label, xs, ys in plot["series"]:
            ax.plot(xs, ys, label=label)
    ax.set_xlabel(plot.get("xlabel", ""))
    ax.set_ylabel(plot.get("ylabel", ""))
    ax.set_title(plot.get("title", ""))
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _map_replicas(fn, n: int, workers: int, args: tuple):
    """Ordered map of fn(i, args) over replica indices 0..n-1."""
    if workers <= 1 or n < 4:
        return [fn(i, args) for i in range(n)]
    import multiprocessing

    ctx = multiprocessing.get_context("fork")
    chunk = max(1, n // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
        return list(ex.map(fn, range(n), itertools.repeat(args), chunksize=chunk))


def _warm_kernels() -> None:
    """Trigger kernel compilation in the parent so forked workers inherit it."""
    z0 = np.zeros(10)
    z0[5] = 1.0
    kernels.evolve_she(z0, 0.5, 0.1, 2, np.zeros((2, 8)), True,
                       np.array([2], dtype=np.int64))
    kernels.lpp_last_row(np.zeros((2, 3)))
    kernels.gibbs_sweep(np.zeros((1, 4)), 0.5, 1.0, True, np.zeros(4), False,
                        np.zeros(4), False, np.full((1, 2), 0.5), 64)
    kernels.coupled_gibbs_sweep(np.zeros((1, 4)), np.ones((1, 4)), 0.5, 1.0,
                                True, np.zeros(4), False, np.zeros(4), False,
                                np.zeros(4), False, np.zeros(4), False,
                                np.full((1, 2), 0.5), 64)


# ---------------------------------------------------------------------------
# she-check

def _she_check(params, seed, workers) -> ReportBundle:
    t0 = time.perf_counter()
    cfg = she_config(dx=params["dx"], half_width=params["half_width"],
                     t_final=params["t"], record_times=[params["t"]])
    fld = solve_narrow_wedge(cfg, None)
    xs = fld.space.points()
    win = np.abs(xs) <= params["window"]
    h = fld.h[0]
    oracle = np.log(heat_kernel(params["t"], xs))
    err = np.abs(h - oracle)
    sup_err = float(err[win].max())
    t = params["t"]
    stride = max(1, int(win.sum()) // 64)
    xs_c = xs[win][::stride] / t ** (2.0 / 3.0)
    comp = np.array([scaled_height(fld, t, 1.0, x) for x in xs_c])
    flatness = float(np.ptp(comp + xs_c**2 / 2.0))
    runtime = time.perf_counter() - t0
    tol = params["tolerance"]
    passed = sup_err <= tol and flatness <= tol and runtime < params["runtime_cap"]
    rows = [[float(x), float(hv), float(ov), float(ev)]
            for x, hv, ov, ev in zip(xs[win], h[win], oracle[win], err[win])]
    return ReportBundle(
        name="she-check",
        columns=["x", "H", "log_heat_kernel", "abs_error"],
        rows=rows,
        summary={"sup_error": sup_err, "parabola_flatness": flatness,
                 "tolerance": tol, "runtime_ok": runtime < params["runtime_cap"]},
        plot={"kind": "lines", "title": "noise-off narrow wedge vs heat kernel",
              "xlabel": "x", "ylabel": "log Z",
              "series": [("solver", xs[win].tolist(), h[win].tolist()),
                         ("heat kernel", xs[win].tolist(), oracle[win].tolist())]},
        passed=passed,
        messages=[] if passed else [f"sup error {sup_err:.2e} or flatness "
                                    f"{flatness:.2e} above {tol}"],
    )


# ---------------------------------------------------------------------------
# two-time-consistency

def _tt_worker(i, args):
    seed, t, alpha, dx, half_width = args
    cfg = she_config(dx=dx, half_width=half_width, t_final=max(t, (alpha - 1) * t))
    if i % 2 == 0:
        p = two_time_sample(cfg, t, alpha, RngStream(seed, i // 2))
    else:
        p = two_time_direct(cfg, t, alpha,
                            RngStream(seed, i // 2 + DIRECT_STREAM_OFFSET))
    return (p.t, p.alpha, p.method, p.h_one, p.h_alpha, p.seed, p.stream)


def _two_time_consistency(params, seed, workers) -> ReportBundle:
    n = int(params["replicas"])
    _warm_kernels()
    args = (seed, params["t"], params["alpha"], params["dx"], params["half_width"])
    rows = _map_replicas(_tt_worker, 2 * n, workers, args)
    composed = np.array([r[4] for r in rows if r[2] == "composed"])
    direct = np.array([r[4] for r in rows if r[2] == "direct"])
    ks = ks_2samp(composed, direct)
    level = params["ks_level"]
    passed = bool(ks.pvalue > level)
    return ReportBundle(
        name="two-time-consistency",
        columns=["t", "alpha", "method", "h_one", "h_alpha", "seed", "stream"],
        rows=[list(r) for r in rows],
        summary={"ks_statistic": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
                 "level": level, "replicas_per_method": n,
                 "composed_mean": float(composed.mean()),
                 "direct_mean": float(direct.mean())},
        plot={"kind": "ecdf", "title": "two-time value: direct vs composed",
              "xlabel": "h(alpha, 0)", "ylabel": "ECDF",
              "series": [("composed", composed.tolist()),
                         ("direct", direct.tolist())]},
        passed=passed,
        messages=[] if passed else
        [f"KS p={ks.pvalue:.4f} at or below level {level}"],
    )


# ---------------------------------------------------------------------------
# zero-temperature scans

def _zt_worker(i, args):
    seed, n, beta, block = args
    grid = default_x_grid(n, beta)
    p = two_time_zero_temp(n, beta, grid, RngStream(seed, block + i))
    return (p.n, p.beta, p.b_one, p.b_beta, p.seed)


def _scan_pairs(params, seed, workers, betas):
    n = int(params["n"])
    reps = int(params["replicas"])
    zerotemp.warm_calibration(n)
    _warm_kernels()
    rows = []
    per_beta = {}
    for k, beta in enumerate(betas):
        args = (seed, n, float(beta), (k + 1) * SCAN_STREAM_BLOCK)
        out = _map_replicas(_zt_worker, reps, workers, args)
        rows.extend(list(r) for r in out)
        per_beta[beta] = np.array([(r[2], r[3]) for r in out])
    return rows, per_beta


def _precision_guard(estimates, reps, min_replicas=32):
    """Messages naming any scan point too noisy to fit; empty when precise."""
    msgs = []
    if reps < min_replicas:
        msgs.append(f"insufficient precision: replicas={reps} < {min_replicas}")
    for tag, value, se in estimates:
        if not np.isfinite(value) or value <= 0:
            msgs.append(f"insufficient precision: estimate at {tag} is {value:.4f}")
        elif se > max(0.025, abs(value) / 3.0):
            msgs.append(
                f"insufficient precision: stderr {se:.4f} too large at {tag}")
    return msgs


def _corr_scan_remote(params, seed, workers) -> ReportBundle:
    alphas = [float(a) for a in params["alphas"]]
    rows, per = _scan_pairs(params, seed, workers, [a - 1.0 for a in alphas])
    corrs, ses = [], []
    for a in alphas:
        est, se = stats.pearson_corr(per[a - 1.0])
        corrs.append(est)
        ses.append(se)
    msgs = _precision_guard(
        [(f"alpha={a}", c, s) for a, c, s in zip(alphas, corrs, ses)],
        int(params["replicas"]))
    summary = {"alphas": alphas, "correlations": corrs, "stderrs": ses,
               "slope_window": list(params["slope_window"])}
    if msgs:
        return ReportBundle("corr-scan-remote",
                            ["n", "beta", "b_one", "b_beta", "seed"], rows,
                            summary, None, False, msgs)
    slope, icpt, r2 = stats.fit_power_law(alphas, corrs)
    lo, hi = params["slope_window"]
    passed = bool(lo <= slope <= hi)
    summary.update({"slope": slope, "intercept": icpt, "r_squared": r2})
    fit_ys = [math.exp(icpt) * a**slope for a in alphas]
    return ReportBundle(
        name="corr-scan-remote",
        columns=["n", "beta", "b_one", "b_beta", "seed"],
        rows=rows,
        summary=summary,
        plot={"kind": "loglog", "title": "remote two-time correlation decay",
              "xlabel": "alpha", "ylabel": "Corr",
              "series": [("measured", alphas, corrs), ("fit", alphas, fit_ys)]},
        passed=passed,
        messages=[] if passed else
        [f"remote slope {slope:.3f} outside [{lo}, {hi}]"],
    )


def _corr_scan_adjacent(params, seed, workers) -> ReportBundle:
    betas = [float(b) for b in params["betas"]]
    rows, per = _scan_pairs(params, seed, workers, betas)
    corrs, ses = [], []
    for b in betas:
        est, se = stats.pearson_corr(per[b])
        corrs.append(est)
        ses.append(se)
    one_minus = [1.0 - c for c in corrs]
    msgs = _precision_guard(
        [(f"beta={b}", omc, s) for b, omc, s in zip(betas, one_minus, ses)],
        int(params["replicas"]))
    summary = {"betas": betas, "correlations": corrs, "stderrs": ses,
               "slope_window": list(params["slope_window"])}
    if msgs:
        return ReportBundle("corr-scan-adjacent",
                            ["n", "beta", "b_one", "b_beta", "seed"], rows,
                            summary, None, False, msgs)
    slope, icpt, r2 = stats.fit_power_law(betas, one_minus)
    lo, hi = params["slope_window"]
    passed = bool(lo <= slope <= hi)
    summary.update({"slope": slope, "intercept": icpt, "r_squared": r2})
    fit_ys = [math.exp(icpt) * b**slope for b in betas]
    return ReportBundle(
        name="corr-scan-adjacent",
        columns=["n", "beta", "b_one", "b_beta", "seed"],
        rows=rows,
        summary=summary,
        plot={"kind": "loglog", "title": "adjacent two-time decorrelation growth",
              "xlabel": "beta", "ylabel": "1 - Corr",
              "series": [("measured", betas, one_minus), ("fit", betas, fit_ys)]},
        passed=passed,
        messages=[] if passed else
        [f"adjacent slope {slope:.3f} outside [{lo}, {hi}]"],
    )


def _temporal_tails(params, seed, workers) -> ReportBundle:
    beta = float(params["beta"])
    rows, per = _scan_pairs(params, seed, workers, [beta])
    pairs = per[beta]
    d = (pairs[:, 1] - pairs[:, 0]) / beta ** (1.0 / 3.0)
    centered = d - np.median(d)
    n = len(d)
    s_lo, s_hi = params["s_values"]
    up_lo = float((centered >= s_lo).mean())
    up_hi = float((centered >= s_hi).mean())
    results = {"upper_decreasing": bool(up_hi < up_lo)}
    msgs = [] if results["upper_decreasing"] else [
        f"upper tail at s={s_hi} not below s={s_lo}"]
    tails = {}
    for s in (s_lo, s_hi):
        pu = float((centered >= s).mean())
        pl = float((centered <= -s).mean())
        se = math.sqrt((pu * (1 - pu) + pl * (1 - pl)) / n)
        ok = pl <= pu + 3.0 * se
        tails[f"s={s}"] = {"upper": pu, "lower": pl, "se": se,
                           "lower_le_upper": bool(ok)}
        if not ok:
            msgs.append(f"lower tail exceeds upper at s={s}")
    passed = not msgs
    return ReportBundle(
        name="temporal-tails",
        columns=["n", "beta", "b_one", "b_beta", "seed"],
        rows=rows,
        summary={"beta": beta, "median": float(np.median(d)),
                 "tails": tails, **results},
        plot={"kind": "ecdf",
              "title": "scaled two-time difference (median-centered)",
              "xlabel": "(B_{1+beta} - B_1)/beta^{1/3} - median",
              "ylabel": "ECDF", "series": [("centered D", centered.tolist())]},
        passed=passed,
        messages=msgs,
    )


# ---------------------------------------------------------------------------
# SHE spatial experiments

def _profile_worker(i, args):
    """One scaled spatial profile h(1, x) at time t on the solver grid."""
    seed, t, dx, half_width, record = args
    cfg = she_config(dx=dx, half_width=half_width, t_final=record,
                     record_times=[record])
    fld = solve_narrow_wedge(cfg, RngStream(seed, i))
    s = t ** (2.0 / 3.0)
    xs = fld.space.points() / s
    vals = t ** (-1.0 / 3.0) * (np.log(fld.row(record)) + record / 24.0)
    return xs, vals


def _spatial_extremes(params, seed, workers) -> ReportBundle:
    n = int(params["replicas"])
    t = float(params["t"])
    nu = float(params["nu"])
    _warm_kernels()
    args = (seed, t, params["dx"], params["half_width"], t)
    out = _map_replicas(_profile_worker, n, workers, args)
    sups, infs = [], []
    for xs, vals in out:
        sups.append(float(np.max(vals + (1 - nu) * xs**2 / 2)))
        infs.append(float(np.min(vals + (1 + nu) * xs**2 / 2)))
    sups = np.array(sups)
    infs = np.array(infs)
    s_grid = [float(s) for s in params["s_grid"]]
    upper = [stats.tail_estimate(sups, s) for s in s_grid]
    lower = [stats.tail_estimate(-infs, s) for s in s_grid]
    # qualitative decay: point estimates non-increasing within CI slack
    ok_u = all(upper[i + 1][0] <= upper[i][2] for i in range(len(s_grid) - 1))
    ok_l = all(lower[i + 1][0] <= lower[i][2] for i in range(len(s_grid) - 1))
    passed = bool(ok_u and ok_l)
    return ReportBundle(
        name="spatial-extremes",
        columns=["replica", "sup_compensated", "inf_compensated"],
        rows=[[i, float(a), float(b)] for i, (a, b) in enumerate(zip(sups, infs))],
        summary={"s_grid": s_grid,
                 "sup_tail": [list(u) for u in upper],
                 "inf_tail": [list(v) for v in lower],
                 "nu": nu, "t": t},
        plot={"kind": "ecdf", "title": "compensated spatial extremes",
              "xlabel": "value", "ylabel": "ECDF",
              "series": [("sup + (1-nu)x^2/2", sups.tolist()),
                         ("-inf - (1+nu)x^2/2 ", (-infs).tolist())]},
        passed=passed,
        messages=[] if passed else ["tail estimates not decaying in s"],
    )


def _modulus(params, seed, workers) -> ReportBundle:
    n = int(params["replicas"])
    t = float(params["t"])
    a, b = params["interval"]
    _warm_kernels()
    args = (seed, t, params["dx"], params["half_width"], t)
    out = _map_replicas(_profile_worker, n, workers, args)
    cs = []
    for xs, vals in out:
        win = (xs >= a) & (xs <= b)
        x = xs[win]
        g = vals[win] + x**2 / 2.0
        dx_mat = np.abs(x[:, None] - x[None, :])
        dg = np.abs(g[:, None] - g[None, :])
        span = b - a
        mask = (dx_mat > 0) & (dx_mat < span * (1 - 1e-12))
        w = dx_mat[mask] ** (-0.5) * np.log(span / dx_mat[mask]) ** (-2.0 / 3.0)
        cs.append(float(np.max(w * dg[mask])))
    cs = np.array(cs)
    s_grid = [float(s) for s in params["s_grid"]]
    tails = [stats.tail_estimate(cs, s) for s in s_grid]
    ok = all(tails[i + 1][0] <= tails[i][2] for i in range(len(s_grid) - 1))
    return ReportBundle(
        name="modulus",
        columns=["replica", "modulus"],
        rows=[[i, float(c)] for i, c in enumerate(cs)],
        summary={"s_grid": s_grid, "tails": [list(u) for u in tails],
                 "interval": [a, b], "median": float(np.median(cs))},
        plot={"kind": "ecdf", "title": "spatial modulus of continuity",
              "xlabel": "C", "ylabel": "ECDF", "series": [("C", cs.tolist())]},
        passed=bool(ok),
        messages=[] if ok else ["modulus tail not decaying in s"],
    )


# ---------------------------------------------------------------------------
# gibbs-check

def _gibbs_invariance_worker(i, args):
    seed, n_nodes = args
    grid = Grid1D(0.0, 1.0, n_nodes)
    mid = n_nodes // 2
    b = sample_bridge(0.0, 1.0, 0.0, 0.0, grid, RngStream(seed, 4 * i))
    e = bridge_ensemble(grid, [0.0], [0.0])
    e.curves[0, :] = b.values
    e = resample_sweep(e, None, RngStream(seed, 4 * i + 1))
    e = resample_sweep(e, None, RngStream(seed, 4 * i + 2))
    direct = sample_bridge(0.0, 1.0, 0.0, 0.0, grid,
                           RngStream(seed, 4 * i + 3)).values[mid]
    return float(direct), float(e.curves[0, mid])


def _gibbs_coupling_worker(s, args):
    seed, n_nodes, sweeps = args
    grid = Grid1D(0.0, 1.0, n_nodes)
    h = Hamiltonian(1.0)
    lo = bridge_ensemble(grid, [0.0, -1.0], [0.0, -1.0])
    hi = bridge_ensemble(grid, [5.0, 4.0], [5.0, 4.0])
    violations = 0
    for k in range(sweeps):
        lo, hi = monotone_coupled_sweep(lo, hi, h,
                                        RngStream(seed, s * sweeps + k))
        if np.any(lo.curves > hi.curves):
            violations += 1
    gap_mean = float(np.mean(hi.curves - lo.curves))
    return violations, gap_mean


def _gibbs_check(params, seed, workers) -> ReportBundle:
    n_chains = int(params["chains"])
    _warm_kernels()
    inv = _map_replicas(_gibbs_invariance_worker, n_chains, workers,
                        (seed, int(params["nodes"])))
    direct = np.array([d for d, _ in inv])
    swept = np.array([s for _, s in inv])
    ks = ks_2samp(direct, swept)
    level = params["ks_level"]
    coup = _map_replicas(_gibbs_coupling_worker, int(params["coupling_seeds"]),
                         workers, (seed + 1, int(params["nodes"]),
                                   int(params["coupling_sweeps"])))
    violations = int(sum(v for v, _ in coup))
    passed = bool(ks.pvalue > level and violations == 0)
    msgs = []
    if ks.pvalue <= level:
        msgs.append(f"free-bridge invariance KS p={ks.pvalue:.4f} <= {level}")
    if violations:
        msgs.append(f"monotone coupling violated {violations} times")
    rows = [["direct", i, float(v)] for i, v in enumerate(direct)]
    rows += [["swept", i, float(v)] for i, v in enumerate(swept)]
    return ReportBundle(
        name="gibbs-check",
        columns=["kind", "chain", "mid_site_value"],
        rows=rows,
        summary={"ks_pvalue": float(ks.pvalue), "ks_statistic": float(ks.statistic),
                 "level": level, "coupling_violations": violations,
                 "coupling_runs": int(params["coupling_seeds"]),
                 "coupling_sweeps": int(params["coupling_sweeps"]),
                 "mean_gap_after": float(np.mean([g for _, g in coup]))},
        plot={"kind": "hist", "title": "free bridge mid-site: direct vs swept",
              "xlabel": "value", "ylabel": "density",
              "series": [("direct", direct.tolist()), ("swept", swept.tolist())]},
        passed=passed,
        messages=msgs,
    )


# ---------------------------------------------------------------------------
# zero-temp-scan (module acceptance suite)

def _zt_profile_worker(i, args):
    seed, n, block = args
    grid = Grid1D(-1.0, 1.0, 5)
    p = zerotemp.airy_like_profile(n, grid, RngStream(seed, block + i))
    return float(p.values[2]), float(p.values[3])


def _zero_temp_scan(params, seed, workers) -> ReportBundle:
    msgs = []
    summary = {}
    remote = _corr_scan_remote(
        {"n": params["n"], "replicas": params["replicas"],
         "alphas": params["alphas"], "slope_window": params["remote_window"]},
        seed, workers)
    adjacent = _corr_scan_adjacent(
        {"n": params["n"], "replicas": params["replicas"],
         "betas": params["betas"], "slope_window": params["adjacent_window"]},
        seed + 1, workers)
    summary["remote"] = remote.summary
    summary["adjacent"] = adjacent.summary
    msgs += remote.messages + adjacent.messages

    # variance stabilization across n, and stationarity across x
    n_lo, n_hi = params["n"], params["n_refined"]
    reps = int(params["self_test_replicas"])
    zerotemp.warm_calibration(int(n_lo))
    zerotemp.warm_calibration(int(n_hi))
    var = {}
    stat_samples = {}
    for k, n in enumerate((int(n_lo), int(n_hi))):
        out = _map_replicas(_zt_profile_worker, reps, workers,
                            (seed + 2, n, (k + 9) * SCAN_STREAM_BLOCK))
        at0 = np.array([a for a, _ in out])
        at05 = np.array([b for _, b in out]) + zerotemp.PARABOLA_COEFF * 0.25
        var[n] = float(at0.var())
        stat_samples[n] = (at0, at05)
    rel = abs(var[int(n_lo)] - var[int(n_hi)]) / var[int(n_hi)]
    var_ok = bool(rel <= params["var_rel_tol"])
    if not var_ok:
        msgs.append(f"variance not stabilizing: relative change {rel:.3f}")
    ks = ks_2samp(*stat_samples[int(n_hi)])
    stat_ok = bool(ks.pvalue > params["stationarity_level"])
    if not stat_ok:
        msgs.append(f"stationarity KS p={ks.pvalue:.4f} at n={n_hi}")
    summary["variance_by_n"] = {str(k): v for k, v in var.items()}
    summary["variance_rel_change"] = rel
    summary["stationarity_ks_pvalue"] = float(ks.pvalue)
    passed = remote.passed and adjacent.passed and var_ok and stat_ok
    return ReportBundle(
        name="zero-temp-scan",
        columns=["n", "beta", "b_one", "b_beta", "seed"],
        rows=remote.rows + adjacent.rows,
        summary=summary,
        plot=remote.plot,
        passed=passed,
        messages=msgs,
    )


# ---------------------------------------------------------------------------
# appendix-verify

def _random_joint(gen, kind: str) -> stats.DiscreteJoint:
    xs = np.sort(gen.uniform(-2, 2, size=4))
    ys = np.sort(gen.uniform(-2, 2, size=4))
    if kind == "independent":
        px = gen.dirichlet(np.ones(4))
        py = gen.dirichlet(np.ones(4))
        p = np.outer(px, py)
    elif kind == "coupled":
        # X = Y + noise on a grid: TP2-style positive dependence
        sigma = gen.uniform(0.3, 1.5)
        w = np.exp(-((xs[:, None] - ys[None, :]) ** 2) / (2 * sigma**2))
        p = w * gen.dirichlet(np.ones(4))[None, :]
        p /= p.sum()
    else:
        p = gen.dirichlet(np.ones(16)).reshape(4, 4)
    return stats.DiscreteJoint(xs, ys, p / p.sum())


def _appendix_verify(params, seed, workers) -> ReportBundle:
    t0 = time.perf_counter()
    gen = RngStream(seed, 7).generator()
    n_joints = int(params["joints"])
    kinds = ["independent", "coupled", "random"]
    rows = []
    n_pass_hyp = 0
    n_asserted = 0
    failures = []
    for j in range(n_joints):
        kind = kinds[j % 3]
        joint = _random_joint(gen, kind)
        a = float(np.median(joint.ys))
        rep = stats.monotone_cov_check(joint, a)
        conclusions_ok = all(rep.asserted_inequalities.values())
        if rep.hypotheses_passed:
            n_pass_hyp += 1
            n_asserted += len(rep.asserted_inequalities)
            if not conclusions_ok:
                failures.append(f"joint {j} ({kind}): covariance conclusions fail")
            rep2 = stats.cov_lower_from_conditional(joint, a, 0.0001)
            if rep2.asserted_inequalities and not all(
                    rep2.asserted_inequalities.values()):
                failures.append(f"joint {j} ({kind}): conditional bound fails")
            if rep2.asserted_inequalities:
                n_asserted += len(rep2.asserted_inequalities)
        rows.append([j, kind, rep.hypotheses_passed,
                     float(rep.margins["cov"]), conclusions_ok])
    # residual-vs-chi^{3/2} cap over the (chi, psi) grid
    cap_ok = True
    worst_ratio = 0.0
    for chi in np.linspace(0.01, 0.25, 13):
        for psi in np.linspace(-math.sqrt(chi), math.sqrt(chi), 11):
            rep = stats.corr_bounds_check(
                stats.CorrDecomposition(chi=float(chi), psi=float(psi)),
                params["resid_cap"])
            worst_ratio = max(worst_ratio, abs(rep.margins["ratio"]))
            cap_ok &= rep.asserted_inequalities["abs_residual_le_cap"]
    if not cap_ok:
        failures.append("corr expansion residual exceeded the chi^{3/2} cap")
    # exact expansion vs Gaussian Monte Carlo at fixed (chi, psi) points
    mc_points = [(1.0, 0.0), (0.04, 0.1), (0.09, 0.3), (0.25, -0.2),
                 (0.16, 0.2), (0.01, -0.05)]
    mc_n = int(params["mc_samples"])
    mc_results = []
    for chi, psi in mc_points:
        g = RngStream(seed, 11).generator()
        y = g.standard_normal(mc_n)
        extra = math.sqrt(max(chi - psi * psi, 0.0))
        x = psi * y + extra * g.standard_normal(mc_n)
        z = x + y
        emp = float(np.corrcoef(z, y)[0, 1])
        exact = stats.corr_expansion_exact(
            stats.CorrDecomposition(chi=chi, psi=psi))
        se = (1 - emp**2) / math.sqrt(mc_n)
        ok = abs(emp - exact) <= 3.0 * se
        mc_results.append({"chi": chi, "psi": psi, "exact": exact,
                           "empirical": emp, "se": se, "ok": bool(ok)})
        if not ok:
            failures.append(f"MC corr mismatch at chi={chi}, psi={psi}")
    runtime = time.perf_counter() - t0
    passed = not failures and runtime < params["runtime_cap"]
    return ReportBundle(
        name="appendix-verify",
        columns=["joint", "kind", "hypotheses_passed", "cov", "conclusions_ok"],
        rows=rows,
        summary={"joints": n_joints, "hypotheses_passed": n_pass_hyp,
                 "inequalities_asserted": n_asserted,
                 "worst_residual_ratio": worst_ratio,
                 "mc_checks": mc_results,
                 "runtime_ok": runtime < params["runtime_cap"]},
        plot={"kind": "hist", "title": "covariance of scanned joints",
              "xlabel": "Cov(X,Y)", "ylabel": "density",
              "series": [("passing joints",
                          [r[3] for r in rows if r[2]]),
                         ("all joints", [r[3] for r in rows])]},
        passed=passed,
        messages=failures,
    )


_DEFAULTS = {
    "she-check": {"dx": 1 / 64, "half_width": 8.0, "t": 1.0, "window": 4.0,
                  "tolerance": 1e-3, "runtime_cap": 10.0},
    "two-time-consistency": {"t": 1.0, "alpha": 2.0, "dx": 1 / 32,
                             "half_width": 8.0, "replicas": 500,
                             "ks_level": 0.01},
    "corr-scan-remote": {"n": 200, "replicas": 2000,
                         "alphas": [4.0, 8.0, 16.0, 32.0],
                         "slope_window": [-0.55, -0.15]},
    "corr-scan-adjacent": {"n": 200, "replicas": 2000,
                           "betas": [0.025, 0.05, 0.1, 0.2],
                           "slope_window": [0.40, 0.95]},
    "temporal-tails": {"n": 200, "replicas": 2000, "beta": 0.1,
                       "s_values": [2.0, 4.0]},
    "spatial-extremes": {"t": 1.0, "nu": 0.25, "dx": 1 / 16, "half_width": 6.0,
                         "replicas": 200, "s_grid": [1.0, 1.5, 2.0, 2.5]},
    "modulus": {"t": 1.0, "dx": 1 / 16, "half_width": 6.0, "replicas": 200,
                "interval": [-1.0, 1.0], "s_grid": [2.0, 3.0, 4.0, 5.0]},
    "gibbs-check": {"chains": 2000, "nodes": 26, "ks_level": 0.01,
                    "coupling_seeds": 100, "coupling_sweeps": 100},
    "zero-temp-scan": {"n": 200, "n_refined": 400, "replicas": 2000,
                       "alphas": [4.0, 8.0, 16.0, 32.0],
                       "betas": [0.025, 0.05, 0.1, 0.2],
                       "remote_window": [-0.55, -0.15],
                       "adjacent_window": [0.40, 0.95],
                       "self_test_replicas": 2000,
                       "var_rel_tol": 0.20, "stationarity_level": 0.05},
    "appendix-verify": {"joints": 1000, "resid_cap": 5.0,
                        "mc_samples": 1_000_000, "runtime_cap": 60.0},
}

_RUNNERS = {
    "she-check": _she_check,
    "two-time-consistency": _two_time_consistency,
    "corr-scan-remote": _corr_scan_remote,
    "corr-scan-adjacent": _corr_scan_adjacent,
    "temporal-tails": _temporal_tails,
    "spatial-extremes": _spatial_extremes,
    "modulus": _modulus,
    "gibbs-check": _gibbs_check,
    "zero-temp-scan": _zero_temp_scan,
    "appendix-verify": _appendix_verify,
}
