"""Estimators and brute-force checkers for the tail-to-covariance toolbox.

The checkers operate on finitely supported joints (:class:`DiscreteJoint`)
and verify the product-form monotonicity hypotheses directly -- never
through conditional probabilities, which may not exist.  Conclusions are
asserted to 1e-12; reports serialize to JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from kpzlab.rng import RngStream

_TOL = 1e-12
_BOOT_SEED = 0xB007 % 2**64
_N_BOOT = 1000


@dataclass
class Report:
    """Outcome of one brute-force check; serializes to stable JSON."""

    name: str
    hypotheses_passed: bool
    asserted_inequalities: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return self.hypotheses_passed and all(self.asserted_inequalities.values())

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "hypotheses_passed": self.hypotheses_passed,
            "asserted_inequalities": self.asserted_inequalities,
            "margins": self.margins,
            "notes": self.notes,
        }
        return json.dumps(payload, sort_keys=True)


@dataclass(frozen=True)
class CorrDecomposition:
    """Variance/covariance ratios (chi, psi) of an increment X against Y.

    chi = Var(X)/Var(Y), psi = Cov(X,Y)/Var(Y), theta = chi - psi^2 >= 0.
    """

    chi: float
    psi: float

    def __post_init__(self):
        if self.chi < 0:
            raise ValueError("chi must be nonnegative")
        if self.psi * self.psi > self.chi + 1e-12:
            raise ValueError("psi^2 exceeds chi, violating Cauchy-Schwarz")

    @property
    def theta(self) -> float:
        return self.chi - self.psi * self.psi

    @classmethod
    def from_xy(cls, x, y) -> "CorrDecomposition":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        vy = float(np.var(y))
        if vy <= 0:
            raise ValueError("Var(Y) must be positive")
        vx = float(np.var(x))
        cov = float(np.mean((x - x.mean()) * (y - y.mean())))
        return cls(chi=vx / vy, psi=cov / vy)


@dataclass(frozen=True)
class TailSpec:
    """Stretched-exponential tail envelope exp(-c s^alpha) past s0, scale theta."""

    theta: float
    alpha: float
    c: float
    s0: float

    def __post_init__(self):
        for name in ("theta", "alpha", "c", "s0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class DiscreteJoint:
    """Finitely supported joint law of (X, Y): support grids and a p-matrix."""

    __slots__ = ("xs", "ys", "p")

    def __init__(self, xs, ys, p):
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        p = np.asarray(p, dtype=np.float64)
        if xs.ndim != 1 or ys.ndim != 1 or p.shape != (len(xs), len(ys)):
            raise ValueError("p must be (len(xs), len(ys))")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("support grids must be strictly increasing")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > _TOL:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        self.xs = xs
        self.ys = ys
        self.p = p

    @property
    def px(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def py(self) -> np.ndarray:
        return self.p.sum(axis=0)

    def mean_x(self) -> float:
        return float(self.px @ self.xs)

    def mean_y(self) -> float:
        return float(self.py @ self.ys)

    def cov(self) -> float:
        exy = float(self.xs @ self.p @ self.ys)
        return exy - self.mean_x() * self.mean_y()


def pearson_corr(pairs) -> tuple[float, float]:
    """Sample Pearson correlation with a seeded bootstrap standard error."""
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) pairs")
    x, y = arr[:, 0], arr[:, 1]
    if np.var(x) <= 0 or np.var(y) <= 0:
        raise ValueError("correlation undefined: a coordinate has zero variance")
    est = _corr(x, y)
    n = len(x)
    gen = RngStream(_BOOT_SEED, n).generator()
    reps = np.empty(_N_BOOT)
    for b in range(_N_BOOT):
        idx = gen.integers(0, n, size=n)
        xb, yb = x[idx], y[idx]
        if np.var(xb) <= 0 or np.var(yb) <= 0:
            reps[b] = est
        else:
            reps[b] = _corr(xb, yb)
    return est, float(np.std(reps, ddof=1))


def _corr(x, y) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    return float((xc @ yc) / math.sqrt((xc @ xc) * (yc @ yc)))


def fit_power_law(xs, ys) -> tuple[float, float, float]:
    """Least squares in log-log coordinates: (slope, intercept, r_squared)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < 3 or len(xs) != len(ys):
        raise ValueError("need at least 3 matched points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("power-law fit needs positive inputs")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), r2


def tail_estimate(samples, threshold: float) -> tuple[float, float, float]:
    """Exceedance frequency P(X > threshold) with a 95% Wilson interval."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    n = samples.size
    k = int(np.count_nonzero(samples > threshold))
    p = k / n
    z = 1.959963984540054  # 97.5% normal quantile
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return p, max(0.0, center - half), min(1.0, center + half)


def corr_expansion_exact(d: CorrDecomposition) -> float:
    """Corr(X+Y, Y) expressed through (chi, psi): (1+psi)/sqrt(1+2 psi+chi)."""
    rad = 1.0 + 2.0 * d.psi + d.chi
    if rad <= 0:
        raise ValueError("degenerate sum: 1 + 2 psi + chi must be positive")
    return (1.0 + d.psi) / math.sqrt(rad)


def corr_bounds_check(d: CorrDecomposition, c_cap: float) -> Report:
    """Residual of Corr(X+Y, Y) against 1 - theta/2, compared to c_cap chi^{3/2}.

    Verifies the two-sided magnitude bound |R| <= c_cap chi^{3/2} and
    reports the signed ratio; a one-sided positive lower constant is not
    asserted because the residual's sign can flip for strongly negative psi.
    """
    if max(d.chi, abs(2.0 * d.psi + d.chi)) >= 1.0:
        raise ValueError("hypothesis max{chi, |2 psi + chi|} < 1 violated")
    exact = corr_expansion_exact(d)
    resid = exact - (1.0 - d.theta / 2.0)
    cap = c_cap * d.chi**1.5
    ratio = 0.0 if d.chi == 0 else resid / d.chi**1.5
    return Report(
        name="corr_expansion_residual",
        hypotheses_passed=True,
        asserted_inequalities={"abs_residual_le_cap": bool(abs(resid) <= cap + _TOL)},
        margins={"residual": resid, "cap": cap, "ratio": ratio, "exact": exact},
    )


def _tail_tables(j: DiscreteJoint):
    """Marginal and joint threshold tables on sentinel-padded support grids.

    X thresholds are the support values plus a sentinel below the support
    (where P(X>r)=1); Y thresholds get a sentinel on the relevant side.
    Checking the product-form inequalities on these grids covers all real
    thresholds, because every probability involved is piecewise constant
    with breakpoints on the support.
    """
    nx, ny = len(j.xs), len(j.ys)
    tail_y = np.concatenate([[1.0], 1.0 - np.cumsum(j.py)])  # P(Y>u), sentinel+ys
    cdf_y = np.concatenate([np.cumsum(j.py), [1.0]])  # P(Y<=u), ys+sentinel
    joint_gt = np.zeros((nx + 1, ny + 1))  # P(X>r, Y>u)
    joint_le = np.zeros((nx + 1, ny + 1))  # P(X>r, Y<=u)
    for ri in range(nx + 1):
        col = j.p[ri:, :].sum(axis=0)
        joint_gt[ri, 0] = col.sum()
        joint_le[ri, ny] = col.sum()
        for uj in range(ny):
            joint_gt[ri, uj + 1] = col[uj + 1:].sum()
            joint_le[ri, uj] = col[: uj + 1].sum()
    return tail_y, cdf_y, joint_gt, joint_le


def _hypotheses_hold(j: DiscreteJoint) -> tuple[bool, float]:
    """Scan the two product-form monotonicity hypotheses over all thresholds.

    A.1: P(Y>v) P(X>r, Y>u) >= P(Y>u) P(X>r, Y>v)       for u > v,
    A.2: P(Y<=v) P(X>r, Y<=u) >= P(Y<=u) P(X>r, Y<=v)   for u > v.

    Returns (hold, worst_margin).
    """
    tail_y, cdf_y, joint_gt, joint_le = _tail_tables(j)
    n_r = joint_gt.shape[0]
    worst = math.inf
    for ri in range(n_r):
        for uj in range(len(tail_y)):
            for vj in range(uj):
                m1 = tail_y[vj] * joint_gt[ri, uj] - tail_y[uj] * joint_gt[ri, vj]
                worst = min(worst, m1)
    for ri in range(n_r):
        for uj in range(len(cdf_y)):
            for vj in range(uj):
                m2 = cdf_y[vj] * joint_le[ri, uj] - cdf_y[uj] * joint_le[ri, vj]
                worst = min(worst, m2)
    return worst >= -_TOL, worst


def _cov_bound_rhs(j: DiscreteJoint, a: float) -> tuple[float, bool]:
    """Right side of the covariance lower bound at split level a.

    P(Y>=a) (E[X|Y>=a] - E[X]) (E[Y|Y>a] - E[Y|Y<=a]); defined as 0 when
    any conditioning event is degenerate.
    """
    py = j.py
    ge = j.ys >= a
    gt = j.ys > a
    le = j.ys <= a
    p_ge = float(py[ge].sum())
    p_gt = float(py[gt].sum())
    p_le = float(py[le].sum())
    if p_ge <= 0 or p_gt <= 0 or p_le <= 0 or p_ge >= 1:
        return 0.0, True
    ex_ge = float((j.p[:, ge].sum(axis=1) @ j.xs)) / p_ge
    ey_gt = float((py[gt] @ j.ys[gt])) / p_gt
    ey_le = float((py[le] @ j.ys[le])) / p_le
    return p_ge * (ex_ge - j.mean_x()) * (ey_gt - ey_le), False


def monotone_cov_check(j: DiscreteJoint, a: float) -> Report:
    """Brute-force verification of the monotone-covariance lemma on a joint.

    Exhaustively checks the hypotheses over all support thresholds; when
    they hold, asserts Cov(X,Y) >= 0 and the conditional-split lower bound
    at level ``a``, both to 1e-12.
    """
    holds, worst = _hypotheses_hold(j)
    cov = j.cov()
    report = Report(name="monotone_cov_check", hypotheses_passed=holds,
                    margins={"hypothesis_worst_margin": worst, "cov": cov})
    if not holds:
        report.notes.append("hypotheses fail; conclusions not asserted")
        return report
    rhs, degenerate = _cov_bound_rhs(j, a)
    report.margins["split_bound_rhs"] = rhs
    if degenerate:
        report.notes.append("conditioning at a is degenerate; bound side is 0")
    report.asserted_inequalities = {
        "cov_nonnegative": bool(cov >= -_TOL),
        "cov_ge_split_bound": bool(cov >= rhs - _TOL),
    }
    return report


def cov_lower_from_conditional(j: DiscreteJoint, c1: float, c2: float) -> Report:
    """Covariance lower bound from a conditional-mean lift.

    Requires the monotonicity hypotheses and E[X | Y >= c1] >= E[X] + c2;
    then Cov(X,Y) >= c2 P(Y>=c1) (E[Y|Y>=c1] - E[Y|Y<=c1]) to 1e-12.
    """
    holds, worst = _hypotheses_hold(j)
    report = Report(name="cov_lower_from_conditional", hypotheses_passed=holds,
                    margins={"hypothesis_worst_margin": worst, "cov": j.cov()})
    if not holds:
        report.notes.append("hypotheses fail; no assertion")
        return report
    py = j.py
    ge = j.ys >= c1
    le = j.ys <= c1
    p_ge = float(py[ge].sum())
    p_le = float(py[le].sum())
    if p_ge <= 0 or p_le <= 0:
        report.notes.append("degenerate conditioning at c1; no assertion")
        return report
    ex_ge = float(j.p[:, ge].sum(axis=1) @ j.xs) / p_ge
    lift = ex_ge - j.mean_x()
    report.margins["conditional_lift"] = lift
    if lift < c2 - _TOL:
        report.notes.append(
            f"precondition E[X|Y>=c1] >= E[X]+c2 fails (lift {lift:.3g} < {c2}); "
            "no assertion"
        )
        return report
    ey_ge = float(py[ge] @ j.ys[ge]) / p_ge
    ey_le = float(py[le] @ j.ys[le]) / p_le
    rhs = c2 * p_ge * (ey_ge - ey_le)
    report.margins["bound_rhs"] = rhs
    report.asserted_inequalities = {"cov_ge_conditional_bound":
                                    bool(j.cov() >= rhs - _TOL)}
    return report


def _adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    """Classic recursive adaptive Simpson quadrature."""

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, tol, depth):
        mid = 0.5 * (lo + hi)
        fl = f(0.5 * (lo + mid))
        fr = f(0.5 * (mid + hi))
        left = simpson(lo, mid, flo, fl, fmid)
        right = simpson(mid, hi, fmid, fr, fhi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        # Never let the split tolerance sink below roundoff, or the
        # refinement would chase floating-point noise.
        child_tol = max(tol / 2.0, 1e-16 * abs(whole) + 1e-300)
        return (recurse(lo, mid, flo, fl, fmid, left, child_tol, depth - 1)
                + recurse(mid, hi, fmid, fr, fhi, right, child_tol, depth - 1))

    if b <= a:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(a, b, fa, fm, fb)
    scale = max(abs(whole), 1e-30)
    return recurse(a, b, fa, fm, fb, whole, tol * scale, 24)


def _gamma_tail(alpha: float, c: float, s: float) -> float:
    """Closed form for the remainder integral of s' exp(-c s'^alpha) past s."""
    from scipy.special import gamma, gammaincc

    k = 2.0 / alpha
    return (1.0 / alpha) * c ** (-k) * gamma(k) * gammaincc(k, c * s**alpha)


def variance_from_tails(spec: TailSpec, mode: str, mean_cap: float = 1.0) -> float:
    """Certified variance bound implied by stretched-exponential tails.

    ``upper_bound``: Var <= theta^2 [ s0^2 + 4 int_{s0}^inf s e^{-c s^a} ds ],
    capping both tails at total mass 1 below s0.  ``lower_bound``: assuming
    additionally |E[X]| <= mean_cap * theta, returns a positive c' theta^2
    valid whatever the mean's sign (the worse of the shifted and unshifted
    constructions).  The finite part is adaptive Simpson (rel. tol 1e-8);
    the upper mode adds the analytic remainder, the lower mode drops it.
    """
    if spec.alpha <= 0:
        raise ValueError("divergent integral: alpha must be positive")
    c, a, s0 = spec.c, spec.alpha, spec.s0
    s_cut = max(s0 + 1.0, (80.0 / c) ** (1.0 / a))
    if mode == "upper_bound":
        finite = _adaptive_simpson(lambda s: s * math.exp(-c * s**a), s0, s_cut, 1e-8)
        integral = finite + float(_gamma_tail(a, c, s_cut))
        return spec.theta**2 * (s0 * s0 + 4.0 * integral)
    if mode == "lower_bound":
        case_centered = 2.0 * _adaptive_simpson(
            lambda s: s * math.exp(-c * s**a), s0, s_cut, 1e-8)
        lo = max(0.0, s0 - mean_cap)
        case_shifted = 2.0 * _adaptive_simpson(
            lambda s: s * math.exp(-c * (s + mean_cap) ** a), lo, s_cut, 1e-8)
        return spec.theta**2 * min(case_centered, case_shifted)
    raise ValueError(f"unknown mode {mode!r}")


def _boot_se_of_diff(x_ind, y_ind, joint_ind) -> float:
    """Bootstrap s.e. of P(A and B) - P(A)P(B) from indicator arrays."""
    n = len(x_ind)
    gen = RngStream(_BOOT_SEED, n + 1).generator()
    reps = np.empty(_N_BOOT)
    for b in range(_N_BOOT):
        idx = gen.integers(0, n, size=n)
        reps[b] = joint_ind[idx].mean() - x_ind[idx].mean() * y_ind[idx].mean()
    return float(np.std(reps, ddof=1))


def fkg_check(pairs, s1: float, s2: float) -> Report:
    """Empirical positive-association checks on paired samples.

    Tests P(X>s1, Y>s2) >= P(X>s1) P(Y>s2) - 3 s.e., then the two
    conditioning cross-ratio inequalities at interquartile thresholds of
    the first coordinate, all with a bootstrap 3-s.e. slack.  Empty
    conditioning cells are reported as inconclusive rather than failed.
    """
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 100:
        raise ValueError("need at least 100 (x, y) pairs")
    x, y = arr[:, 0], arr[:, 1]
    a_ind = (x > s1).astype(np.float64)
    b_ind = (y > s2).astype(np.float64)
    ab_ind = a_ind * b_ind
    diff = float(ab_ind.mean() - a_ind.mean() * b_ind.mean())
    se = _boot_se_of_diff(a_ind, b_ind, ab_ind)
    report = Report(name="fkg_check", hypotheses_passed=True,
                    margins={"joint_minus_product": diff, "se": se})
    inconclusive = a_ind.mean() in (0.0, 1.0) or b_ind.mean() in (0.0, 1.0)
    if inconclusive:
        report.notes.append("empty tail cell at (s1, s2); product check inconclusive")
    else:
        report.asserted_inequalities["positive_association"] = bool(
            diff >= -3.0 * se)

    # Cross-ratio inequalities, e.g. P(X>v) P(Y>r, X>u) >= P(X>u) P(Y>r, X>v)
    # for u > v, and the mirrored lower-set version.
    v, u = np.quantile(x, [0.25, 0.75])
    r = float(np.median(y))
    yr = (y > r).astype(np.float64)
    checks = (
        ("upper_conditioning", (x > v).astype(np.float64), (x > u).astype(np.float64)),
        ("lower_conditioning", (x <= v).astype(np.float64), (x <= u).astype(np.float64)),
    )
    n = len(x)
    for tag, lo_ind, hi_ind in checks:
        if lo_ind.mean() in (0.0, 1.0) or hi_ind.mean() in (0.0, 1.0):
            report.notes.append(f"{tag}: empty conditioning cell; inconclusive")
            continue
        lhs_joint = yr * hi_ind
        rhs_joint = yr * lo_ind
        d = float(lo_ind.mean() * lhs_joint.mean() - hi_ind.mean() * rhs_joint.mean())
        gen = RngStream(_BOOT_SEED, n + 2).generator()
        reps = np.empty(_N_BOOT)
        for b in range(_N_BOOT):
            idx = gen.integers(0, n, size=n)
            reps[b] = (lo_ind[idx].mean() * lhs_joint[idx].mean()
                       - hi_ind[idx].mean() * rhs_joint[idx].mean())
        se_d = float(np.std(reps, ddof=1))
        report.margins[f"{tag}_margin"] = d
        report.margins[f"{tag}_se"] = se_d
        report.asserted_inequalities[tag] = bool(d >= -3.0 * se_d)
    return report
