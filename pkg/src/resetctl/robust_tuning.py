"""Robust loop tuning against a DC-gain uncertainty kappa in [1, kappa_max].

Phase-band extraction, the admissible-uncertainty bound, gain placement at
the band's upper edge, average crossover, and the grid-search tuner for
the CgLp parameters.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .describing import CgLpController, cglp_response, correction_factor
from .freq_core import (TWO_PI, AssumptionWarning, FrequencyResponseSystem,
                        LinearControllerParams, PlantModel, crossover,
                        eval_plant, linear_controller_system, log_grid)

__all__ = [
    "PhaseBand", "RobustTuneResult", "CgLpTuneProblem", "CgLpTuneResult",
    "InfeasibleBandError", "AmbiguousBandError",
    "find_phase_band", "kappa_bound", "tune_linear", "average_crossover",
    "adaptive_simpson", "tune_cglp", "verify_crossover_gain", "kappa_grid",
    "analyze_cglp", "analyze_linear",
]

F_LO, F_HI = 1.0, 1e4
PHASE_SLACK = 0.25


class InfeasibleBandError(ValueError):
    """Open-loop phase never enters the requested margin band."""


class AmbiguousBandError(ValueError):
    def __init__(self, msg, intervals):
        super().__init__(msg)
        self.intervals = intervals


@dataclass
class PhaseBand:
    f_a: float
    f_b: float
    f_B: float
    f_A: float
    phi_m: float
    phi_M: float
    peak_phase: float = math.nan

    @property
    def upper_respected(self):
        """True when the phase stays below -180 + phi_M inside the band."""
        return self.peak_phase < -180.0 + self.phi_M


def kappa_grid(kappa_max: float, points: int = 33) -> np.ndarray:
    if kappa_max == 1.0:
        return np.array([1.0])
    g = np.logspace(0.0, math.log10(kappa_max), points)
    g[0], g[-1] = 1.0, kappa_max
    return g


def _phase_deg(system, f):
    """Unwrapped phase with the low-frequency end placed in (-360, 0]."""
    ph = np.degrees(np.unwrap(np.angle(np.asarray(system(f)))))
    shift = -360.0 * math.floor((ph[0] + 360.0) / 360.0) if not (-360 < ph[0] <= 0) else 0.0
    return ph + shift


def _phase_near(system, f, ref):
    p = math.degrees(np.angle(system(f)))
    return p + 360.0 * round((ref - p) / 360.0)


def find_phase_band(open_loop, phi_m: float, phi_M: float, f_lo: float = F_LO,
                    f_hi: float = F_HI, points_per_decade: int = 200,
                    select: int | str | None = None) -> PhaseBand:
    """Band ``[f_b, f_B]`` where the open-loop phase is at least -180 + phi_m.

    Edges are refined by bisection on the phase crossing.  ``f_a``/``f_A``
    bound the adjacent stretches that lie below the band.  Several disjoint
    intervals raise :class:`AmbiguousBandError` unless ``select`` names one
    (an index, or ``"widest"``).
    """
    if not phi_m < phi_M:
        raise ValueError("need phi_m < phi_M")
    f = log_grid(f_lo, f_hi, points_per_decade)
    ph = _phase_deg(open_loop, f)
    lower = -180.0 + phi_m
    inside = ph >= lower
    if not inside.any():
        raise InfeasibleBandError("phase never reaches -180 + phi_m on the range")
    idx = np.nonzero(inside)[0]
    runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
    runs = [r for r in runs if r[0] > 0 and r[-1] < len(f) - 1]
    if not runs:
        raise InfeasibleBandError("band is not both entered and exited on the range")

    def edge(i0, i1):
        ref = ph[i0]
        g = lambda x: _phase_near(open_loop, x, ref) - lower
        return _bisect(g, f[i0], f[i1])

    intervals = [(edge(r[0] - 1, r[0]), edge(r[-1], r[-1] + 1)) for r in runs]
    if len(runs) > 1:
        if select is None:
            raise AmbiguousBandError(
                f"{len(runs)} disjoint band intervals: {intervals}", intervals)
        k = (max(range(len(runs)), key=lambda i: intervals[i][1] / intervals[i][0])
             if select == "widest" else int(select))
    else:
        k = 0
    run = runs[k]
    f_b, f_B = intervals[k]
    f_a = intervals[k - 1][1] if k > 0 else f[0]
    f_A = intervals[k + 1][0] if k + 1 < len(runs) else f[-1]
    return PhaseBand(f_a, f_b, f_B, f_A, phi_m, phi_M, float(ph[run].max()))


def _bisect(g, a, b, rtol=1e-10):
    ga = g(a)
    for _ in range(200):
        m = math.sqrt(a * b)
        gm = g(m)
        if (gm >= 0) == (ga >= 0):
            a, ga = m, gm
        else:
            b = m
        if b / a - 1 < rtol:
            break
    return math.sqrt(a * b)


def kappa_bound(lin_control, plant_nominal, band: PhaseBand) -> float:
    """Largest tolerable kappa_max: |CP(f_b)| / |CP(f_B)|."""
    num = abs(lin_control(band.f_b) * plant_nominal(band.f_b))
    den = abs(lin_control(band.f_B) * plant_nominal(band.f_B))
    return float(num / den)


def adaptive_simpson(fun, a: float, b: float, rtol: float = 1e-6,
                     max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""
    fa, fb = fun(a), fun(b)
    m = 0.5 * (a + b)
    fm = fun(m)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    tol = rtol * max(abs(whole), 1e-300)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = fun(lm), fun(rm)
        left = (m - a) / 6.0 * (fa + 4 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4 * frm + fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15 * tol:
            return left + right + delta / 15.0
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    return rec(a, b, fa, fm, fb, whole, tol, max_depth)


def average_crossover(f_c_of_kappa, kappa_max: float, normalization: str = "kappa-width",
                      rtol: float = 1e-6) -> float:
    """kappa-average of the crossover frequency.

    ``"crossover-width"`` divides the integral by ``f_c(kappa_max) - f_c(1)``;
    ``"kappa-width"`` divides by ``kappa_max - 1`` (a true mean, in Hz).
    """
    if kappa_max == 1.0:
        raise ZeroDivisionError("kappa_max == 1 leaves no interval to average")
    integral = adaptive_simpson(f_c_of_kappa, 1.0, kappa_max, rtol)
    if normalization == "kappa-width":
        return integral / (kappa_max - 1.0)
    if normalization == "crossover-width":
        width = f_c_of_kappa(kappa_max) - f_c_of_kappa(1.0)
        if width == 0:
            raise ZeroDivisionError("f_c(kappa_max) == f_c(1)")
        return integral / width
    raise ValueError("normalization must be 'crossover-width' or 'kappa-width'")


@dataclass
class RobustTuneResult:
    K_P_star: float
    f_c_nominal: float
    f_c_worst: float
    phi_nominal: float
    phi_worst: float
    f_c_average: float
    f_c_average_fc_width: float
    kappa_bound: float
    feasible: bool
    kappa_max: float
    band: PhaseBand | None = None
    kappas: list = field(default_factory=list)
    f_c: list = field(default_factory=list)
    phi: list = field(default_factory=list)
    robust: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        return d


def _loop_metrics(H, K, kappas, f_lo=F_LO, f_hi=F_HI):
    fcs, phis = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionWarning)
        for k in kappas:
            m = crossover(FrequencyResponseSystem(lambda f, k=k: K * k * H(f)), f_lo, f_hi, k)
            fcs.append(m.f_c)
            phis.append(m.phi)
    return fcs, phis


def _finish(H, K, kappa_max, band, bound, phi_m, phi_M, grid_points, feasible):
    kappas = kappa_grid(kappa_max, grid_points)
    fcs, phis = _loop_metrics(H, K, kappas)
    tol = 1e-6

    def fc_of(k):
        return _loop_metrics(H, K, [k])[0][0]

    if kappa_max > 1:
        avg = average_crossover(fc_of, kappa_max, "kappa-width")
        avg_p = average_crossover(fc_of, kappa_max, "crossover-width")
    else:
        avg = avg_p = fcs[0]
    robust = all(phi_m - tol <= p <= phi_M + tol for p in phis)
    return RobustTuneResult(
        K_P_star=K, f_c_nominal=fcs[0], f_c_worst=fcs[-1], phi_nominal=phis[0],
        phi_worst=phis[-1], f_c_average=avg, f_c_average_fc_width=avg_p,
        kappa_bound=bound, feasible=feasible, kappa_max=kappa_max, band=band,
        kappas=list(map(float, kappas)), f_c=fcs, phi=phis, robust=robust)


def tune_linear(lin: LinearControllerParams, model: PlantModel, phi_m: float = 60.0,
                phi_M: float = 71.0, grid_points: int = 33) -> RobustTuneResult:
    """Maximum-average-bandwidth K_P for the linear loop K_P * C * P.

    ``lin.K_P`` is ignored.  The result is marked infeasible when
    ``model.kappa_max`` exceeds the bound; gains are still reported.
    """
    C = linear_controller_system(lin, model)
    P = FrequencyResponseSystem(lambda f: eval_plant(f, 1.0, model), "P")
    H = C * P
    band = find_phase_band(H, phi_m, phi_M)
    bound = kappa_bound(C, P, band)
    K = 1.0 / (model.kappa_max * abs(H(band.f_B)))
    feasible = model.kappa_max <= bound
    res = _finish(H, K, model.kappa_max, band, bound, phi_m, phi_M, grid_points, feasible)
    if not feasible:
        res.notes.append(f"kappa_max={model.kappa_max} exceeds bound {bound:.6g}")
    if not band.upper_respected:
        res.notes.append("phase exceeds -180 + phi_M inside the band")
    return res


# --------------------------------------------------------------------- CgLp


@dataclass
class CgLpTuneProblem:
    """Search problem for (gamma, f_r, f_f).

    ``constraint_mode`` picks where the phase constraint is checked:
    ``"literal"`` at f_c(1) and beta*f_c(1); ``"solved"`` at f_c(1) and the
    solved worst-case crossover; ``"robust"`` at every crossover on the
    kappa grid (covers both of the above points up to beta).
    """

    beta: float = 376.0 / 220.0
    gamma_m: float = 0.3
    nu: float = 1.0 / 13.0
    f_M: float = 7000.0
    gamma_points: int = 25
    f_r_range: tuple = (50.0, 2000.0)
    f_r_points: int = 40
    f_f_range: tuple = (200.0, 7000.0)
    f_f_points: int = 40
    refine: bool = True
    refine_factor: int = 5
    constraint_mode: str = "robust"
    alpha: float | None = None  # None: alpha tied to gamma
    slack_deg: float = PHASE_SLACK
    kappa_points: int = 33
    robust_samples: int = 18  # f_c(1), f_c(kappa_max) and 16 between

    def __post_init__(self):
        if not -1 <= self.gamma_m <= 1:
            raise ValueError("gamma_m must lie in [-1, 1]")
        if not 0 < self.nu < 1:
            raise ValueError("nu must lie in (0, 1)")
        if not self.f_M > 0:
            raise ValueError("f_M must be positive")
        if not self.beta > 1:
            raise ValueError("beta must exceed 1")
        if self.constraint_mode not in ("literal", "solved", "robust"):
            raise ValueError("unknown constraint_mode")

    def grids(self):
        g = np.linspace(self.gamma_m, 1.0, self.gamma_points) if self.gamma_points > 1 \
            else np.array([self.gamma_m])
        fr = np.logspace(*np.log10(self.f_r_range), self.f_r_points)
        hi = min(self.f_f_range[1], self.f_M)
        ff = np.logspace(np.log10(self.f_f_range[0]), np.log10(hi), self.f_f_points)
        return g, fr, ff


@dataclass
class CandidateEval:
    gamma: float
    f_r: float
    f_f: float
    alpha: float
    feasible: bool
    fc1: float = math.nan
    fcmax: float = math.nan
    K_P: float = math.nan
    phase_at_checks: tuple = ()
    violations: dict = field(default_factory=dict)


@dataclass
class CgLpTuneResult:
    controller: CgLpController | None
    result: RobustTuneResult | None
    candidate: CandidateEval | None
    feasible: bool
    evaluated: int
    feasible_count: int
    boundary_active: dict = field(default_factory=dict)
    violation_stats: dict = field(default_factory=dict)
    trace: list = field(default_factory=list, repr=False)
    runtime_s: float = 0.0
    K_P_placed: float = math.nan

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma", "f_r_hz", "f_f_hz", "feasible", "fc1_hz", "fcmax_hz"])
            for c in self.trace:
                w.writerow([f"{c.gamma:.10g}", f"{c.f_r:.10g}", f"{c.f_f:.10g}",
                            int(c.feasible), f"{c.fc1:.10g}", f"{c.fcmax:.10g}"])


class _FastLoop:
    """K_P-free CgLp open loop with a pure-Python scalar path.

    Arrays go through the vectorised evaluators; scalars use ``cmath``,
    which is an order of magnitude cheaper inside root finders.
    """

    def __init__(self, lin, model, c=None):
        self.model, self.lin, self.c = model, lin, c
        self.C = linear_controller_system(lin, model)
        self.wi, self.wip = TWO_PI * lin.f_i, TWO_PI * lin.f_i_prime
        self.wm, self.we = TWO_PI * model.f_m, TWO_PI * model.f_e
        self.gain0 = model.K_e * model.K_m

    def with_cglp(self, c):
        out = _FastLoop.__new__(_FastLoop)
        out.__dict__.update(self.__dict__)
        out.c = c
        if c is not None:
            out.wr = TWO_PI * c.f_r
            out.wz = c.alpha * out.wr
            out.wf = TWO_PI * c.f_f
        return out

    def linear(self, f):
        if np.ndim(f):
            return self.C(f) * eval_plant(f, 1.0, self.model)
        w = TWO_PI * f
        s = 1j * w
        wm, lin, m = self.wm, self.lin, self.model
        d_m = (s / wm) ** 2 + 2 * m.xi_m / wm * s + 1
        d_n = (s / wm) ** 2 + 2 * lin.xi_N / wm * s + 1
        pi = (1 + self.wi / s) * (1 + self.wip / s)
        return pi / d_n * self.gain0 / (s / self.we + 1)

    def __call__(self, f):
        c = self.c
        if np.ndim(f):
            return cglp_response(1, f, c) * self.linear(f)
        w = TWO_PI * f
        wr = self.wr
        e = math.exp(-math.pi * wr / w)
        th = 2 * w * w * (1 - c.gamma) * (1 + e) / (math.pi * (1 + c.gamma * e) * (w * w + wr * wr))
        r1 = (1 + 1j * th) / (1j * w / wr + 1)
        lead = (1j * w / self.wz + 1) / (1j * w / self.wf + 1)
        return r1 * lead * self.linear(f)


class _Evaluator:
    """Candidate evaluation for the CgLp grid search."""

    def __init__(self, lin, model, phi_m, phi_M, problem):
        self.model, self.problem = model, problem
        self.phi_m, self.phi_M = phi_m, phi_M
        self.base = _FastLoop(lin, model)
        self.C = self.base.C

    def lin0(self, f):
        return self.base.linear(f)

    def __call__(self, gamma, f_r, f_f):
        pb = self.problem
        alpha = pb.alpha if pb.alpha is not None else correction_factor(gamma)
        cand = CandidateEval(float(gamma), float(f_r), float(f_f), float(alpha), False)
        viol = cand.violations
        if gamma < pb.gamma_m or gamma > 1:
            viol["gamma"] = 1.0
        if not f_r > pb.nu * f_f:
            viol["nu"] = pb.nu * f_f - f_r
        if not f_f < pb.f_M:
            viol["f_M"] = f_f - pb.f_M
        if not alpha * f_r < f_f:
            viol["lead_order"] = alpha * f_r - f_f
        if viol:
            return cand
        H = self.base.with_cglp(CgLpController(gamma, alpha, f_r, f_f, 1.0))
        try:
            band = find_phase_band(H, self.phi_m, self.phi_M, select="widest",
                                   points_per_decade=100)
        except (InfeasibleBandError, AmbiguousBandError):
            viol["band"] = 1.0
            return cand
        K = 1.0 / (self.model.kappa_max * abs(H(band.f_B)))
        cand.K_P = K
        try:
            fc1 = _root_log(lambda f: math.log(abs(K * H(f))), F_LO, band.f_B * (1 + 1e-12))
        except ValueError:
            viol["crossover"] = 1.0
            return cand
        cand.fc1, cand.fcmax = fc1, band.f_B
        lo, hi = -180.0 + self.phi_m - pb.slack_deg, -180.0 + self.phi_M + pb.slack_deg
        if pb.constraint_mode == "literal":
            pts = np.array([fc1, pb.beta * fc1])
        elif pb.constraint_mode == "solved":
            pts = np.array([fc1, band.f_B])
        else:
            # |L| is monotone, so the kappa-grid crossovers sweep [fc1, f_B]
            pts = np.logspace(math.log10(fc1), math.log10(band.f_B), pb.robust_samples)
        ph = np.degrees(np.angle(H(pts)))
        ref = -180.0 + self.phi_m
        ph = ph + 360.0 * np.round((ref - ph) / 360.0)
        cand.phase_at_checks = tuple(float(p) for p in ph)
        if ph.min() < lo:
            viol["phi_m"] = float(lo - ph.min())
        if ph.max() > hi:
            viol["phi_M"] = float(ph.max() - hi)
        cand.feasible = not viol
        return cand


def _root_log(g, a, b):
    return math.exp(brentq(lambda u: g(math.exp(u)), math.log(a), math.log(b),
                           xtol=1e-12, rtol=1e-12))


def _better(a: CandidateEval, b: CandidateEval | None) -> bool:
    """Deterministic ordering: objective, then lower f_f, lower f_r, higher gamma."""
    if b is None:
        return True
    if not math.isclose(a.fc1, b.fc1, rel_tol=1e-12):
        return a.fc1 > b.fc1
    return (a.f_f, a.f_r, -a.gamma) < (b.f_f, b.f_r, -b.gamma)


def tune_cglp(problem: CgLpTuneProblem, lin: LinearControllerParams, model: PlantModel,
              phi_m: float = 60.0, phi_M: float = 71.0, keep_trace: bool = False,
              gamma_values=None) -> CgLpTuneResult:
    """Grid search for (gamma, f_r, f_f) maximising the nominal crossover.

    For each candidate K_P places the worst-case crossover at the upper band
    edge; the phase constraint is then checked per ``problem.constraint_mode``.
    The best cell is refined once on a grid ``refine_factor`` times finer
    spanning the neighbouring cells, and K_P is finally retuned to the
    largest value keeping every kappa-grid margin inside ``[phi_m, phi_M]``.
    """
    t0 = time.perf_counter()
    ev = _Evaluator(lin, model, phi_m, phi_M, problem)
    g, fr, ff = problem.grids()
    if gamma_values is not None:
        g = np.asarray(gamma_values, float)
    trace = []
    best = None
    stats = {}
    n_eval = n_feas = 0

    def run(gs, frs, ffs):
        nonlocal best, n_eval, n_feas
        for gi in gs:
            for fri in frs:
                for ffi in ffs:
                    c = ev(gi, fri, ffi)
                    n_eval += 1
                    if keep_trace:
                        trace.append(c)
                    for k in c.violations:
                        stats[k] = stats.get(k, 0) + 1
                    if c.feasible:
                        n_feas += 1
                        if _better(c, best):
                            best = c

    run(g, fr, ff)
    if best is not None and problem.refine:
        m = problem.refine_factor

        def local(grid, v, log=True):
            if len(grid) < 2:
                return np.array([v])
            i = int(np.argmin(np.abs(grid - v)))
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, len(grid) - 1)]
            n = 2 * m + 1
            return np.logspace(np.log10(lo), np.log10(hi), n) if log else np.linspace(lo, hi, n)

        run(local(g, best.gamma, log=False), local(fr, best.f_r), local(ff, best.f_f))

    out = CgLpTuneResult(None, None, best, best is not None, n_eval, n_feas,
                         violation_stats=stats, trace=trace)
    if best is None:
        out.runtime_s = time.perf_counter() - t0
        return out
    c = CgLpController(best.gamma, best.alpha, best.f_r, best.f_f, best.K_P)
    H = ev.base.with_cglp(c)
    K = _retune_gain(H, best.K_P, model.kappa_max, phi_m, phi_M, problem.kappa_points)
    band = find_phase_band(H, phi_m, phi_M, select="widest")
    # the kappa bound of the augmented loop uses the linear part only
    bound = kappa_bound(ev.C, FrequencyResponseSystem(lambda f: eval_plant(f, 1.0, model)), band)
    res = _finish(H, K, model.kappa_max, band, bound, phi_m, phi_M,
                  problem.kappa_points, model.kappa_max <= bound)
    out.controller = CgLpController(best.gamma, best.alpha, best.f_r, best.f_f, K)
    out.result = res
    out.K_P_placed = best.K_P
    gam = problem.gamma_m
    out.boundary_active = {
        "gamma_m": math.isclose(best.gamma, gam, rel_tol=0, abs_tol=1e-12),
        "nu": best.f_r <= problem.nu * best.f_f * 1.05,
        "f_M": best.f_f >= problem.f_M * 0.95,
    }
    out.runtime_s = time.perf_counter() - t0
    return out


def _retune_gain(H, K0, kappa_max, phi_m, phi_M, points, tol=1e-6):
    """Largest K_P near ``K0`` with every kappa-grid margin in [phi_m, phi_M]."""
    kappas = kappa_grid(kappa_max, points)

    def ok(K):
        try:
            _, phis = _loop_metrics(H, K, kappas)
        except ValueError:
            return False
        return all(phi_m - tol <= p <= phi_M + tol for p in phis)

    if not ok(K0):
        return K0
    lo, hi = K0, K0 * 1.5
    if ok(hi):
        return hi
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
        if hi / lo - 1 < 1e-7:
            break
    return lo


@dataclass
class CrossoverGainReport:
    holds: bool
    per_kappa: list
    failing_kappas: list
    average_linear: float
    average_cglp: float
    gain_nominal_pct: float
    gain_worst_pct: float
    gain_average_pct: float
    gain_average_fc_width_pct: float


def verify_crossover_gain(linear_result: RobustTuneResult, cglp_result: RobustTuneResult,
                    strict: bool = True) -> CrossoverGainReport:
    """Check that the augmented loop's crossover exceeds the linear one for every kappa."""
    if not np.allclose(linear_result.kappas, cglp_result.kappas):
        raise ValueError("results must share the kappa grid")
    rows, failing = [], []
    for k, a, b in zip(linear_result.kappas, linear_result.f_c, cglp_result.f_c):
        margin = b - a
        rows.append({"kappa": k, "f_c_linear": a, "f_c_cglp": b, "margin_hz": margin,
                     "gain_pct": 100.0 * margin / a})
        if not (margin > 0 if strict else margin >= 0):
            failing.append(k)
    avg_ok = cglp_result.f_c_average > linear_result.f_c_average
    pct = lambda new, old: 100.0 * (new / old - 1.0)
    return CrossoverGainReport(
        holds=not failing and avg_ok, per_kappa=rows, failing_kappas=failing,
        average_linear=linear_result.f_c_average, average_cglp=cglp_result.f_c_average,
        gain_nominal_pct=pct(cglp_result.f_c_nominal, linear_result.f_c_nominal),
        gain_worst_pct=pct(cglp_result.f_c_worst, linear_result.f_c_worst),
        gain_average_pct=pct(cglp_result.f_c_average, linear_result.f_c_average),
        gain_average_fc_width_pct=pct(cglp_result.f_c_average_fc_width,
                                   linear_result.f_c_average_fc_width))


def analyze_cglp(c: CgLpController, lin: LinearControllerParams, model: PlantModel,
                 phi_m: float = 60.0, phi_M: float = 71.0, grid_points: int = 33) -> RobustTuneResult:
    """Robustness metrics of a given CgLp design (its own K_P, no retuning)."""
    C = linear_controller_system(lin, model)
    P = FrequencyResponseSystem(lambda f: eval_plant(f, 1.0, model))
    H = FrequencyResponseSystem(lambda f: cglp_response(1, f, c) * C(f) * P(f))
    band = find_phase_band(H, phi_m, phi_M, select="widest")
    bound = kappa_bound(C, P, band)
    return _finish(H, c.K_P, model.kappa_max, band, bound, phi_m, phi_M, grid_points,
                   model.kappa_max <= bound)


def analyze_linear(lin: LinearControllerParams, model: PlantModel, phi_m: float = 60.0,
                   phi_M: float = 71.0, grid_points: int = 33) -> RobustTuneResult:
    """Metrics of a linear loop with its own ``lin.K_P`` (e.g. a non-robust gain)."""
    C = linear_controller_system(lin, model)
    P = FrequencyResponseSystem(lambda f: eval_plant(f, 1.0, model))
    H = C * P
    band = find_phase_band(H, phi_m, phi_M)
    bound = kappa_bound(C, P, band)
    return _finish(H, lin.K_P, model.kappa_max, band, bound, phi_m, phi_M, grid_points,
                   model.kappa_max <= bound)
