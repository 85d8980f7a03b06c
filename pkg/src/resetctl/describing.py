"""Sinusoidal-input describing functions of the FORE / CgLp reset element.

Covers the first-harmonic (SIDF) and higher-order (HOSIDF) responses, the
resulting open-loop and sensitivity harmonic spectra, pseudo-sensitivities,
and a time-domain Fourier oracle used to validate the closed forms.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .freq_core import (TWO_PI, LinearControllerParams, PlantModel,
                        eval_plant, linear_controller_system)

__all__ = [
    "CgLpController", "HarmonicAnalysis", "PseudoSensitivity",
    "ConditioningError", "ConvergenceError", "NearSingularWarning",
    "fore_base_linear", "fore_sidf", "fore_hosidf", "lead_filter",
    "cglp_response", "cglp_base_linear", "correction_factor",
    "fit_correction_factor", "loop_harmonics", "base_linear_loop",
    "sensitivity_harmonics", "pseudo_sensitivity", "fourier_oracle",
    "write_hosidf_csv", "write_pseudo_csv",
]

DENOM_FLOOR = 1e-12


class ConditioningError(ArithmeticError):
    """|1 + L| too small for a meaningful sensitivity."""


class ConvergenceError(RuntimeError):
    """Simulated reset element did not reach a periodic steady state."""


class NearSingularWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class CgLpController:
    """FORE followed by a lead filter, plus the loop proportional gain.

    The lead zero sits at ``alpha * f_r`` and the pole at ``f_f``.
    """

    gamma: float = 0.3
    alpha: float = 1.21
    f_r: float = 324.0
    f_f: float = 4206.0
    K_P: float = 0.1645

    def __post_init__(self):
        if not -1 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [-1, 1]")
        if not self.alpha >= 1:
            raise ValueError("alpha must be >= 1")
        if not 0 < self.f_r < self.f_f:
            raise ValueError("need 0 < f_r < f_f")
        if not self.K_P > 0:
            raise ValueError("K_P must be positive")


def _check_gamma(gamma):
    if not -1 <= gamma <= 1:
        raise ValueError(f"gamma={gamma} outside [-1, 1]")


def _pos_freq(f):
    arr = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("frequency must be finite and positive")
    return arr


def _reset_term(w, wr, gamma):
    """Real factor theta(w) of the reset contribution j*theta."""
    e = np.exp(-math.pi * wr / w)
    den = 1.0 + gamma * e
    if np.any(np.abs(den) < DENOM_FLOOR):
        warnings.warn("1 + gamma*exp(-pi w_r/w) near zero; result floored",
                      NearSingularWarning, stacklevel=3)
        den = np.where(np.abs(den) < DENOM_FLOOR, DENOM_FLOOR, den)
    return 2.0 * w * w * (1.0 - gamma) * (1.0 + e) / (math.pi * den * (w * w + wr * wr))


def fore_base_linear(f, f_r: float):
    out = 1.0 / (1j * np.asarray(f, dtype=float) / f_r + 1.0)
    return complex(out) if np.ndim(f) == 0 else out


def fore_sidf(f, f_r: float, gamma: float):
    """First-harmonic describing function of the FORE with reset factor ``gamma``."""
    _check_gamma(gamma)
    fa = _pos_freq(f)
    w, wr = TWO_PI * fa, TWO_PI * f_r
    out = (1.0 + 1j * _reset_term(w, wr, gamma)) / (1j * w / wr + 1.0)
    return complex(out) if np.ndim(f) == 0 else out


def fore_hosidf(n: int, f, f_r: float, gamma: float):
    """n-th harmonic (n >= 2) of the FORE output; zero for even n."""
    if n < 2:
        raise ValueError("use fore_sidf for n = 1")
    _check_gamma(gamma)
    fa = _pos_freq(f)
    if n % 2 == 0:
        out = np.zeros_like(fa, dtype=complex)
    else:
        w, wr = TWO_PI * fa, TWO_PI * f_r
        out = 1j * _reset_term(w, wr, gamma) / (1j * n * w / wr + 1.0)
    return complex(out) if np.ndim(f) == 0 else out


def fore_harmonic(n, f, f_r, gamma):
    return fore_sidf(f, f_r, gamma) if n == 1 else fore_hosidf(n, f, f_r, gamma)


def lead_filter(f, f_r: float, f_f: float, alpha: float):
    s = 1j * np.asarray(f, dtype=float)
    out = (s / (alpha * f_r) + 1.0) / (s / f_f + 1.0)
    return complex(out) if np.ndim(f) == 0 else out


def cglp_response(n: int, f, c: CgLpController):
    """n-th harmonic CgLp gain; the lead filter sees frequency ``n*f``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    fa = np.asarray(f, dtype=float)
    return fore_harmonic(n, f, c.f_r, c.gamma) * lead_filter(n * fa, c.f_r, c.f_f, c.alpha)


def cglp_base_linear(f, c: CgLpController):
    return fore_base_linear(f, c.f_r) * lead_filter(f, c.f_r, c.f_f, c.alpha)


def correction_factor(gamma: float) -> float:
    """alpha matching the high-frequency SIDF gain of the FORE.

    For w >> w_r the FORE SIDF magnitude exceeds its base-linear magnitude
    by sqrt(1 + theta_inf**2) with theta_inf = 4(1 - gamma)/(pi(1 + gamma));
    placing the lead zero at alpha*w_r with this alpha cancels that excess.
    """
    _check_gamma(gamma)
    if gamma <= -1:
        return math.inf
    th = 4.0 * (1.0 - gamma) / (math.pi * (1.0 + gamma))
    return math.sqrt(1.0 + th * th)


def fit_correction_factor(gamma: float, f_r: float, span: float = 10.0,
                          bounds=(1.0, 2.0), points: int = 201) -> float:
    """Numerical alpha minimising the worst |C_1| deviation from unity gain.

    The lead filter is taken without its pole (``f_f -> inf``) so the fit
    depends on the FORE only; frequencies span ``[f_r/span, f_r*span]``.
    """
    f = np.logspace(math.log10(f_r / span), math.log10(f_r * span), points)
    r1 = np.abs(fore_sidf(f, f_r, gamma))

    def worst(alpha):
        g = r1 * np.abs(1j * f / (alpha * f_r) + 1.0)
        return float(np.max(np.abs(20.0 * np.log10(g))))

    res = minimize_scalar(worst, bounds=bounds, method="bounded",
                          options={"xatol": 1e-6})
    return float(res.x)


@dataclass
class HarmonicAnalysis:
    frequency: float
    harmonics: dict
    quantity: str
    kappa: float = 1.0

    def magnitudes(self):
        return {n: abs(v) for n, v in self.harmonics.items()}


@dataclass
class PseudoSensitivity:
    frequency: float
    S_inf: float
    T_inf: float
    n_truncation: int
    time_samples: int
    S_1: float = field(default=float("nan"))
    T_1: float = field(default=float("nan"))


def _linear_part(f, kappa, c, lin, model):
    """K_P * C * P at frequency f (array ok)."""
    C = linear_controller_system(lin, model)
    return c.K_P * C(f) * eval_plant(f, kappa, model)


def base_linear_loop(f, kappa, c, lin, model):
    return cglp_base_linear(f, c) * _linear_part(f, kappa, c, lin, model)


def loop_harmonics(n_max: int, f: float, kappa: float, c: CgLpController,
                   lin: LinearControllerParams, model: PlantModel) -> HarmonicAnalysis:
    """Open-loop harmonic gains L_n for n = 1..n_max at excitation ``f``.

    ``c.K_P`` is the loop gain; ``lin.K_P`` is ignored.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    model.check_kappa(kappa)
    h = {}
    for n in range(1, n_max + 1):
        if n > 1 and n % 2 == 0:
            h[n] = 0j
        else:
            h[n] = complex(cglp_response(n, f, c) * _linear_part(n * f, kappa, c, lin, model))
    return HarmonicAnalysis(float(f), h, "open-loop", kappa)


def sensitivity_harmonics(n_max, f, kappa, c, lin, model, phase_ref="sidf"):
    """Sensitivity and complementary-sensitivity harmonic spectra.

    ``phase_ref`` selects the FORE response used in the unit phase factor
    of the higher harmonics: ``"sidf"`` (first harmonic) or ``"bl"``
    (base-linear).
    """
    L = loop_harmonics(n_max, f, kappa, c, lin, model)
    d1 = 1.0 + L.harmonics[1]
    if abs(d1) < 1e-9:
        raise ConditioningError("|1 + L_1| below 1e-9")
    S1 = 1.0 / d1
    T1 = L.harmonics[1] / d1
    if phase_ref == "sidf":
        R = fore_sidf(f, c.f_r, c.gamma)
    elif phase_ref == "bl":
        R = fore_base_linear(f, c.f_r)
    else:
        raise ValueError("phase_ref must be 'sidf' or 'bl'")
    ru = R / abs(R)
    su = S1 / abs(S1)
    S = {1: S1}
    T = {1: T1}
    for n in range(2, n_max + 1):
        if n % 2 == 0:
            S[n] = T[n] = 0j
            continue
        dn = 1.0 + base_linear_loop(n * f, kappa, c, lin, model)
        if abs(dn) < 1e-9:
            raise ConditioningError(f"|1 + L_bl| below 1e-9 at harmonic {n}")
        # (S1)^n / |S1|^(n-1) == |S1| * su^n
        S[n] = -(1.0 / dn) * L.harmonics[n] * abs(S1) * su ** n * ru ** (n - 1)
        T[n] = -S[n]
    return (HarmonicAnalysis(float(f), S, "sensitivity", kappa),
            HarmonicAnalysis(float(f), T, "complementary-sensitivity", kappa))


def _peak_of_harmonic_sum(coeffs: dict, samples: int) -> float:
    """max over one period of sum_i |c_i| sin(i*theta + arg c_i)."""
    ns = np.array(sorted(coeffs))
    mags = np.array([abs(coeffs[n]) for n in ns])
    angs = np.array([np.angle(coeffs[n]) for n in ns])

    def signal(theta):
        theta = np.asarray(theta, dtype=float)
        return np.sum(mags[:, None] * np.sin(ns[:, None] * theta[None, :] + angs[:, None]), axis=0)

    theta = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    y = signal(theta)
    k = int(np.argmax(y))
    step = TWO_PI / samples
    res = minimize_scalar(lambda t: -signal(np.atleast_1d(t))[0],
                          bounds=(theta[k] - step, theta[k] + step),
                          method="bounded", options={"xatol": 1e-12})
    return float(max(y[k], -res.fun))


def pseudo_sensitivity(f, kappa, c, lin, model, n_truncation: int = 9,
                       time_samples: int = 512, phase_ref="sidf") -> PseudoSensitivity:
    """Time-domain peak of the truncated harmonic sums of S and T.

    The peak is found on a uniform grid of ``time_samples`` points per
    period and then polished by a bounded scalar search around the best
    grid point.
    """
    if n_truncation < 1:
        raise ValueError("n_truncation must be >= 1")
    if time_samples < 64:
        raise ValueError("time_samples must be >= 64")
    S, T = sensitivity_harmonics(n_truncation, f, kappa, c, lin, model, phase_ref)
    s_inf = _peak_of_harmonic_sum(S.harmonics, time_samples)
    t_inf = _peak_of_harmonic_sum(T.harmonics, time_samples)
    return PseudoSensitivity(float(f), s_inf, t_inf, n_truncation, time_samples,
                             abs(S.harmonics[1]), abs(T.harmonics[1]))


def fourier_oracle(f: float, f_r: float, gamma: float, n_max: int = 5,
                   periods: int = 20, analyzed: int = 10,
                   steps_per_period: int = 4000, drift_tol: float = 1e-3) -> dict:
    """Harmonic gains of a simulated FORE under a unit sinusoid ``sin(2 pi f t)``.

    The element is integrated with the hybrid simulator of
    :mod:`resetctl.reset_sim`; the projection integrals are evaluated per
    step with the trapezoid rule, split at every reset instant so the jump
    in the output is integrated exactly.  Coefficients are normalised so
    that a linear element returns its transfer function at ``n*f``.
    """
    from .reset_sim import HybridSystem, simulate_system

    if periods < 20 or analyzed > periods // 2:
        raise ValueError("need >= 20 periods with at most the last half analyzed")
    wr = TWO_PI * f_r
    sysm = HybridSystem(
        A=np.array([[-wr]]), B=np.array([wr]),
        C_out=np.array([1.0]), D_out=0.0,
        C_reset=np.zeros(1), D_reset=1.0,
        reset_index=0, gamma=gamma)
    T = 1.0 / f
    dt = T / steps_per_period
    w = TWO_PI * f
    # shift the input by a fraction of a step so that no zero crossing lands
    # exactly on a grid point; the projection kernel carries the same shift
    shift = dt / 3.0
    trace = simulate_system(sysm, lambda t: np.sin(w * (t + shift)),
                            periods * T, dt, record_events=True)
    t, y = trace.time, trace.output
    ev = trace.events

    def coeffs_for(p):
        t0 = (periods - p - 1) * T
        t1 = t0 + T
        i0 = int(round(t0 / dt))
        i1 = int(round(t1 / dt))
        out = {}
        seg_t = t[i0:i1 + 1]
        seg_y = y[i0:i1 + 1].copy()
        ev_in = [e for e in ev if seg_t[0] < e.time < seg_t[-1]]
        for n in range(1, n_max + 1):
            kern = np.exp(-1j * n * w * (seg_t + shift))
            g = seg_y * kern
            acc = 0.5 * np.sum((g[1:] + g[:-1]) * np.diff(seg_t))
            for e in ev_in:
                # replace the straddling trapezoid by two pieces around the jump
                k = np.searchsorted(seg_t, e.time) - 1
                ta, tb = seg_t[k], seg_t[k + 1]
                ke = np.exp(-1j * n * w * (e.time + shift))
                acc -= 0.5 * (g[k] + g[k + 1]) * (tb - ta)
                acc += 0.5 * (g[k] + e.y_pre * ke) * (e.time - ta)
                acc += 0.5 * (e.y_post * ke + g[k + 1]) * (tb - e.time)
            # y = sum Im(H_n e^{j n w t}) for input sin(w t)
            out[n] = complex(2.0 / T * acc * 1j)
        return out

    last = coeffs_for(0)
    prev = coeffs_for(1)
    ref = max(abs(last[1]), 1e-300)
    drift = max(abs(last[n] - prev[n]) for n in last) / ref
    if drift > drift_tol:
        raise ConvergenceError(f"period-to-period drift {drift:.2e} > {drift_tol}")
    # average the analyzed periods
    acc = {n: 0j for n in last}
    for p in range(analyzed):
        cp = last if p == 0 else (prev if p == 1 else coeffs_for(p))
        for n in acc:
            acc[n] += cp[n] / analyzed
    return acc


def write_hosidf_csv(path, rows):
    """rows: iterable of (freq_hz, n, complex value, kappa, quantity)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", "n", "mag_db", "phase_deg", "kappa", "quantity"])
        for f, n, v, k, q in rows:
            mag = 20 * math.log10(abs(v)) if v != 0 else float("-inf")
            w.writerow([f"{f:.10g}", n, f"{mag:.10g}",
                        f"{math.degrees(np.angle(v)):.10g}", f"{k:.10g}", q])


def write_pseudo_csv(path, rows):
    """rows: iterable of PseudoSensitivity with a kappa attribute pair (ps, kappa)."""
    db = lambda x: 20 * math.log10(x)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", "S1_db", "Sinf_db", "T1_db", "Tinf_db", "kappa"])
        for ps, k in rows:
            w.writerow([f"{ps.frequency:.10g}", f"{db(ps.S_1):.10g}", f"{db(ps.S_inf):.10g}",
                        f"{db(ps.T_1):.10g}", f"{db(ps.T_inf):.10g}", f"{k:.10g}"])
