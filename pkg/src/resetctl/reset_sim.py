"""Time-domain simulation of the reset control loop.

The loop is a series chain PI^2 -> notch -> FORE -> lead -> plant closed by
unity feedback.  Between resets it is linear, so each fixed RK4 step is a
precomputed affine map of the state and the three reference samples the
stages use.  Zero crossings of the FORE input trigger a reset of the FORE
state to ``gamma`` times its value.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .describing import CgLpController
from .freq_core import TWO_PI, LinearControllerParams, PlantModel

__all__ = [
    "Block", "HybridSystem", "LoopStateSpace", "ResetEvent", "SimTrace",
    "DivergenceError", "build_loop", "simulate", "simulate_system",
    "step_metrics", "sine_experiment", "kappa_sweep", "nonrobust_gain",
]


class DivergenceError(RuntimeError):
    def __init__(self, msg, last_time):
        super().__init__(msg)
        self.last_time = last_time


@dataclass(frozen=True)
class Block:
    """SISO state-space block ``x' = a x + b v, y = c x + d v``."""

    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    freq_hz: float  # characteristic frequency, used for step-size checks


def _blk(name, a, b, c, d, f):
    return Block(name, np.atleast_2d(np.asarray(a, float)), np.asarray(b, float).ravel(),
                 np.asarray(c, float).ravel(), float(d), float(f))


def pi2_block(f_i, f_ip):
    wi, wip = TWO_PI * f_i, TWO_PI * f_ip
    # x1 = int v, x2 = int x1
    return _blk("pi2", [[0, 0], [1, 0]], [1, 0], [wi + wip, wi * wip], 1.0, max(f_i, f_ip))


def notch_block(f_m, xi_m, xi_N):
    wm = TWO_PI * f_m
    return _blk("notch", [[0, 1], [-wm * wm, -2 * xi_N * wm]], [0, 1],
                [0, 2 * (xi_m - xi_N) * wm], 1.0, f_m)


def fore_block(f_r):
    wr = TWO_PI * f_r
    return _blk("fore", [[-wr]], [wr], [1.0], 0.0, f_r)


def lead_block(f_r, f_f, alpha):
    wz, wp = alpha * TWO_PI * f_r, TWO_PI * f_f
    k = wp / wz
    return _blk("lead", [[-wp]], [1.0], [k * (wz - wp)], k, f_f)


def electrical_block(K_e, f_e):
    we = TWO_PI * f_e
    return _blk("plant_e", [[-we]], [we], [K_e], 0.0, f_e)


def mechanical_block(K_m, f_m, xi_m, kappa):
    wm = TWO_PI * f_m
    return _blk("plant_m", [[0, 1], [-wm * wm, -2 * xi_m * wm]], [0, wm * wm],
                [kappa * K_m, 0], 0.0, f_m)


def _gain_block(k):
    return Block("gain", np.zeros((0, 0)), np.zeros(0), np.zeros(0), float(k), 0.0)


@dataclass
class HybridSystem:
    """Closed-loop linear dynamics with one resettable state.

    ``x' = A x + B r``; the reset surface is ``C_reset x + D_reset r``.
    Extra named outputs are ``(c, d)`` pairs in ``signals``.
    """

    A: np.ndarray
    B: np.ndarray
    C_out: np.ndarray
    D_out: float
    C_reset: np.ndarray
    D_reset: float
    reset_index: int | None
    gamma: float = 1.0
    reset_to_zero: bool = False
    signals: dict = field(default_factory=dict)
    fastest_hz: float = 0.0

    @property
    def n_states(self):
        return self.A.shape[0]


@dataclass
class LoopStateSpace(HybridSystem):
    blocks: tuple = ()
    offsets: dict = field(default_factory=dict)
    kappa: float = 1.0
    label: str = ""

    def frequency_response(self, f):
        """Closed-loop-free forward path K_P*C*...*P evaluated from the blocks."""
        f = np.atleast_1d(np.asarray(f, float))
        out = np.ones_like(f, dtype=complex)
        for b in self.blocks:
            n = b.a.shape[0]
            if n == 0:
                out *= b.d
                continue
            for i, fi in enumerate(f):
                s = 1j * TWO_PI * fi
                out[i] *= b.c @ np.linalg.solve(s * np.eye(n) - b.a, b.b) + b.d
        return out


def _close_loop(blocks, reset_block="fore"):
    """Cascade ``blocks`` (error -> position) and close with unity feedback."""
    n = sum(b.a.shape[0] for b in blocks)
    A = np.zeros((n, n))
    Bf = np.zeros(n)
    # input of the current block as (c, d) with respect to (x, e)
    cin, din = np.zeros(n), 1.0
    offsets, inputs = {}, {}
    off = 0
    for b in blocks:
        k = b.a.shape[0]
        sl = slice(off, off + k)
        offsets[b.name] = off
        inputs[b.name] = (cin.copy(), din)
        if k:
            A[sl, sl] += b.a
            A[sl, :] += np.outer(b.b, cin)
            Bf[sl] += b.b * din
        cout = cin * b.d
        cout[sl] += b.c
        cin, din = cout, din * b.d
        off += k
    Cf = cin
    if abs(din) > 0:
        raise ValueError("forward path must be strictly proper")
    # e = r - Cf x
    Acl = A - np.outer(Bf, Cf)
    signals = {}
    for name, (c, d) in inputs.items():
        signals[f"in_{name}"] = (c - d * Cf, d)
    signals["y"] = (Cf.copy(), 0.0)
    signals["e"] = (-Cf.copy(), 1.0)
    return Acl, Bf, Cf, offsets, signals


def build_loop(c, model: PlantModel, kappa: float = 1.0,
               lin: LinearControllerParams | None = None,
               reset: bool = True, reset_to_zero: bool = False,
               fore_position: str = "error") -> LoopStateSpace:
    """Closed-loop state space for a CgLp or purely linear controller.

    Parameters
    ----------
    c : CgLpController or LinearControllerParams
        With a ``CgLpController`` the FORE and lead filter are inserted (see
        ``fore_position``) and ``lin`` supplies the PI^2/notch corners; with a
        ``LinearControllerParams`` those blocks are omitted and its ``K_P``
        is the loop gain.
    reset : bool
        ``False`` disables reset events entirely (base-linear loop).
    fore_position : {"error", "after_notch"}
        ``"error"`` puts FORE and lead directly after ``K_P`` so the reset
        surface is the (scaled) tracking error; ``"after_notch"`` puts them
        after the PI^2 and notch.  The frequency response is identical.
    """
    kappa = model.check_kappa(kappa)
    if isinstance(c, CgLpController):
        if lin is None:
            lin = LinearControllerParams()
        K_P = c.K_P
    elif isinstance(c, LinearControllerParams):
        lin, K_P = c, c.K_P
    else:
        raise TypeError("controller must be CgLpController or LinearControllerParams")
    linear = [pi2_block(lin.f_i, lin.f_i_prime),
              notch_block(model.f_m, model.xi_m, lin.xi_N)]
    if isinstance(c, CgLpController):
        cglp = [fore_block(c.f_r), lead_block(c.f_r, c.f_f, c.alpha)]
        if fore_position == "error":
            linear = cglp + linear
        elif fore_position == "after_notch":
            linear = linear + cglp
        else:
            raise ValueError("fore_position must be 'error' or 'after_notch'")
    blocks = [_gain_block(K_P)] + linear
    blocks += [electrical_block(model.K_e, model.f_e),
               mechanical_block(model.K_m, model.f_m, model.xi_m, kappa)]
    A, B, Cf, offsets, signals = _close_loop(blocks)
    signals["u"] = signals["in_plant_e"]
    has_fore = "fore" in offsets
    if has_fore:
        c_r, d_r = signals["in_fore"]
    else:
        c_r, d_r = np.zeros(A.shape[0]), 0.0
    return LoopStateSpace(
        A=A, B=B, C_out=Cf, D_out=0.0, C_reset=c_r, D_reset=d_r,
        reset_index=offsets["fore"] if (has_fore and reset) else None,
        gamma=c.gamma if has_fore else 1.0, reset_to_zero=reset_to_zero,
        signals=signals, fastest_hz=max(b.freq_hz for b in blocks),
        blocks=tuple(blocks), offsets=offsets, kappa=kappa,
        label="cglp" if has_fore else "linear")


def _rk4_maps(A, B, h):
    """Affine RK4 step: x+ = Phi x + g0 r(t) + gh r(t+h/2) + g1 r(t+h)."""
    n = A.shape[0]
    I = np.eye(n)
    hA = h * A
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    Phi = I + hA + hA2 / 2 + hA3 / 6 + hA3 @ hA / 24
    AB = A @ B
    A2B = A @ AB
    A3B = A @ A2B
    g0 = h / 6 * (B + h * AB + h * h / 2 * A2B + h ** 3 / 4 * A3B)
    gh = h / 6 * (4 * B + 2 * h * AB + h * h / 2 * A2B)
    g1 = h / 6 * B
    return Phi, g0, gh, g1


@dataclass
class ResetEvent:
    time: float
    x_pre: float
    x_post: float
    y_pre: float
    y_post: float
    surface: float  # FORE input evaluated at the located time


@dataclass
class SimTrace:
    time: np.ndarray
    reference: np.ndarray
    output: np.ndarray
    error: np.ndarray
    control: np.ndarray
    states: np.ndarray = field(repr=False, default=None)
    events: list = field(default_factory=list)
    reset_flags: np.ndarray = None
    metrics: dict = field(default_factory=dict)

    @property
    def reset_events(self):
        return [e.time for e in self.events]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "ref_um", "y_um", "e_um", "u_V", "reset_event"])
            flags = self.reset_flags if self.reset_flags is not None else np.zeros(len(self.time), int)
            for row in zip(self.time, self.reference, self.output, self.error,
                           self.control, flags):
                w.writerow([f"{v:.12g}" for v in row[:-1]] + [int(row[-1])])


def _ref_fn(reference):
    if callable(reference):
        return reference
    kind = reference.get("kind", "step")
    amp = float(reference.get("amplitude", 1.0))
    if kind == "step":
        return lambda t: amp * np.ones_like(np.asarray(t, float))
    if kind == "sine":
        w = TWO_PI * float(reference["freq_hz"])
        return lambda t: amp * np.sin(w * np.asarray(t, float))
    raise ValueError(f"unknown reference kind {kind!r}")


def simulate_system(system: HybridSystem, reference, duration: float, dt: float,
                    record_events: bool = True, refine_iters: int = 3,
                    check_dt: bool = True) -> SimTrace:
    """Fixed-step RK4 with zero-crossing resets.

    A sign change of the reset surface over a step is located by linear
    interpolation, polished with ``refine_iters`` secant iterations on
    partial steps, the state is advanced to the event, reset, and the rest
    of the step is completed.  Events closer than ``2*dt`` to the previous
    one are ignored.
    """
    if dt <= 0 or duration <= 0:
        raise ValueError("dt and duration must be positive")
    if check_dt and system.fastest_hz > 0 and dt > 1.0 / (50.0 * system.fastest_hz):
        raise ValueError(
            f"dt={dt:g} s too large; need <= 1/(50*{system.fastest_hz:g} Hz)")
    rfun = _ref_fn(reference)
    n_steps = int(round(duration / dt))
    t = np.arange(n_steps + 1) * dt
    r = np.asarray(rfun(t), float)
    rh = np.asarray(rfun(t[:-1] + dt / 2), float)
    A, B = system.A, system.B
    Phi, g0, gh, g1 = _rk4_maps(A, B, dt)
    n = A.shape[0]
    X = np.empty((n_steps + 1, n))
    x = np.zeros(n)
    X[0] = x
    cr, dr = system.C_reset, system.D_reset
    ri = system.reset_index
    resetting = ri is not None
    gamma = 0.0 if system.reset_to_zero else system.gamma
    events = []
    flags = np.zeros(n_steps + 1, dtype=np.int8)
    last_event = -np.inf
    e_prev = cr @ x + dr * r[0]
    # partial-step maps are cached by step length
    cache = {}

    def partial(x0, t0, h):
        key = round(h / dt, 15)
        if key not in cache:
            cache[key] = _rk4_maps(A, B, h)
        P, a0, ah, a1 = cache[key]
        return P @ x0 + a0 * rfun(t0) + ah * rfun(t0 + h / 2) + a1 * rfun(t0 + h)

    for k in range(n_steps):
        xn = Phi @ x + g0 * r[k] + gh * rh[k] + g1 * r[k + 1]
        if resetting:
            e_next = cr @ xn + dr * r[k + 1]
            if (e_prev > 0) != (e_next > 0) and (e_prev != 0 or e_next != 0):
                t0 = t[k]
                tau = dt * e_prev / (e_prev - e_next) if e_prev != e_next else 0.0
                tau = min(max(tau, 0.0), dt)
                if t0 + tau - last_event > 2 * dt:
                    # secant polish on the true surface value
                    ta, ea, tb, eb = 0.0, e_prev, dt, e_next
                    xe = partial(x, t0, tau) if tau > 0 else x.copy()
                    for _ in range(refine_iters):
                        ee = cr @ xe + dr * rfun(t0 + tau)
                        if ee == 0 or tau in (0.0, dt):
                            break
                        if (ee > 0) == (ea > 0):
                            ta, ea = tau, ee
                        else:
                            tb, eb = tau, ee
                        tau_new = ta + (tb - ta) * ea / (ea - eb)
                        if abs(tau_new - tau) < 1e-15 * dt:
                            break
                        tau = tau_new
                        xe = partial(x, t0, tau)
                    ee = cr @ xe + dr * rfun(t0 + tau)
                    x_pre = xe[ri]
                    y_pre = system.C_out @ xe + system.D_out * rfun(t0 + tau)
                    xe = xe.copy()
                    xe[ri] = gamma * x_pre
                    y_post = system.C_out @ xe + system.D_out * rfun(t0 + tau)
                    if record_events:
                        events.append(ResetEvent(t0 + tau, x_pre, xe[ri], y_pre, y_post, ee))
                    last_event = t0 + tau
                    rem = dt - tau
                    xn = partial(xe, t0 + tau, rem) if rem > 0 else xe
                    flags[k + 1] = 1
                    e_next = cr @ xn + dr * r[k + 1]
            e_prev = e_next
        x = xn
        X[k + 1] = x
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite state at t={t[k + 1]:g} s", t[k])
    y = X @ system.C_out + system.D_out * r
    sig = system.signals
    err = X @ sig["e"][0] + sig["e"][1] * r if "e" in sig else r - y
    u = X @ sig["u"][0] + sig["u"][1] * r if "u" in sig else np.zeros_like(y)
    return SimTrace(t, r, y, err, u, X, events, flags)


def simulate(loop: LoopStateSpace, reference, duration: float, dt: float,
             **kw) -> SimTrace:
    """Simulate ``loop`` and attach step metrics for step references."""
    if loop.fastest_hz and dt > 1.0 / (50.0 * loop.fastest_hz):
        raise ValueError(
            f"dt={dt:g} s too large; need <= 1/(50*{loop.fastest_hz:g} Hz)")
    tr = simulate_system(loop, reference, duration, dt, **kw)
    if not callable(reference) and reference.get("kind", "step") == "step":
        tr.metrics = step_metrics(tr.time, tr.output, float(reference.get("amplitude", 1.0)))
    return tr


def step_metrics(t, y, final: float) -> dict:
    """Overshoot (%), 10-90 % rise time, 2 % settling time and IAE."""
    t = np.asarray(t)
    y = np.asarray(y)
    e = final - y
    over = max(0.0, (y.max() - final) / abs(final) * 100.0)

    def first_cross(level):
        i = int(np.argmax(y >= level))
        if y[i] < level:
            return math.nan
        if i == 0:
            return t[0]
        return t[i - 1] + (level - y[i - 1]) / (y[i] - y[i - 1]) * (t[i] - t[i - 1])

    rise = first_cross(0.9 * final) - first_cross(0.1 * final)
    outside = np.nonzero(np.abs(e) > 0.02 * abs(final))[0]
    settle = t[outside[-1] + 1] if len(outside) and outside[-1] + 1 < len(t) else (
        math.nan if len(outside) else t[0])
    iae = float(np.trapezoid(np.abs(e), t))
    return {"overshoot_pct": float(over), "rise_time_s": float(rise),
            "settling_time_s": float(settle), "iae_um_s": iae,
            "final_error_um": float(e[-1])}


def sine_experiment(loop: LoopStateSpace, f: float, amplitude: float = 1.0,
                    periods: int = 40, dt: float | None = None) -> SimTrace:
    """Sinusoid tracking; metrics from the second half of the run.

    Adds IAE per period and the first-harmonic tracking gain/phase of the
    output relative to the reference.
    """
    if periods < 20:
        raise ValueError("periods must be >= 20")
    if dt is None:
        dt = 1.0 / (100.0 * loop.fastest_hz)
    T = 1.0 / f
    # whole number of steps per period keeps the Fourier window exact
    spp = int(math.ceil(T / dt))
    dt = T / spp
    tr = simulate(loop, {"kind": "sine", "freq_hz": f, "amplitude": amplitude},
                  periods * T, dt)
    half = periods // 2
    i0 = (periods - half) * spp
    ts, ys, es = tr.time[i0:], tr.output[i0:], tr.error[i0:]
    w = TWO_PI * f
    kern = np.exp(-1j * w * ts)
    c1 = 2j / (half * T) * np.trapezoid(ys * kern, ts)
    h1 = c1 / amplitude
    iae = float(np.trapezoid(np.abs(es), ts)) / half
    tr.metrics = {"iae_per_period_um_s": iae,
                  "tracking_gain": float(abs(h1)),
                  "tracking_gain_db": float(20 * math.log10(abs(h1))),
                  "tracking_phase_deg": float(math.degrees(np.angle(h1))),
                  "max_abs_error_um": float(np.max(np.abs(es)))}
    return tr


def nonrobust_gain(lin: LinearControllerParams, model: PlantModel, f_c_target: float) -> float:
    """K_P placing the nominal linear crossover at ``f_c_target``."""
    from .freq_core import eval_plant, linear_controller_system
    C = linear_controller_system(lin, model)
    return 1.0 / abs(C(f_c_target) * eval_plant(f_c_target, 1.0, model))


def kappa_sweep(controllers: dict, model: PlantModel, kappa_points: int = 11,
                reference=None, duration: float = 0.05, dt: float | None = None,
                lin: LinearControllerParams | None = None, sine_freq: float | None = None,
                periods: int = 40, kappas=None) -> list:
    """Metrics rows for every (controller, kappa) pair.

    ``controllers`` maps a name to a ``CgLpController`` or
    ``LinearControllerParams``.  Each run is independent; a divergence is
    reported in its row without stopping the sweep.
    """
    if kappas is None:
        if kappa_points < 3:
            raise ValueError("kappa_points must be >= 3")
        kappas = np.linspace(1.0, model.kappa_max, kappa_points)
    if dt is None:
        fast = max(c.f_f for c in controllers.values() if isinstance(c, CgLpController)) \
            if any(isinstance(c, CgLpController) for c in controllers.values()) else model.f_e
        dt = 1.0 / (100.0 * fast)
    reference = reference or {"kind": "step", "amplitude": 1.0}
    rows = []
    for name, c in controllers.items():
        for k in kappas:
            loop = build_loop(c, model, float(k), lin=lin)
            row = {"controller": name, "kappa": float(k)}
            try:
                if sine_freq is None:
                    tr = simulate(loop, reference, duration, dt)
                else:
                    tr = sine_experiment(loop, sine_freq, reference.get("amplitude", 1.0),
                                         periods, dt)
                row.update(tr.metrics)
                row["n_resets"] = len(tr.events)
            except DivergenceError as exc:
                row["error"] = str(exc)
            rows.append(row)
    return rows


def write_metrics_json(path, rows):
    out = {}
    for row in rows:
        out.setdefault(row["controller"], {})[f"{row['kappa']:.6g}"] = {
            k: v for k, v in row.items() if k not in ("controller", "kappa")}
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
