"""Command-line front end.

``resetctl <analyze|tune|hosidf|simulate|validate> --config <path> [flags]``

CSV is the authoritative output; SVG charts are a convenience.  All files
are written atomically (temporary file plus rename).  Exit codes: 0 on
success, 1 on I/O errors, 2 for an infeasible design, 3 when validation
fails and 4 for configuration or argument errors.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np

from .describing import (CgLpController, cglp_response, loop_harmonics, pseudo_sensitivity,
                         sensitivity_harmonics, write_hosidf_csv, write_pseudo_csv)
from .freq_core import (AssumptionWarning, BracketError, FrequencyResponseSystem,
                        LinearControllerParams, PlantModel, bode, crossover, eval_plant,
                        linear_controller_system, notch_system, pi2_system)
from .reset_sim import (DivergenceError, build_loop, nonrobust_gain, simulate,
                        sine_experiment)
from .robust_tuning import (CgLpTuneProblem, InfeasibleBandError, analyze_cglp,
                            tune_cglp, tune_linear, verify_crossover_gain)
from .svgplot import line_chart
from .validation import AcceptanceSetup, jsonable, run_checks

log = logging.getLogger("resetctl")

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2, 3, 4
OUTPUT_ENV = "RESETCTL_OUTPUT_DIR"

_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_RANGE = {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2}


def _section(props):
    return {"type": "object", "properties": props, "additionalProperties": False}


CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "plant": _section({"K_e": _POS, "f_e_hz": _POS, "K_m": _POS, "f_m_hz": _POS,
                           "xi_m": {"type": "number", "exclusiveMinimum": 0,
                                    "exclusiveMaximum": 1},
                           "kappa_max": {"type": "number", "minimum": 1}}),
        "linear": _section({"f_i_hz": _POS, "f_i_prime_hz": _POS, "xi_N": _POS, "K_P": _POS}),
        "phase_band": _section({"phi_m_deg": _NUM, "phi_M_deg": _NUM}),
        "cglp": _section({"gamma": {"type": "number", "minimum": -1, "maximum": 1},
                          "alpha": {"type": "number", "minimum": 1},
                          "f_r_hz": _POS, "f_f_hz": _POS, "K_P": _POS}),
        "tune": _section({"beta": {"type": "number", "exclusiveMinimum": 1},
                          "gamma_m": {"type": "number", "minimum": -1, "maximum": 1},
                          "nu": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                          "f_M_hz": _POS, "gamma_points": _POS_INT,
                          "f_r_range_hz": _RANGE, "f_r_points": _POS_INT,
                          "f_f_range_hz": _RANGE, "f_f_points": _POS_INT,
                          "refine": {"type": "boolean"}, "refine_factor": _POS_INT,
                          "constraint_mode": {"enum": ["literal", "solved", "robust"]},
                          "slack_deg": {"type": "number", "minimum": 0},
                          "kappa_points": {"type": "integer", "minimum": 2}}),
        "simulation": _section({"dt_s": {"anyOf": [_POS, {"type": "null"}]},
                                "step_duration_s": _POS, "amplitude_um": _POS,
                                "kappa_points": {"type": "integer", "minimum": 3},
                                "sine_freq_hz": _POS,
                                "sine_periods": {"type": "integer", "minimum": 20},
                                "nonrobust_f_c_hz": {"anyOf": [_POS, {"type": "null"}]}}),
        "output_dir": {"type": "string", "minLength": 1},
    },
}


class ConfigError(ValueError):
    pass


def default_config() -> dict:
    text = resources.files("resetctl").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class ProjectConfig:
    """Validated configuration with typed views of each section."""

    raw: dict

    @classmethod
    def load(cls, path: str | None) -> "ProjectConfig":
        user = {}
        if path is not None:
            try:
                with open(path) as fh:
                    user = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(user)

    @classmethod
    def from_dict(cls, user: dict) -> "ProjectConfig":
        try:
            jsonschema.validate(user, CONFIG_SCHEMA)
            merged = _merge(default_config(), user)
            jsonschema.validate(merged, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config error at {where}: {exc.message}") from exc
        cfg = cls(merged)
        try:
            cfg.model(), cfg.lin(), cfg.cglp(), cfg.problem()
        except ValueError as exc:
            raise ConfigError(f"config error: {exc}") from exc
        band = merged["phase_band"]
        if not 0 < band["phi_m_deg"] < band["phi_M_deg"] < 180:
            raise ConfigError("config error: need 0 < phi_m_deg < phi_M_deg < 180")
        return cfg

    def model(self) -> PlantModel:
        p = self.raw["plant"]
        return PlantModel(p["K_e"], p["f_e_hz"], p["K_m"], p["f_m_hz"], p["xi_m"],
                          p["kappa_max"])

    def lin(self, K_P: float | None = None) -> LinearControllerParams:
        q = self.raw["linear"]
        return LinearControllerParams(q["f_i_hz"], q["f_i_prime_hz"], q["xi_N"],
                                      q["K_P"] if K_P is None else K_P)

    def cglp(self) -> CgLpController:
        q = self.raw["cglp"]
        return CgLpController(q["gamma"], q["alpha"], q["f_r_hz"], q["f_f_hz"], q["K_P"])

    def problem(self) -> CgLpTuneProblem:
        t = self.raw["tune"]
        return CgLpTuneProblem(
            beta=t["beta"], gamma_m=t["gamma_m"], nu=t["nu"], f_M=t["f_M_hz"],
            gamma_points=t["gamma_points"], f_r_range=tuple(t["f_r_range_hz"]),
            f_r_points=t["f_r_points"], f_f_range=tuple(t["f_f_range_hz"]),
            f_f_points=t["f_f_points"], refine=t["refine"], refine_factor=t["refine_factor"],
            constraint_mode=t["constraint_mode"], slack_deg=t["slack_deg"],
            kappa_points=t["kappa_points"])

    @property
    def phi_band(self):
        b = self.raw["phase_band"]
        return b["phi_m_deg"], b["phi_M_deg"]

    @property
    def sim(self) -> dict:
        return self.raw["simulation"]


# ------------------------------------------------------------------ output


def _atomic(path, write):
    """Run ``write(tmp_path)`` then move the file into place."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    os.close(fd)
    um = os.umask(0)
    os.umask(um)
    try:
        write(tmp)
        os.chmod(tmp, 0o666 & ~um)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text(path, text):
    def w(tmp):
        with open(tmp, "w") as fh:
            fh.write(text)
    _atomic(path, w)


def _write_json(path, obj):
    _write_text(path, json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def _out_dir(args, cfg) -> str:
    d = args.out or os.environ.get(OUTPUT_ENV) or cfg.raw["output_dir"]
    os.makedirs(d, exist_ok=True)
    if not os.access(d, os.W_OK):
        raise PermissionError(f"output directory {d} is not writable")
    return d


def _ktag(k):
    return f"k{k:.4f}"


def _kappas(args, model, default):
    if args.kappa is None:
        ks = default
    else:
        try:
            ks = [float(v) for v in args.kappa.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"invalid --kappa list: {args.kappa}") from exc
        if not ks:
            raise ConfigError("--kappa list is empty")
    for k in ks:
        try:
            model.check_kappa(k)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return [float(k) for k in ks]


def _crossover(H, kappa):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionWarning)
        return crossover(H, 1.0, 1e4, kappa)


# ---------------------------------------------------------------- commands


def cmd_analyze(args, cfg) -> int:
    out = _out_dir(args, cfg)
    model, lin, c = cfg.model(), cfg.lin(), cfg.cglp()
    kappas = _kappas(args, model, [1.0, model.kappa_max])
    lo, hi, ppd = 1.0, 1e4, 100
    C = linear_controller_system(lin, model)
    cg = FrequencyResponseSystem(lambda f: cglp_response(1, f, c), "C_CgLp")
    elements = {"C_PI": pi2_system(lin.f_i, lin.f_i_prime), "C_N": notch_system(model, lin.xi_N),
                "C": C, "CgLp_sidf": cg}
    el_series = []
    for name, sys_ in elements.items():
        g = bode(sys_, lo, hi, ppd)
        _atomic(os.path.join(out, f"bode_{name}.csv"), g.to_csv)
        el_series.append((name, g.frequencies, g.magnitude_db))
    summary = {}
    mag_series, ph_series = [], []
    for k in kappas:
        P = FrequencyResponseSystem(lambda f, k=k: eval_plant(f, k, model), "P")
        loops = {"linear": lin.K_P * C * P, "cglp": c.K_P * cg * C * P}
        g = bode(P, lo, hi, ppd)
        _atomic(os.path.join(out, f"bode_plant_{_ktag(k)}.csv"), g.to_csv)
        row = {}
        for name, L in loops.items():
            g = bode(L, lo, hi, ppd)
            _atomic(os.path.join(out, f"bode_L_{name}_{_ktag(k)}.csv"), g.to_csv)
            mag_series.append((f"{name} k={k:g}", g.frequencies, g.magnitude_db))
            ph_series.append((f"{name} k={k:g}", g.frequencies, g.phase_deg))
            try:
                m = _crossover(L, k)
                row[name] = {"f_c_hz": m.f_c, "phase_margin_deg": m.phi}
            except BracketError as exc:
                row[name] = {"error": str(exc)}
        summary[f"{k:.6g}"] = row
    _write_json(os.path.join(out, "analyze_summary.json"),
                {"kappas": kappas, "crossovers": summary,
                 "K_P_linear": lin.K_P, "K_P_cglp": c.K_P})
    _write_text(os.path.join(out, "analyze_open_loop_mag.svg"),
                line_chart(mag_series, "Open-loop magnitude", "frequency [Hz]",
                           "|L| [dB]", logx=True))
    _write_text(os.path.join(out, "analyze_open_loop_phase.svg"),
                line_chart(ph_series, "Open-loop phase", "frequency [Hz]",
                           "phase [deg]", logx=True))
    _write_text(os.path.join(out, "analyze_elements.svg"),
                line_chart(el_series, "Controller elements", "frequency [Hz]",
                           "magnitude [dB]", logx=True))
    for k, row in summary.items():
        for name, v in row.items():
            if "f_c_hz" in v:
                print(f"kappa={k} {name}: f_c={v['f_c_hz']:.2f} Hz  PM={v['phase_margin_deg']:.2f} deg")
    return EXIT_OK


def _linear_report(r):
    d = r.to_dict()
    d["K_P"] = d.pop("K_P_star")
    return d


def cmd_tune(args, cfg) -> int:
    out = _out_dir(args, cfg)
    model = cfg.model()
    phi_m, phi_M = cfg.phi_band
    try:
        rl = tune_linear(cfg.lin(), model, phi_m, phi_M)
    except InfeasibleBandError as exc:
        _write_json(os.path.join(out, f"tune_{args.mode}.json"),
                    {"feasible": False, "reason": str(exc)})
        log.error("infeasible: %s", exc)
        return EXIT_INFEASIBLE
    if args.mode == "linear":
        rep = _linear_report(rl)
        _write_json(os.path.join(out, "tune_linear.json"), rep)
        if not rl.feasible:
            log.error("infeasible: kappa_max=%g exceeds the bound %.6g",
                      model.kappa_max, rl.kappa_bound)
            return EXIT_INFEASIBLE
        print(f"K_P*={rl.K_P_star:.6g}  f_c={rl.f_c_nominal:.2f}/{rl.f_c_worst:.2f} Hz  "
              f"PM={rl.phi_nominal:.2f}/{rl.phi_worst:.2f} deg  bound={rl.kappa_bound:.4f}")
        return EXIT_OK
    if not rl.feasible:
        _write_json(os.path.join(out, "tune_cglp.json"),
                    {"feasible": False, "linear": _linear_report(rl),
                     "reason": f"kappa_max={model.kappa_max} exceeds bound {rl.kappa_bound:.6g}"})
        log.error("infeasible: linear design violates the kappa bound %.6g", rl.kappa_bound)
        return EXIT_INFEASIBLE
    lin = cfg.lin(rl.K_P_star)
    res = tune_cglp(cfg.problem(), lin, model, phi_m, phi_M, keep_trace=True)
    _atomic(os.path.join(out, "tune_cglp_trace.csv"), res.write_trace_csv)
    rep = {"feasible": res.feasible, "evaluated": res.evaluated,
           "feasible_count": res.feasible_count, "violation_stats": res.violation_stats,
           "linear": _linear_report(rl),
           "constraint_mode": cfg.problem().constraint_mode}
    if not res.feasible:
        _write_json(os.path.join(out, "tune_cglp.json"), rep)
        log.error("infeasible: no grid point satisfies the constraints %s",
                  res.violation_stats)
        return EXIT_INFEASIBLE
    c = res.controller
    gain = verify_crossover_gain(rl, res.result)
    rep.update({
        "controller": {"gamma": c.gamma, "alpha": c.alpha, "f_r_hz": c.f_r,
                       "f_f_hz": c.f_f, "K_P": c.K_P},
        "K_P_placed": res.K_P_placed, "boundary_active": res.boundary_active,
        "result": res.result.to_dict(),
        "crossover_gain": {"holds": gain.holds, "nominal_pct": gain.gain_nominal_pct,
                           "worst_pct": gain.gain_worst_pct,
                           "average_pct": gain.gain_average_pct,
                           "average_fc_width_pct": gain.gain_average_fc_width_pct},
    })
    _write_json(os.path.join(out, "tune_cglp.json"), rep)
    r = res.result
    print(f"gamma={c.gamma:.4g} f_r={c.f_r:.2f} Hz f_f={c.f_f:.1f} Hz K_P={c.K_P:.5g}  "
          f"f_c={r.f_c_nominal:.2f}/{r.f_c_worst:.2f} Hz  "
          f"PM={r.phi_nominal:.2f}/{r.phi_worst:.2f} deg  ({res.runtime_s:.1f} s)")
    return EXIT_OK


def cmd_hosidf(args, cfg) -> int:
    out = _out_dir(args, cfg)
    model, lin, c = cfg.model(), cfg.lin(), cfg.cglp()
    if args.nmax < 1:
        raise ConfigError("--nmax must be >= 1")
    kappas = _kappas(args, model, [1.0, model.kappa_max])
    n = int(math.ceil(30 * math.log10(5000.0 / 10.0))) + 1
    freqs = np.logspace(1.0, math.log10(5000.0), n)
    h_rows, p_rows = [], []
    s_series = []
    for k in kappas:
        s1, sinf, l3 = [], [], []
        for f in freqs:
            L = loop_harmonics(args.nmax, f, k, c, lin, model).harmonics
            S, T = sensitivity_harmonics(args.nmax, f, k, c, lin, model)
            for q, hh in (("L", L), ("S", S.harmonics), ("T", T.harmonics)):
                for i in range(1, args.nmax + 1):
                    h_rows.append((float(f), i, hh[i], k, q))
            ps = pseudo_sensitivity(f, k, c, lin, model, n_truncation=args.nmax)
            p_rows.append((ps, k))
            s1.append(20 * math.log10(ps.S_1))
            sinf.append(20 * math.log10(ps.S_inf))
            if args.nmax >= 3:
                l3.append(20 * math.log10(abs(L[3]) / abs(L[1])))
        s_series += [(f"|S1| k={k:g}", freqs, s1), (f"|Sinf| k={k:g}", freqs, sinf)]
    _atomic(os.path.join(out, "hosidf.csv"), lambda p: write_hosidf_csv(p, h_rows))
    _atomic(os.path.join(out, "pseudo_sensitivity.csv"), lambda p: write_pseudo_csv(p, p_rows))
    _write_text(os.path.join(out, "hosidf_sensitivity.svg"),
                line_chart(s_series, "Sensitivity: first harmonic vs pseudo-sensitivity",
                           "frequency [Hz]", "magnitude [dB]", logx=True))
    gap = max(abs(20 * math.log10(ps.S_inf / ps.S_1)) for ps, _ in p_rows
              if ps.frequency <= model.f_m)
    print(f"max ||S_inf|-|S_1|| below f_m: {gap:.3f} dB (nmax={args.nmax})")
    return EXIT_OK


def _controllers(names, cfg, model):
    c = cfg.cglp()
    lin = cfg.lin()
    out = {}
    for name in names:
        if name == "cglp":
            out[name] = c
        elif name == "linear":
            out[name] = lin
        elif name == "nonrobust":
            fc = cfg.sim["nonrobust_f_c_hz"]
            if fc is None:
                H = FrequencyResponseSystem(lambda f: c.K_P * cglp_response(1, f, c)
                                            * linear_controller_system(lin, model)(f)
                                            * eval_plant(f, 1.0, model))
                fc = _crossover(H, 1.0).f_c
            out[name] = cfg.lin(nonrobust_gain(lin, model, fc))
    return out


def _sim_job(job):
    name, ctrl, lin, model, k, ref, duration, dt, periods = job
    loop = build_loop(ctrl, model, k, lin=lin)
    if dt is None:
        dt = 1.0 / (100.0 * loop.fastest_hz)
    try:
        if ref["kind"] == "sine":
            tr = sine_experiment(loop, ref["freq_hz"], ref["amplitude"], periods, dt)
        else:
            tr = simulate(loop, ref, duration, dt)
    except DivergenceError as exc:
        return name, k, None, {"error": str(exc)}
    metrics = dict(tr.metrics)
    metrics["n_resets"] = len(tr.events)
    return name, k, tr, metrics


def cmd_simulate(args, cfg) -> int:
    out = _out_dir(args, cfg)
    model = cfg.model()
    sim = cfg.sim
    kappas = _kappas(args, model,
                     list(np.linspace(1.0, model.kappa_max, sim["kappa_points"])))
    names = args.controller or ["cglp", "linear", "nonrobust"]
    ctrls = _controllers(names, cfg, model)
    amp = sim["amplitude_um"]
    if args.input == "sine":
        freq = args.freq if args.freq is not None else sim["sine_freq_hz"]
        if not freq > 0:
            raise ConfigError("--freq must be positive")
        ref = {"kind": "sine", "freq_hz": freq, "amplitude": amp}
    else:
        ref = {"kind": "step", "amplitude": amp}
    jobs = [(n, ctrls[n], cfg.lin(), model, k, ref, sim["step_duration_s"], sim["dt_s"],
             sim["sine_periods"]) for n in names for k in kappas]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_sim_job, jobs))
    else:
        results = [_sim_job(j) for j in jobs]
    metrics = {}
    series = []
    for name, k, tr, m in results:
        metrics.setdefault(name, {})[f"{k:.6g}"] = m
        if tr is None:
            log.warning("%s kappa=%g diverged: %s", name, k, m["error"])
            continue
        _atomic(os.path.join(out, f"trace_{name}_{args.input}_{_ktag(k)}.csv"), tr.to_csv)
        series.append((f"{name} k={k:.3g}", tr.time, tr.output))
    _write_json(os.path.join(out, f"metrics_{args.input}.json"),
                {"reference": ref, "kappas": kappas, "metrics": metrics})
    _write_text(os.path.join(out, f"simulate_{args.input}.svg"),
                line_chart(series, f"{args.input} response", "time [s]", "y [um]"))
    key = "overshoot_pct" if args.input == "step" else "iae_per_period_um_s"
    for name, rows in metrics.items():
        vals = [r[key] for r in rows.values() if key in r]
        if vals:
            print(f"{name}: {key} {min(vals):.4g} .. {max(vals):.4g}")
    return EXIT_OK


def _setup(cfg) -> AcceptanceSetup:
    phi_m, phi_M = cfg.phi_band
    return AcceptanceSetup(model=cfg.model(), lin=cfg.lin(), cglp=cfg.cglp(),
                           problem=cfg.problem(), phi_m=phi_m, phi_M=phi_M,
                           step_duration=cfg.sim["step_duration_s"],
                           sweep_points=cfg.sim["kappa_points"], dt=cfg.sim["dt_s"],
                           nonrobust_f_c=cfg.sim["nonrobust_f_c_hz"])


def cmd_validate(args, cfg) -> int:
    from . import validation

    out = _out_dir(args, cfg)
    checks = validation.CHECKS
    if args.checks:
        wanted = {s.strip() for s in args.checks.split(",")}
        checks = [fn for fn in checks if _check_id(fn) in wanted]
        if not checks:
            raise ConfigError(f"no checks match {args.checks}")
    results = run_checks(_setup(cfg), checks, log=print)
    ok = all(r.passed for r in results)
    _write_json(os.path.join(out, "validation.json"),
                {"passed": ok, "checks": [r.to_dict() for r in results]})
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_VALIDATION


def _check_id(fn):
    from . import validation
    return validation.CHECK_IDS[fn.__name__]


# -------------------------------------------------------------------- main


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="resetctl", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON config (defaults used when omitted)")
        sp.add_argument("--out", help=f"output directory (env {OUTPUT_ENV})")

    a = sub.add_parser("analyze", help="Bode data of plant, elements and open loops")
    common(a)
    a.add_argument("--kappa", help="comma-separated kappa values")
    t = sub.add_parser("tune", help="robust gain / CgLp tuning")
    common(t)
    t.add_argument("--mode", choices=["linear", "cglp"], default="linear")
    h = sub.add_parser("hosidf", help="harmonic and pseudo-sensitivity analysis")
    common(h)
    h.add_argument("--nmax", type=int, default=9)
    h.add_argument("--kappa")
    s = sub.add_parser("simulate", help="time-domain closed-loop simulation")
    common(s)
    s.add_argument("--controller", action="append",
                   choices=["cglp", "linear", "nonrobust"])
    s.add_argument("--input", choices=["step", "sine"], default="step")
    s.add_argument("--freq", type=float)
    s.add_argument("--kappa")
    s.add_argument("--jobs", type=int, default=1)
    v = sub.add_parser("validate", help="run the acceptance checks")
    common(v)
    v.add_argument("--checks", help="comma-separated check ids (default: all)")
    return p


COMMANDS = {"analyze": cmd_analyze, "tune": cmd_tune, "hosidf": cmd_hosidf,
            "simulate": cmd_simulate, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = ProjectConfig.load(args.config)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
