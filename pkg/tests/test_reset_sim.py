import dataclasses
import json
import math

import numpy as np
import pytest
from scipy import integrate

from resetctl.describing import CgLpController, base_linear_loop, sensitivity_harmonics
from resetctl.freq_core import LinearControllerParams, eval_plant, linear_controller_system
from resetctl.reset_sim import (DivergenceError, HybridSystem, build_loop, kappa_sweep,
                                nonrobust_gain, simulate, simulate_system, sine_experiment,
                                write_metrics_json)

KMAX = 1.6165
F_C1_CGLP = 269.169


def dt_for(c):
    return 1.0 / (100.0 * c.f_f)


def fore_system(f_r=100.0, gamma=0.4):
    wr = 2 * math.pi * f_r
    return HybridSystem(A=np.array([[-wr]]), B=np.array([wr]), C_out=np.array([1.0]),
                        D_out=0.0, C_reset=np.zeros(1), D_reset=1.0, reset_index=0,
                        gamma=gamma)


class TestBuildLoop:
    def test_state_counts(self, cglp, lin, model):
        assert build_loop(cglp, model, 1.0, lin=lin).n_states == 9
        assert build_loop(lin, model, 1.0).n_states == 7

    def test_frequency_response_matches_base_linear(self, cglp, lin, model):
        f = np.array([10.0, 269.0, 2000.0])
        loop = build_loop(cglp, model, 1.3, lin=lin)
        np.testing.assert_allclose(loop.frequency_response(f),
                                   base_linear_loop(f, 1.3, cglp, lin, model), rtol=1e-9)
        tail = build_loop(cglp, model, 1.3, lin=lin, fore_position="after_notch")
        np.testing.assert_allclose(tail.frequency_response(f), loop.frequency_response(f),
                                   rtol=1e-9)

    def test_linear_variant_matches_open_loop(self, lin, model):
        f = np.array([5.0, 220.0, 747.0, 5000.0])
        C = linear_controller_system(lin, model)
        ref = lin.K_P * C(f) * eval_plant(f, KMAX, model)
        np.testing.assert_allclose(build_loop(lin, model, KMAX).frequency_response(f), ref,
                                   rtol=1e-9)

    def test_validation(self, cglp, model):
        with pytest.raises(TypeError):
            build_loop("pid", model)
        with pytest.raises(ValueError):
            build_loop(cglp, model, 2.0)
        with pytest.raises(ValueError):
            build_loop(cglp, model, fore_position="plant")


class TestSimulate:
    def test_dt_precondition(self, cglp, lin, model):
        loop = build_loop(cglp, model, 1.0, lin=lin)
        with pytest.raises(ValueError):
            simulate(loop, {"kind": "step"}, 0.01, 1e-4)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_reports_time(self, lin, model):
        unstable = dataclasses.replace(lin, K_P=lin.K_P * 40)
        loop = build_loop(unstable, model)
        with pytest.raises(DivergenceError) as exc:
            simulate(loop, {"kind": "step"}, 2.0, 1.0 / (100 * model.f_e))
        assert exc.value.last_time > 0

    def test_unknown_reference(self, lin, model):
        with pytest.raises(ValueError):
            simulate(build_loop(lin, model), {"kind": "ramp"}, 0.01, 1e-5)

    @pytest.mark.parametrize("name", ["cglp", "linear", "nonrobust"])
    @pytest.mark.parametrize("k", [1.0, KMAX])
    def test_zero_steady_state_error(self, name, k, cglp, lin, model):
        ctrl = {"cglp": cglp, "linear": lin,
                "nonrobust": LinearControllerParams(K_P=nonrobust_gain(lin, model, F_C1_CGLP))}[name]
        tr = simulate(build_loop(ctrl, model, k, lin=lin), {"kind": "step"}, 0.05, dt_for(cglp))
        assert abs(tr.error[-1]) < 1e-4

    def test_linear_step_matches_frequency_domain(self, lin, model):
        # y(t) = 2/pi * int_0^inf Re T(jw) sin(wt)/w dw for a unit step
        C = linear_controller_system(lin, model)

        def T(f):
            L = lin.K_P * C(f) * eval_plant(f, 1.0, model)
            return L / (1 + L)

        f = np.concatenate([np.linspace(1e-3, 1.0, 2000)[:-1], np.logspace(0, 5.5, 400000)])
        w = 2 * math.pi * f
        reT = T(f).real
        ts = np.linspace(2e-4, 4e-3, 40)
        y_fd = np.array([2 / math.pi * integrate.trapezoid(reT * np.sin(w * t) / w, w) for t in ts])
        tr = simulate(build_loop(lin, model), {"kind": "step"}, 4e-3, 1e-6)
        y_sim = np.interp(ts, tr.time, tr.output)
        np.testing.assert_allclose(y_sim, y_fd, atol=2e-3)
        over_fd = (y_fd.max() - 1) * 100
        assert tr.metrics["overshoot_pct"] == pytest.approx(over_fd, abs=0.5)

    def test_gamma_one_equals_linear(self, cglp, lin, model):
        c1 = dataclasses.replace(cglp, gamma=1.0)
        ref = {"kind": "sine", "freq_hz": 150.0}
        a = simulate(build_loop(c1, model, 1.0, lin=lin), ref, 0.02, dt_for(c1))
        b = simulate(build_loop(c1, model, 1.0, lin=lin, reset=False), ref, 0.02, dt_for(c1))
        assert len(a.events) > 0 and len(b.events) == 0
        assert np.max(np.abs(a.output - b.output)) < 1e-9

    def test_event_correctness(self, cglp, lin, model):
        loop = build_loop(cglp, model, 1.0, lin=lin)
        tr = simulate(loop, {"kind": "sine", "freq_hz": 100.0}, 0.03, dt_for(cglp))
        c, d = loop.signals["in_fore"]
        v = tr.states @ c + d * tr.reference
        rms = math.sqrt(np.mean(v ** 2))
        i = loop.offsets["fore"]
        assert len(tr.events) >= 5
        for e in tr.events:
            assert abs(e.surface) < 1e-6 * rms
            assert e.x_post == pytest.approx(cglp.gamma * e.x_pre, rel=1e-12, abs=1e-300)
        # the logged flags mark the steps that contained an event
        assert int(tr.reset_flags.sum()) == len(tr.events)
        assert i == loop.reset_index

    def test_isolated_fore_events(self):
        tr = simulate_system(fore_system(), lambda t: np.sin(2 * math.pi * 37.0 * t + 0.3), 0.2, 1e-5)
        times = np.array(tr.reset_events)
        expected = (np.arange(1, 20) * math.pi - 0.3) / (2 * math.pi * 37.0)
        expected = expected[expected < 0.2]
        np.testing.assert_allclose(times, expected, atol=1e-10)

    def test_reset_to_zero(self):
        sys_ = dataclasses.replace(fore_system(), reset_to_zero=True)
        tr = simulate_system(sys_, lambda t: np.sin(2 * math.pi * 37.0 * t + 0.3), 0.1, 1e-5)
        assert all(e.x_post == 0.0 for e in tr.events)

    def test_step_size_convergence(self, cglp, lin, model):
        loop = build_loop(cglp, model, 1.0, lin=lin)
        dt = dt_for(cglp)
        a = simulate(loop, {"kind": "step"}, 0.02, dt).metrics
        b = simulate(loop, {"kind": "step"}, 0.02, dt / 2).metrics
        assert abs(a["overshoot_pct"] - b["overshoot_pct"]) < 0.1
        assert abs(a["iae_um_s"] / b["iae_um_s"] - 1) < 5e-3

    def test_deterministic(self, cglp, lin, model):
        loop = build_loop(cglp, model, KMAX, lin=lin)
        a = simulate(loop, {"kind": "step"}, 0.01, dt_for(cglp))
        b = simulate(loop, {"kind": "step"}, 0.01, dt_for(cglp))
        assert np.array_equal(a.states, b.states)
        assert [e.time for e in a.events] == [e.time for e in b.events]

    def test_trace_csv(self, lin, model, tmp_path):
        tr = simulate(build_loop(lin, model), {"kind": "step"}, 1e-4, 1e-6)
        p = tmp_path / "t.csv"
        tr.to_csv(p)
        rows = p.read_text().splitlines()
        assert rows[0] == "t_s,ref_um,y_um,e_um,u_V,reset_event"
        assert len(rows) == len(tr.time) + 1


class TestSine:
    @pytest.mark.parametrize("ratio", [0.1, 0.5, 0.8])
    def test_first_harmonic_matches_describing_function(self, ratio, cglp, lin, model):
        f = ratio * F_C1_CGLP
        tr = sine_experiment(build_loop(cglp, model, 1.0, lin=lin), f, 1.0, 24)
        h = tr.metrics["tracking_gain"] * np.exp(1j * np.radians(tr.metrics["tracking_phase_deg"]))
        T1 = sensitivity_harmonics(1, f, 1.0, cglp, lin, model)[1].harmonics[1]
        assert abs(h - T1) / abs(T1) < 0.05

    def test_low_frequency_tracking(self, lin, model):
        tr = sine_experiment(build_loop(lin, model), 5.0, 1.0, 20, dt=2e-5)
        assert tr.metrics["tracking_gain_db"] == pytest.approx(0.0, abs=0.1)

    @pytest.mark.parametrize("k", [1.0, KMAX])
    def test_cglp_iae_below_linear(self, k, cglp, lin, model):
        a = sine_experiment(build_loop(cglp, model, k, lin=lin), 80.0, 1.0, 20)
        b = sine_experiment(build_loop(lin, model, k), 80.0, 1.0, 20, dt=dt_for(cglp))
        assert a.metrics["iae_per_period_um_s"] < b.metrics["iae_per_period_um_s"]

    def test_needs_enough_periods(self, lin, model):
        with pytest.raises(ValueError):
            sine_experiment(build_loop(lin, model), 80.0, 1.0, 10)


@pytest.fixture(scope="module")
def rows():
    from resetctl import PlantModel
    model = PlantModel()
    lin = LinearControllerParams(K_P=0.13027613868)
    nr = LinearControllerParams(K_P=nonrobust_gain(lin, model, F_C1_CGLP))
    return kappa_sweep({"cglp": CgLpController(), "linear": lin, "nonrobust": nr},
                       model, 11, duration=0.02, lin=lin)


class TestSweep:
    def by(self, rows, name, key):
        return [r[key] for r in rows if r["controller"] == name]

    def test_rise_time_ordering(self, rows):
        for a, b in zip(self.by(rows, "cglp", "rise_time_s"), self.by(rows, "linear", "rise_time_s")):
            assert a < b

    def test_overshoot_ranges(self, rows):
        cg = self.by(rows, "cglp", "overshoot_pct")
        nr = self.by(rows, "nonrobust", "overshoot_pct")
        assert 7.0 <= min(cg) and max(cg) <= 16.0
        assert max(cg) - min(cg) < max(nr) - min(nr)

    def test_row_matches_standalone_run(self, rows, lin, model):
        tr = simulate(build_loop(lin, model, 1.0), {"kind": "step"}, 0.02, dt_for(CgLpController()))
        row = [r for r in rows if r["controller"] == "linear" and r["kappa"] == 1.0][0]
        for k, v in tr.metrics.items():
            assert row[k] == v

    def test_metrics_json(self, rows, tmp_path):
        p = tmp_path / "m.json"
        write_metrics_json(p, rows)
        data = json.loads(p.read_text())
        assert set(data) == {"cglp", "linear", "nonrobust"}
        assert len(data["cglp"]) == 11

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_is_reported_per_row(self, lin, model):
        bad = dataclasses.replace(lin, K_P=lin.K_P * 40)
        rows = kappa_sweep({"bad": bad, "ok": lin}, model, kappas=[1.0], duration=0.5,
                           dt=1.0 / (100 * model.f_e))
        assert "error" in rows[0] and "error" not in rows[1]
