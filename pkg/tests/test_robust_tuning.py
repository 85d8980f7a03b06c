import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from resetctl.describing import CgLpController, cglp_response
from resetctl.freq_core import (AssumptionWarning, ComplexOrderParams, FrequencyResponseSystem,
                                LinearControllerParams, PlantModel, complex_order_system,
                                crossover, eval_plant, linear_controller_system)
from resetctl.robust_tuning import (AmbiguousBandError, CgLpTuneProblem, InfeasibleBandError,
                                    PhaseBand, adaptive_simpson, analyze_cglp, average_crossover,
                                    find_phase_band, kappa_bound, kappa_grid, tune_cglp,
                                    tune_linear, verify_crossover_gain)

SMALL = dict(gamma_points=3, f_r_points=14, f_f_points=14, refine=False)


def loop_parts(model, lin):
    C = linear_controller_system(lin, model)
    P = FrequencyResponseSystem(lambda f: eval_plant(f, 1.0, model))
    return C, P


def phase_system(phase_deg_of_logf):
    return FrequencyResponseSystem(
        lambda f: np.exp(1j * np.radians(phase_deg_of_logf(np.log10(np.asarray(f, float)))))
        / np.asarray(f, float))


@pytest.fixture(scope="module")
def linear_result():
    return tune_linear(LinearControllerParams(), PlantModel())


class TestPhaseBand:
    def test_linear_band_upper_edge(self, model, lin):
        C, P = loop_parts(model, lin)
        band = find_phase_band(C * P, 60.0, 71.0)
        assert band.f_B == pytest.approx(376.0, rel=0.01)
        assert band.f_a < band.f_b < band.f_B < band.f_A

    def test_double_integrator_never_enters(self):
        sys_ = FrequencyResponseSystem(lambda f: -1.0 / np.asarray(f, float) ** 2)
        with pytest.raises(InfeasibleBandError):
            find_phase_band(sys_, 60.0, 71.0)

    def test_disjoint_intervals(self):
        bumps = lambda u: -150 + 50 * np.exp(-((u - 1) / 0.2) ** 2) + 50 * np.exp(-((u - 3) / 0.3) ** 2)
        sys_ = phase_system(bumps)
        with pytest.raises(AmbiguousBandError) as exc:
            find_phase_band(sys_, 60.0, 71.0)
        assert len(exc.value.intervals) == 2
        wide = find_phase_band(sys_, 60.0, 71.0, select="widest")
        assert wide.f_b > 100
        first = find_phase_band(sys_, 60.0, 71.0, select=0)
        assert first.f_B < 100
        assert first.f_A == pytest.approx(wide.f_b)

    def test_rejects_inverted_band(self, model, lin):
        C, P = loop_parts(model, lin)
        with pytest.raises(ValueError):
            find_phase_band(C * P, 71.0, 60.0)

    @given(st.floats(0.0, 0.95), st.floats(20.0, 2000.0))
    def test_complex_order_widens_band(self, g, fr):
        model, lin = PlantModel(), LinearControllerParams()
        C, P = loop_parts(model, lin)
        base = find_phase_band(C * P, 60.0, 71.0)
        aug = find_phase_band(C * P * complex_order_system(ComplexOrderParams(g, fr)),
                              60.0, 71.0, select="widest")
        assert aug.f_B >= base.f_B * (1 - 1e-9)
        assert aug.f_b <= base.f_b * (1 + 1e-9)
        assert aug.f_a < aug.f_b < aug.f_B < aug.f_A


class TestKappaBound:
    def test_degenerate_band(self, model, lin):
        C, P = loop_parts(model, lin)
        band = PhaseBand(10.0, 300.0, 300.0, 1000.0, 60.0, 71.0)
        assert kappa_bound(C, P, band) == pytest.approx(1.0)

    def test_linear_design_is_feasible(self, model, lin):
        C, P = loop_parts(model, lin)
        assert kappa_bound(C, P, find_phase_band(C * P, 60.0, 71.0)) >= model.kappa_max

    def test_complex_order_raises_bound(self, model, lin):
        C, P = loop_parts(model, lin)
        b0 = kappa_bound(C, P, find_phase_band(C * P, 60.0, 71.0))
        band = find_phase_band(C * P * complex_order_system(ComplexOrderParams(0.3, 324.0)),
                               60.0, 71.0, select="widest")
        assert kappa_bound(C, P, band) > b0


class TestAverage:
    def test_constant(self):
        assert average_crossover(lambda k: 250.0, 1.6) == pytest.approx(250.0)

    def test_linear_midpoint(self):
        assert average_crossover(lambda k: 100.0 * k, 2.0) == pytest.approx(150.0)

    def test_crossover_width_mode(self):
        # integral of 100k over [1, 2] is 150, width f_c(2) - f_c(1) is 100
        assert average_crossover(lambda k: 100.0 * k, 2.0, "crossover-width") == pytest.approx(1.5)

    def test_no_uncertainty(self):
        for mode in ("kappa-width", "crossover-width"):
            with pytest.raises(ZeroDivisionError):
                average_crossover(lambda k: 1.0, 1.0, mode)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            average_crossover(lambda k: k, 2.0, "mean")

    def test_simpson_against_closed_form(self):
        assert adaptive_simpson(math.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-8)

    def test_linear_design_average(self, linear_result):
        assert 220.0 < linear_result.f_c_average < 376.0


class TestTuneLinear:
    def test_reference_design(self, linear_result):
        r = linear_result
        assert r.K_P_star == pytest.approx(0.1303, rel=0.005)
        assert r.f_c_nominal == pytest.approx(220.0, rel=0.01)
        assert r.f_c_worst == pytest.approx(376.0, rel=0.01)
        assert r.phi_nominal == pytest.approx(70.0, abs=0.5)
        assert r.phi_worst == pytest.approx(60.0, abs=0.5)
        assert r.feasible and r.robust

    def test_worst_case_at_band_edge(self, linear_result):
        r = linear_result
        assert r.f_c_worst == pytest.approx(r.band.f_B, rel=1e-6)
        assert r.phi_worst == pytest.approx(60.0, abs=0.5)

    def test_no_uncertainty(self):
        r = tune_linear(LinearControllerParams(), PlantModel(kappa_max=1.0))
        assert r.f_c_nominal == pytest.approx(r.band.f_B, rel=1e-6)
        assert r.f_c_worst == r.f_c_nominal

    def test_infeasible_reports_bound(self, linear_result):
        r = tune_linear(LinearControllerParams(), PlantModel(kappa_max=6.0))
        assert not r.feasible
        assert r.kappa_bound == pytest.approx(linear_result.kappa_bound)
        assert any("bound" in n for n in r.notes)

    def test_kappa_grid(self):
        g = kappa_grid(1.6165, 33)
        assert g[0] == 1.0 and g[-1] == 1.6165 and np.all(np.diff(g) > 0)
        assert list(kappa_grid(1.0)) == [1.0]

    @given(st.floats(400.0, 1500.0), st.floats(0.005, 0.05), st.floats(0.2, 2.0),
           st.floats(600.0, 3000.0), st.floats(0.99, 1.01))
    def test_feasible_iff_within_bound(self, f_m, xi_m, K_m, f_e, scale):
        lin = LinearControllerParams()
        base = PlantModel(K_m=K_m, f_m=f_m, xi_m=xi_m, f_e=f_e)
        try:
            bound = tune_linear(lin, base).kappa_bound
        except InfeasibleBandError:
            assume(False)
        kmax = max(1.0, bound * scale)
        assume(abs(kmax / bound - 1) > 1e-6)
        r = tune_linear(lin, dataclasses.replace(base, kappa_max=kmax))
        assert r.kappa_bound == pytest.approx(bound, rel=1e-9)
        assert r.feasible == (kmax <= bound)


class TestCrossoverGain:
    def test_reference_designs(self, linear_result, lin, model):
        rc = analyze_cglp(CgLpController(), lin, model)
        rep = verify_crossover_gain(linear_result, rc)
        assert rep.holds and not rep.failing_kappas
        assert rep.gain_nominal_pct == pytest.approx(22.3, abs=1.0)
        assert rep.gain_worst_pct == pytest.approx(17.3, abs=1.0)

    def test_self_comparison_flags_equality(self, linear_result):
        rep = verify_crossover_gain(linear_result, linear_result)
        assert not rep.holds
        assert len(rep.failing_kappas) == len(linear_result.kappas)
        assert verify_crossover_gain(linear_result, linear_result, strict=False).failing_kappas == []

    def test_grid_mismatch(self, linear_result):
        other = dataclasses.replace(linear_result, kappas=linear_result.kappas[:-1])
        with pytest.raises(ValueError):
            verify_crossover_gain(linear_result, other)


@pytest.fixture(scope="module")
def lin_star(linear_result):
    return LinearControllerParams(K_P=linear_result.K_P_star)


class TestTuneCgLp:
    def test_small_grid_is_admissible(self, lin_star, model):
        pb = CgLpTuneProblem(**SMALL)
        out = tune_cglp(pb, lin_star, model)
        assert out.feasible
        c, cand = out.controller, out.candidate
        assert c.gamma >= pb.gamma_m
        assert c.f_r > pb.nu * c.f_f * (1 - 1e-12)
        assert c.f_f < pb.f_M
        # re-evaluate robustness of the returned design from scratch
        r = analyze_cglp(c, lin_star, model)
        assert all(60.0 - 1e-6 <= p <= 71.0 + 1e-6 for p in r.phi)
        assert r.f_c_nominal == pytest.approx(out.result.f_c_nominal, rel=1e-6)
        # the placed gain puts the worst-case crossover on the band edge
        H = FrequencyResponseSystem(lambda f: cand.K_P * cglp_response(1, f, dataclasses.replace(
            c, K_P=1.0)) * linear_controller_system(lin_star, model)(f)
            * eval_plant(f, model.kappa_max, model))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AssumptionWarning)
            assert crossover(H, 1.0, 1e4).f_c == pytest.approx(cand.fcmax, rel=1e-6)

    def test_enlarging_grid_never_hurts(self, lin_star, model):
        small = CgLpTuneProblem(gamma_points=2, f_r_points=8, f_f_points=8, refine=False)
        g_s, fr_s, ff_s = small.grids()
        a = tune_cglp(small, lin_star, model)
        # superset: the same points plus midpoints in every direction
        big = CgLpTuneProblem(gamma_points=3, f_r_points=15, f_f_points=15, refine=False)
        g_b, fr_b, ff_b = big.grids()
        assert np.all(np.isin(np.round(fr_s, 9), np.round(fr_b, 9)))
        assert np.all(np.isin(np.round(ff_s, 9), np.round(ff_b, 9)))
        assert np.all(np.isin(np.round(g_s, 12), np.round(g_b, 12)))
        b = tune_cglp(big, lin_star, model)
        assert b.candidate.fc1 >= a.candidate.fc1

    def test_reset_beats_linear_limit(self, lin_star, model):
        reset = tune_cglp(CgLpTuneProblem(**SMALL), lin_star, model)
        linear = tune_cglp(CgLpTuneProblem(**SMALL), lin_star, model, gamma_values=[1.0])
        assert linear.feasible
        assert linear.candidate.fc1 < reset.candidate.fc1

    def test_infeasible_reports_statistics(self, lin_star, model):
        pb = CgLpTuneProblem(gamma_points=2, f_r_points=5, f_f_points=5, refine=False,
                             f_r_range=(1000.0, 2000.0), f_f_range=(200.0, 900.0))
        out = tune_cglp(pb, lin_star, model)
        assert not out.feasible and out.controller is None
        assert out.violation_stats and sum(out.violation_stats.values()) >= out.evaluated

    def test_trace_csv(self, lin_star, model, tmp_path):
        out = tune_cglp(CgLpTuneProblem(gamma_points=1, f_r_points=3, f_f_points=3, refine=False),
                        lin_star, model, keep_trace=True)
        p = tmp_path / "t.csv"
        out.write_trace_csv(p)
        rows = p.read_text().splitlines()
        assert rows[0] == "gamma,f_r_hz,f_f_hz,feasible,fc1_hz,fcmax_hz"
        assert len(rows) == 1 + out.evaluated

    @pytest.mark.parametrize("kw", [{"nu": 1.5}, {"beta": 0.9}, {"constraint_mode": "x"},
                                    {"gamma_m": 2.0}, {"f_M": 0.0}])
    def test_problem_validation(self, kw):
        with pytest.raises(ValueError):
            CgLpTuneProblem(**kw)
