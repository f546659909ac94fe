import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spatial_pareto import ascent
from spatial_pareto.ascent import (AscentConfig, FrontierPoint, Problem, Scalarized,
                                   ascent_direction, directional_derivative, golden_section_max,
                                   line_search, mark_dominated, phi_to_theta,
                                   scalarized_objective, solve_model_I, trace_pareto_frontier)
from spatial_pareto.model import CriterionPair, Field, InitialCapital, ModelSpec, UtilitySpec, \
    make_grids
from spatial_pareto.oracle import ControlClass, certify_solver_point, enumerate_criteria


@pytest.fixture(scope="module")
def start(baseline, coarse):
    prob = Problem(baseline, coarse)
    return prob, Field(coarse, prob.initial_capital(0.9), "capital")


def smooth_direction(g, rng):
    """Random smooth perturbation with h(., 0) = 0."""
    a = rng.normal(size=3)
    b = rng.normal(size=3)
    x, t = g.x[None, :], g.t[:, None]
    h = sum(a[k] * np.cos(k * np.pi * x) for k in range(3)) * (t * (1 + b[0] * t))
    return 0.05 * h


class TestPhi:
    def test_values(self):
        assert phi_to_theta(0.5) == 1.0
        assert phi_to_theta(1 / 11) == pytest.approx(0.1, rel=1e-14)
        assert 0 < phi_to_theta(1e-9) < 2e-9

    @pytest.mark.parametrize("phi", [0.0, 1.0, -0.2, 1.5])
    def test_domain(self, phi):
        with pytest.raises(ValueError):
            phi_to_theta(phi)

    @given(st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
    def test_increasing(self, a, b):
        if a < b:
            assert phi_to_theta(a) < phi_to_theta(b)


class TestObjective:
    def test_theta_zero_is_utility(self, baseline, start):
        prob, K = start
        assert scalarized_objective(K, 0.0, baseline) == prob.criteria(K.values).j1

    def test_theta_linearity(self, baseline, start):
        prob, K = start
        j2 = prob.criteria(K.values).j2
        diff = scalarized_objective(K, 0.1, baseline) - scalarized_objective(K, 0.0, baseline)
        assert diff == pytest.approx(0.1 * j2, rel=1e-13)

    @given(st.floats(0, 5), st.floats(0, 5))
    def test_affine_in_theta(self, a, b):
        spec = ModelSpec()
        g = make_grids(spec, 11, 10)
        prob = Problem(spec, g)
        K = Field(g, prob.initial_capital(0.5), "capital")
        j2 = prob.criteria(K.values).j2
        ja, jb = (scalarized_objective(K, th, spec) for th in (a, b))
        assert ja - jb == pytest.approx((a - b) * j2, abs=1e-12)

    def test_clip_report(self, baseline, coarse):
        K = np.tile(Problem(baseline, coarse).k0, (coarse.nt + 1, 1))
        K[1:] *= 1.5  # sudden jump forces negative recovered consumption
        report = {}
        scalarized_objective(Field(coarse, K, "capital"), 0.0, baseline, report)
        assert report["clipped_nodes"] > 0 and report["clip_magnitude"] > 0


class TestDirectionalDerivative:
    def test_zero_direction(self, baseline, start):
        _, K = start
        assert directional_derivative(K, np.zeros(K.grids.shape), 0.3, baseline) == 0.0

    def test_linearity(self, baseline, start):
        _, K = start
        h = smooth_direction(K.grids, np.random.default_rng(1))
        d1 = directional_derivative(K, h, 0.1, baseline)
        assert directional_derivative(K, -2.5 * h, 0.1, baseline) == pytest.approx(-2.5 * d1,
                                                                                   rel=1e-10)

    @pytest.mark.parametrize("seed", range(3))
    def test_forward_difference(self, baseline, start, seed):
        _, K = start
        h = smooth_direction(K.grids, np.random.default_rng(seed))
        d = directional_derivative(K, h, 0.1, baseline)
        step = 1e-5
        fd = (scalarized_objective(Field(K.grids, K.values + step * h, "capital"), 0.1, baseline)
              - scalarized_objective(K, 0.1, baseline)) / step
        assert abs(fd - d) <= 1e-3 * abs(d)


class TestDirection:
    def test_initial_condition_and_residual(self, baseline, start):
        prob, K = start
        h = ascent_direction(K, 0.0, baseline).values
        assert np.all(h[0] == 0.0)
        g = K.grids
        C = np.maximum(prob.recover(K.values), 0.0)
        rhs = np.exp(baseline.rho * g.t)[:, None] / baseline.utility.marginal(C)
        resid = prob.tangent(K.values, h) - rhs
        assert np.max(np.abs(resid[1:])) < 1e-10 * np.max(np.abs(rhs))

    @pytest.mark.parametrize("theta", [0.0, 0.1])
    def test_derivative_along_direction(self, baseline, start, theta):
        # along its own direction the first variation telescopes to T * |Omega|
        _, K = start
        h = ascent_direction(K, theta, baseline)
        d = directional_derivative(K, h, theta, baseline)
        assert d == pytest.approx(baseline.T * baseline.length, rel=0.05)

    def test_large_theta_reports_failure(self, baseline, start):
        _, K = start
        with pytest.raises(ascent.DirectionError):
            ascent_direction(K, 5.0, baseline)


class TestLineSearch:
    def test_stall_when_decreasing(self, baseline, start):
        _, K = start
        h = Field(K.grids, np.zeros(K.grids.shape), "direction")
        res = line_search(K, h, 0.0, baseline, profile=lambda d: -d)
        assert res.delta == 0.0 and res.stalled

    def test_synthetic_concave_profile(self, baseline, start):
        _, K = start
        h = Field(K.grids, np.zeros(K.grids.shape), "direction")
        res = line_search(K, h, 0.0, baseline, AscentConfig(delta_max=1.0),
                          profile=lambda d: -(d - 0.3) ** 2)
        assert res.delta == pytest.approx(0.3, abs=1e-6) and not res.stalled

    def test_grid_audit(self, baseline, start):
        prob, K = start
        h = ascent_direction(K, 0.0, baseline)
        res = line_search(K, h, 0.0, baseline)
        assert res.delta > 0
        for d in np.linspace(0.0, res.bracket, 11):
            trial = prob.objective(K.values + d * h.values, Scalarized(0.0))
            assert res.objective >= trial - 1e-12

    def test_feasibility_cap(self, baseline, start):
        prob, K = start
        h = ascent_direction(K, 0.0, baseline)
        res = line_search(K, h, 0.0, baseline, AscentConfig(delta_max=100.0))
        assert prob.feasible(K.values + res.delta * h.values, 1e-9)

    def test_golden_section(self):
        x, fx = golden_section_max(lambda d: math.sin(d), 0.0, 3.0, 1e-9)
        assert x == pytest.approx(math.pi / 2, abs=1e-6) and fx == pytest.approx(1.0)


@pytest.fixture(scope="module")
def runs(baseline, coarse):
    cfg = AscentConfig(polish=False)
    return {th: solve_model_I(baseline, replace(cfg, theta=th), coarse) for th in (0.0, 0.1)}


class TestSolveModelI:
    def test_monotone_log(self, runs):
        for res in runs.values():
            J = [r.objective for r in res.log]
            assert all(b >= a for a, b in zip(J, J[1:]))
            assert res.iterations >= 3
            assert res.termination_reason in ("converged", "stalled", "max_iterations")

    def test_theta_ordering(self, runs):
        a, b = runs[0.0].log, runs[0.1].log
        for ra, rb in zip(a, b):
            assert rb.objective >= ra.objective

    def test_polish_improves(self, baseline, coarse, runs):
        res = solve_model_I(baseline, AscentConfig(theta=0.0), coarse)
        assert res.polished and res.objective >= runs[0.0].log[-1].objective
        assert res.ascent_objective == runs[0.0].log[-1].objective

    def test_result_fields_consistent(self, baseline, runs):
        res = runs[0.1]
        assert res.objective == pytest.approx(res.criteria.j1 + 0.1 * res.criteria.j2)
        assert res.capital.values.min() >= 0 and res.consumption.values.min() >= 0

    def test_linear_oracle(self):
        spec = ModelSpec(A=0.5, delta_K=0.5, initial_capital=InitialCapital("constant", k=1.0),
                         utility=UtilitySpec("linear"))
        g = make_grids(spec, 21, 40)
        res = solve_model_I(spec, AscentConfig(theta=0.0), g)
        cloud = enumerate_criteria(spec, ControlClass(2, 2, (0.0, 5.0, 10.0, 20.0, 40.0)), g)
        best = max(p.criteria.j1 for p in cloud)
        assert res.criteria.j1 >= best - 0.02 * abs(best)


class TestFrontier:
    def test_rejects_bad_grids(self, baseline, coarse):
        with pytest.raises(ValueError):
            trace_pareto_frontier(baseline, [], grids=coarse)
        with pytest.raises(ValueError, match="sorted"):
            trace_pareto_frontier(baseline, [0.5, 0.1], grids=coarse)

    def test_failures_are_recorded(self, baseline, coarse, monkeypatch):
        real = ascent.solve_model_I

        def flaky(spec, config, grids=None, initial=None):
            if config.theta == 0.5:
                raise RuntimeError("boom")
            return real(spec, replace(config, polish=False), grids)

        monkeypatch.setattr(ascent, "solve_model_I", flaky)
        front = trace_pareto_frontier(baseline, [0.0, 0.5], grids=coarse)
        bad = front.points[1]
        assert bad.criteria is None and "boom" in bad.termination_reason
        assert front.points[0].criteria is not None

    def test_workers_do_not_change_results(self, baseline, coarse):
        cfg = AscentConfig(polish=False)
        a = trace_pareto_frontier(baseline, [0.0, 0.1, 1.0], cfg, coarse)
        b = trace_pareto_frontier(baseline, [0.0, 0.1, 1.0], cfg, coarse, workers=3)
        assert [p.criteria for p in a.points] == [p.criteria for p in b.points]

    def test_mark_dominated(self):
        pts = [FrontierPoint(t, CriterionPair(*c), 1, "converged")
               for t, c in ((0, (1, 1)), (1, (2, 2)), (2, (3, 0.5)))]
        flags = [p.dominated for p in mark_dominated(pts)]
        assert flags == [True, False, False]

    def test_oracle_never_dominates_solver(self, baseline, coarse):
        cloud = enumerate_criteria(baseline, ControlClass(2, 2, (0.0, 1.5, 3.0)), coarse)
        front = trace_pareto_frontier(baseline, [0.1, 0.5], AscentConfig(), coarse)
        for p in front.undominated():
            assert certify_solver_point(p.criteria, cloud, 0.02).consistent
