import json

import pytest

from spatial_pareto.ascent import AscentConfig, FrontierPoint, ParetoFrontier, solve_model_I, \
    trace_pareto_frontier
from spatial_pareto.constrained import (EpsConstraintConfig, PenalizedConstraint,
                                        consistency_with_frontier, solve_model_II)
from spatial_pareto.model import CriterionPair


def solve(spec, grids, eps, orientation="utility_primary"):
    return solve_model_II(spec, EpsConstraintConfig(orientation, eps), grids)


@pytest.fixture(scope="module")
def eps_runs(baseline, coarse):
    return {e: solve(baseline, coarse, e) for e in (0.0, 0.5, 1.3, 2.5)}


@pytest.fixture(scope="module")
def frontier(baseline, coarse):
    return trace_pareto_frontier(baseline, [0.0, 0.1, 0.5, 1.0], AscentConfig(), coarse)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(orientation="both"), dict(mu0=0.0), dict(growth=1.0),
                                    dict(epsilon_level=float("inf"))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            EpsConstraintConfig(**kw)

    def test_penalty(self):
        c = CriterionPair(2.0, 1.0)
        p = PenalizedConstraint("utility_primary", 1.5, 10.0)
        assert p.value(c) == pytest.approx(2.0 - 10.0 * 0.25)
        assert p.weights(c) == (1.0, pytest.approx(10.0))
        q = PenalizedConstraint("sustainability_primary", 1.5, 10.0)
        assert q.value(c) == 1.0 and q.weights(c) == (0.0, 1.0)


class TestModelII:
    def test_level_1_3(self, eps_runs):
        res = eps_runs[1.3]
        assert res.feasible and res.criteria.j2 >= 1.3 - 1e-2
        assert res.slack == pytest.approx(res.criteria.j2 - 1.3)
        assert 1 <= len(res.rounds) <= 8

    def test_vacuous_constraint(self, baseline, coarse, eps_runs):
        free = solve_model_I(baseline, AscentConfig(theta=0.0), coarse)
        assert eps_runs[0.0].criteria.j1 == pytest.approx(free.criteria.j1, rel=1e-3)

    def test_infeasible_level(self, baseline, coarse):
        res = solve(baseline, coarse, 5.0)
        assert not res.feasible and res.slack < 0 and res.rounds == ()

    def test_monotone_in_epsilon(self, eps_runs):
        levels = sorted(eps_runs)
        j1 = [eps_runs[e].criteria.j1 for e in levels]
        j2 = [eps_runs[e].criteria.j2 for e in levels]
        scale = max(max(j1), max(j2))
        assert all(b <= a + 1e-3 * scale for a, b in zip(j1, j1[1:]))
        assert all(b >= a - 1e-3 * scale for a, b in zip(j2, j2[1:]))

    def test_orientation_symmetry(self, baseline, coarse, eps_runs):
        primal = eps_runs[1.3]
        dual = solve(baseline, coarse, primal.criteria.j1, "sustainability_primary")
        assert dual.feasible
        assert dual.criteria.j2 == pytest.approx(primal.criteria.j2, rel=0.02)
        assert dual.criteria.j1 == pytest.approx(primal.criteria.j1, rel=0.02)

    def test_json(self, eps_runs):
        d = json.loads(json.dumps(eps_runs[1.3].to_dict()))
        assert set(d) == {"orientation", "epsilon_level", "J1", "J2", "slack", "feasible",
                          "rounds"}


class TestConsistency:
    def test_epsilon_from_frontier_point(self, baseline, coarse, frontier):
        point = frontier.points[2]
        res = solve(baseline, coarse, point.criteria.j2)
        assert res.criteria.j1 >= point.criteria.j1 - 0.02 * abs(point.criteria.j1)
        assert consistency_with_frontier(res, frontier).consistent

    def test_unconstrained_nearest_is_theta_zero(self, eps_runs, frontier):
        report = consistency_with_frontier(eps_runs[0.0], frontier)
        assert report.nearest.theta in (0.0, 0.1)
        assert report.nearest.criteria.j1 == pytest.approx(frontier.points[0].criteria.j1,
                                                           rel=1e-6)

    def test_dominated_outcome_flagged(self):
        front = ParetoFrontier((FrontierPoint(0.0, CriterionPair(1.0, 1.0), 1, "converged"),))
        report = consistency_with_frontier(CriterionPair(0.9, 0.9), front)
        assert not report.consistent and len(report.dominating) == 1
        assert consistency_with_frontier(CriterionPair(0.99, 0.99), front).consistent
