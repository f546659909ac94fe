import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spatial_pareto.ascent import Problem
from spatial_pareto.model import CriterionPair, make_grids
from spatial_pareto.oracle import (CloudPoint, ControlClass, EnumerationCapError, certify_solver_point,
                                   cloud_rows, enumerate_criteria, nondominated_set,
                                   vertex_enumeration)

LEVELS = (0.0, 0.75, 1.5, 2.25, 3.0)


@pytest.fixture(scope="module")
def cloud(baseline, coarse):
    return enumerate_criteria(baseline, ControlClass(2, 2, LEVELS), coarse)


pairs = st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=25)


class TestControlClass:
    def test_cap(self, baseline, coarse):
        cls = ControlClass(3, 3, LEVELS)
        assert cls.size == 5 ** 9
        with pytest.raises(EnumerationCapError, match="cap"):
            enumerate_criteria(baseline, cls, coarse)

    def test_validation(self):
        with pytest.raises(ValueError):
            ControlClass(0, 1, (0.0,))
        with pytest.raises(ValueError):
            ControlClass(1, 1, (-1.0,))

    def test_block_maps(self, coarse):
        sb, tb = ControlClass(2, 2, (0.0,)).block_maps(coarse)
        assert sb[0] == 0 and sb[-1] == 1 and np.all(np.diff(sb) >= 0)
        assert tb[0] == tb[1] == 0 and tb[-1] == 1
        # the 40 steps split evenly between the two time blocks
        assert np.sum(tb[1:] == 0) == 20

    def test_field_layout(self, coarse):
        f = ControlClass(2, 2, (0.0,)).field([1, 2, 3, 4], coarse)
        assert f.shape == (coarse.nt + 1, coarse.nx)
        assert f[1, 0] == 1 and f[1, -1] == 2 and f[-1, 0] == 3 and f[-1, -1] == 4


class TestEnumeration:
    def test_single_zero_plan(self, baseline, coarse):
        pts = enumerate_criteria(baseline, ControlClass(1, 1, (0.0,)), coarse)
        prob = Problem(baseline, coarse)
        K, _ = prob.simulate(np.zeros((coarse.nt + 1, coarse.nx)))
        assert len(pts) == 1
        assert pts[0].criteria == prob.criteria(K)

    def test_binary_count(self, baseline, coarse):
        pts = enumerate_criteria(baseline, ControlClass(2, 1, (0.0, 1.0)), coarse)
        assert len(pts) == 4
        assert sorted(p.values for p in pts) == list(itertools.product((0.0, 1.0), repeat=2))

    def test_cloud(self, cloud):
        assert len(cloud) == 625
        best_j2 = max(cloud, key=lambda p: p.criteria.j2)
        assert best_j2.values == (0.0,) * 4
        assert all(np.isfinite(p.criteria.j1) and p.criteria.j2 >= 0 for p in cloud)

    def test_rows(self, cloud):
        rows = cloud_rows(cloud)
        front = nondominated_set(cloud)
        assert sum(r[-1] for r in rows) == len(front)
        assert rows[0][:5] == [0, 0.0, 0.0, 0.0, 0.0]


class TestNondominated:
    def test_examples(self):
        assert nondominated_set([(1, 1), (2, 0), (0, 2), (0.5, 0.5)]) == [(2, 0), (1, 1), (0, 2)]
        assert nondominated_set([(1, 1), (1, 1)]) == [(1, 1)]
        assert nondominated_set([(1, 1), (1, 2)]) == [(1, 2)]

    def test_cloud_points_kept(self, cloud):
        front = nondominated_set(cloud)
        assert all(isinstance(p, CloudPoint) for p in front)
        j2 = [p.criteria.j2 for p in front]
        j1 = [p.criteria.j1 for p in front]
        assert j2 == sorted(j2)
        assert all(a >= b for a, b in zip(j1, j1[1:]))

    @given(pairs)
    def test_idempotent(self, pts):
        front = nondominated_set(pts)
        assert nondominated_set(front) == front

    @given(pairs, st.randoms())
    def test_order_independent(self, pts, rnd):
        shuffled = pts[:]
        rnd.shuffle(shuffled)
        assert nondominated_set(shuffled) == nondominated_set(pts)

    @given(pairs)
    def test_members_are_maximal(self, pts):
        front = nondominated_set(pts)
        for p in front:
            assert not any(CriterionPair(*q).dominates(CriterionPair(*p)) for q in pts)
        for q in pts:
            assert q in front or any(CriterionPair(*p).dominates(CriterionPair(*q)) for p in front)

    def test_staircase(self):
        stairs = [(10 - k, k) for k in range(11)]
        noise = [(a - 0.5, b - 0.5) for a, b in stairs]
        assert nondominated_set(stairs + noise) == sorted(stairs, key=lambda p: p[1])


class TestCertify:
    cloud = [(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)]

    def test_point_in_cloud(self):
        v = certify_solver_point(CriterionPair(1.0, 1.0), self.cloud, 0.02)
        assert v.consistent and v.dominator is None and v.worst_margin == 0.0

    def test_dominated_point(self):
        # beaten by twice the tolerance in both criteria
        v = certify_solver_point(CriterionPair(0.92, 0.92), self.cloud, 0.02)
        assert not v.consistent and v.dominator == CriterionPair(1.0, 1.0)
        assert v.worst_margin == pytest.approx(0.04)
        assert str(v) == "inconsistent"

    def test_within_tolerance(self):
        assert certify_solver_point(CriterionPair(0.98, 0.98), self.cloud, 0.02).consistent


class TestVertexEnumeration:
    def test_small_lp(self):
        status, obj, x = vertex_enumeration([-1, -1], [[1, 2], [3, 1]], [4, 6])
        assert status == "optimal" and obj == Fraction(-14, 5)
        assert x == [Fraction(8, 5), Fraction(6, 5)]

    def test_status(self):
        assert vertex_enumeration([-1], [[-1]], [0])[0] == "unbounded"
        assert vertex_enumeration([1], [[1]], [-1])[0] == "infeasible"
        assert vertex_enumeration([1, 1], A_eq=[[1, 1], [2, 2]], b_eq=[1, 3])[0] == "infeasible"

    def test_redundant_equalities(self):
        status, obj, _ = vertex_enumeration([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
        assert status == "optimal" and obj == 1

    def test_numpy_integer_input(self):
        # large intermediate rationals must not overflow fixed-width integers
        rng = np.random.default_rng(3)
        A = rng.integers(-9, 10, (4, 6))
        status, obj, x = vertex_enumeration(rng.integers(-9, 10, 6), A, rng.integers(1, 9, 4),
                                            rng.integers(-9, 10, (1, 6)), rng.integers(1, 9, 1))
        assert status == "optimal" and obj == Fraction(-3811, 196)
        assert all(type(v.numerator) is int for v in x)
