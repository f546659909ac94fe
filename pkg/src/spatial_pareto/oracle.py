"""Brute-force references: control enumeration, Pareto filtering, LP vertices.

Everything here favours obviously-correct code over speed.  The criterion
cloud simulates every piecewise-constant consumption plan in a small class.
The LP oracle enumerates bases in exact rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .ascent import Problem
from .model import CriterionPair, Grids, ModelSpec, make_grids, validate_spec
from .pde import DEFAULT_SCHEME, SchemeConfig

DEFAULT_CAP = 100_000


class EnumerationCapError(ValueError):
    pass


@dataclass(frozen=True)
class ControlClass:
    space_blocks: int
    time_blocks: int
    levels: tuple[float, ...]

    def __post_init__(self):
        if self.space_blocks < 1 or self.time_blocks < 1:
            raise ValueError("block counts must be at least 1")
        lv = tuple(float(v) for v in self.levels)
        if not lv or any(not math.isfinite(v) or v < 0 for v in lv):
            raise ValueError("levels must be a nonempty set of finite nonnegative values")
        object.__setattr__(self, "levels", lv)

    @property
    def n_blocks(self):
        return self.space_blocks * self.time_blocks

    @property
    def size(self):
        return len(self.levels) ** self.n_blocks

    def block_maps(self, grids: Grids):
        """Block index of each spatial node and of each time row.

        Row ``j >= 1`` drives the step ending at ``t_j``, so it belongs to the
        block containing that interval; row 0 shares the block of row 1.
        """
        frac = (grids.x - grids.x_lo) / (grids.x_hi - grids.x_lo)
        sb = np.minimum((frac * self.space_blocks).astype(int), self.space_blocks - 1)
        rows = np.arange(grids.nt + 1)
        tb = ((np.maximum(rows, 1) - 1) * self.time_blocks) // grids.nt
        return sb, tb

    def field(self, values: Sequence[float], grids: Grids) -> np.ndarray:
        """Consumption array for block values ordered time-major."""
        v = np.asarray(values, dtype=float).reshape(self.time_blocks, self.space_blocks)
        sb, tb = self.block_maps(grids)
        return v[np.ix_(tb, sb)]


@dataclass(frozen=True)
class CloudPoint:
    control_id: int
    values: tuple[float, ...]
    criteria: CriterionPair


def enumerate_criteria(spec: ModelSpec, cls: ControlClass, grids: Grids | None = None,
                       cap: int = DEFAULT_CAP,
                       scheme: SchemeConfig = DEFAULT_SCHEME) -> list[CloudPoint]:
    """Criteria of every plan in ``cls``.

    Plans that would drive capital negative are clamped by the simulator and
    scored on the consumption actually realised, so every pair is feasible.
    """
    if cls.size > cap:
        raise EnumerationCapError(
            f"{cls.size} controls exceed the cap of {cap}; use fewer blocks or levels")
    validate_spec(spec)
    grids = grids or make_grids(spec)
    prob = Problem(spec, grids, scheme)
    out = []
    for cid, vals in enumerate(itertools.product(cls.levels, repeat=cls.n_blocks)):
        K, _ = prob.simulate(cls.field(vals, grids))
        out.append(CloudPoint(cid, tuple(vals), prob.criteria(K)))
    return out


def _pair(p) -> CriterionPair:
    if isinstance(p, CloudPoint):
        return p.criteria
    if isinstance(p, CriterionPair):
        return p
    return CriterionPair(float(p[0]), float(p[1]))


def nondominated_set(pairs: Iterable) -> list:
    """Maximal elements under the Pareto order, sorted by increasing ``J2``.

    Accepts criterion pairs, cloud points or plain 2-tuples and returns items
    of the same kind.  Exact duplicates are kept once.
    """
    items = list(pairs)
    seen = {}
    for it in items:
        seen.setdefault(tuple(_pair(it)), it)
    uniq = list(seen.items())
    keep = []
    for key, it in uniq:
        if not any(CriterionPair(*o).dominates(CriterionPair(*key)) for o, _ in uniq):
            keep.append((key, it))
    keep.sort(key=lambda kv: (kv[0][1], -kv[0][0]))
    return [it for _, it in keep]


@dataclass(frozen=True)
class Verdict:
    consistent: bool
    worst_margin: float
    dominator: CriterionPair | None

    def __str__(self):
        return "consistent" if self.consistent else "inconsistent"


def certify_solver_point(point: CriterionPair, pairs: Iterable, tolerance: float) -> Verdict:
    """Check that no pair beats ``point`` by more than ``tolerance`` in both criteria.

    ``tolerance`` is a fraction of the range of each criterion over the cloud
    and the point.  ``worst_margin`` is the largest amount, over pairs, by
    which the smaller of the two normalized improvements exceeds zero.
    """
    cloud = [_pair(p) for p in pairs]
    j1 = np.array([c.j1 for c in cloud] + [point.j1])
    j2 = np.array([c.j2 for c in cloud] + [point.j2])
    r1 = float(np.ptp(j1)) or 1.0
    r2 = float(np.ptp(j2)) or 1.0
    worst, who = -math.inf, None
    for c in cloud:
        m = min((c.j1 - point.j1) / r1, (c.j2 - point.j2) / r2)
        if m > worst:
            worst, who = m, c
    return Verdict(worst <= tolerance, worst, who if worst > tolerance else None)


def cloud_rows(points: Sequence[CloudPoint]):
    """Rows for the cloud CSV: id, block values, J1, J2, nondominated flag."""
    front = {p.control_id for p in nondominated_set(points)}
    return [[p.control_id, *p.values, p.criteria.j1, p.criteria.j2, int(p.control_id in front)]
            for p in points]


# ---------------------------------------------------------------------------
# exact LP vertex enumeration


def _frac(v) -> Fraction:
    """Exact rational; numpy scalars become Python numbers first to avoid int64 overflow."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(float(v))


def _frac_matrix(A):
    return [[_frac(v) for v in row] for row in A]


def _solve_exact(B, b):
    """Gaussian elimination over the rationals; ``None`` if singular."""
    n = len(B)
    M = [row[:] + [rhs] for row, rhs in zip(B, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _independent_rows(A, b):
    """Drop dependent rows; return ``None`` if the system is inconsistent."""
    rows, rhs = [], []
    basis = []  # reduced rows kept for the independence test
    for row, v in zip(A, b):
        r = row[:] + [v]
        for piv, br in basis:
            if r[piv] != 0:
                f = r[piv] / br[piv]
                r = [a - f * c for a, c in zip(r, br)]
        nz = next((k for k in range(len(row)) if r[k] != 0), None)
        if nz is None:
            if r[-1] != 0:
                return None
            continue
        basis.append((nz, r))
        rows.append(row)
        rhs.append(v)
    return rows, rhs


def _best_vertex(A, b, c):
    """Minimum of ``c.x`` over basic feasible solutions of ``A x = b, x >= 0``."""
    red = _independent_rows(A, b)
    if red is None:
        return None, None
    A, b = red
    m, n = len(A), len(c)
    if m == 0:
        return Fraction(0), [Fraction(0)] * n
    best, arg = None, None
    for cols in itertools.combinations(range(n), m):
        xb = _solve_exact([[A[i][j] for j in cols] for i in range(m)], b)
        if xb is None or any(v < 0 for v in xb):
            continue
        val = sum(c[j] * v for j, v in zip(cols, xb))
        if best is None or val < best:
            x = [Fraction(0)] * n
            for j, v in zip(cols, xb):
                x[j] = v
            best, arg = val, x
    return best, arg


def vertex_enumeration(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None):
    """Exact solution of ``min c.x, A_ub x <= b_ub, A_eq x = b_eq, x >= 0``.

    Returns ``(status, objective, x)`` with rational objective and point.
    Unboundedness is detected by minimizing ``c.d`` over normalized recession
    directions, which is itself a bounded vertex problem.
    """
    c = [_frac(v) for v in c]
    n = len(c)
    Aub = _frac_matrix(A_ub) if A_ub is not None and len(A_ub) else []
    bub = [_frac(v) for v in b_ub] if Aub else []
    Aeq = _frac_matrix(A_eq) if A_eq is not None and len(A_eq) else []
    beq = [_frac(v) for v in b_eq] if Aeq else []
    p = len(Aub)
    zero, one = Fraction(0), Fraction(1)
    A = [row + [zero] * p for row in Aeq]
    A += [row + [one if k == i else zero for k in range(p)] for i, row in enumerate(Aub)]
    b = beq + bub
    cs = c + [zero] * p

    best, x = _best_vertex(A, b, cs)
    if best is None:
        return "infeasible", None, None
    ray_A = [row[:] for row in A] + [[one] * (n + p)]
    ray_b = [zero] * len(A) + [one]
    ray, _ = _best_vertex(ray_A, ray_b, cs)
    if ray is not None and ray < 0:
        return "unbounded", None, None
    return "optimal", best, x[:n]
