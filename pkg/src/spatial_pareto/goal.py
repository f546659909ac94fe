"""Weighted goal programming on the time-discretized aggregate model.

Unknowns are the capital path ``K(0..T)``, the consumption path ``C(0..T)``
and four deviation variables.  The recursion is
``K(i+1) = (1 + g) K(i) - C(i)`` and the criteria are ``J2 = K(T)`` and
``J1 = sum_i C(i) e^{-rho i}``.  Terminal consumption is capped by the
resources available over the last step, ``C(T) <= (1 + g) K(T)``; without it
the efficiency stage is unbounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .aggregate import AggregateSpec
from .model import CriterionPair
from .simplex import OPTIMAL, LpInstance, LpSolution, solve_lp

DEVIATIONS = ("d1_plus", "d1_minus", "d2_plus", "d2_minus")


class GoalProgramError(RuntimeError):
    pass


@dataclass(frozen=True)
class GpSpec:
    g1: float
    g2: float
    g: float = 0.99
    rho: float = 0.03
    K_M0: float = 1.5
    steps: int = 1
    weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be an integer >= 1")
        if len(self.weights) != 4 or any(w < 0 for w in self.weights):
            raise ValueError("weights must be four nonnegative numbers (t1+, t1-, t2+, t2-)")
        if not self.K_M0 > 0:
            raise ValueError("K_M0 must be positive")

    @classmethod
    def from_aggregate(cls, agg: AggregateSpec, g1, g2, steps=1, weights=(1.0, 1.0, 1.0, 1.0)):
        return cls(g1, g2, agg.g, agg.rho, agg.K_M0, int(steps), tuple(weights))

    @property
    def zero_consumption_capital(self):
        return self.K_M0 * (1.0 + self.g) ** self.steps


@dataclass(frozen=True)
class _Layout:
    T: int

    def K(self, i):
        return i

    def C(self, i):
        return self.T + 1 + i

    def dev(self, k):
        return 2 * (self.T + 1) + k

    @property
    def n(self):
        return 2 * (self.T + 1) + 4

    @property
    def names(self):
        T = self.T
        return [f"K_M({i})" for i in range(T + 1)] + [f"C_M({i})" for i in range(T + 1)] \
            + list(DEVIATIONS)


def _criteria_rows(gp: GpSpec):
    lay = _Layout(gp.steps)
    j1 = np.zeros(lay.n)
    for i in range(gp.steps + 1):
        j1[lay.C(i)] = math.exp(-gp.rho * i)
    j2 = np.zeros(lay.n)
    j2[lay.K(gp.steps)] = 1.0
    return j1, j2


def discretize_gp(gp: GpSpec) -> LpInstance:
    T = gp.steps
    lay = _Layout(T)
    n = lay.n
    rows, rhs, names = [], [], []
    for i in range(T):
        r = np.zeros(n)
        r[lay.K(i + 1)] = 1.0
        r[lay.K(i)] = -(1.0 + gp.g)
        r[lay.C(i)] = 1.0
        rows.append(r)
        rhs.append(0.0)
        names.append(f"rec{i}")
    j1, j2 = _criteria_rows(gp)
    goal1 = j2.copy()
    goal1[lay.dev(0)], goal1[lay.dev(1)] = -1.0, 1.0
    goal2 = j1.copy()
    goal2[lay.dev(2)], goal2[lay.dev(3)] = -1.0, 1.0
    rows += [goal1, goal2]
    rhs += [gp.g1, gp.g2]
    names += ["goal1", "goal2"]

    cap = np.zeros((1, n))
    cap[0, lay.C(T)] = 1.0
    cap[0, lay.K(T)] = -(1.0 + gp.g)

    c = np.zeros(n)
    for k, w in enumerate(gp.weights):
        c[lay.dev(k)] = w
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    lb[lay.K(0)] = ub[lay.K(0)] = gp.K_M0
    return LpInstance(c, np.array(rows), np.array(rhs), cap, np.zeros(1), lb, ub, lay.names,
                      names, ["cterm"])


@dataclass
class GpResult:
    spec: GpSpec
    solution: LpSolution
    criteria: CriterionPair | None
    deviations: dict[str, float]
    K_path: np.ndarray | None
    C_path: np.ndarray | None
    objective: float
    stage: str = "goal"
    efficient: bool | None = None
    certificates: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "objective": self.objective,
            "deviations": self.deviations,
            "K_path": None if self.K_path is None else self.K_path.tolist(),
            "C_path": None if self.C_path is None else self.C_path.tolist(),
            "J1": None if self.criteria is None else self.criteria.j1,
            "J2": None if self.criteria is None else self.criteria.j2,
            "status": self.solution.status,
            "stage": self.stage,
        }
        if self.efficient is not None:
            out["efficient"] = self.efficient
            out["certificates"] = self.certificates
        return out


def _unpack(gp, sol, stage="goal"):
    lay = _Layout(gp.steps)
    if not sol.optimal:
        return GpResult(gp, sol, None, {}, None, None, math.nan, stage)
    x = sol.x
    j1, j2 = _criteria_rows(gp)
    devs = {nm: float(x[lay.dev(k)]) for k, nm in enumerate(DEVIATIONS)}
    obj = float(sum(w * devs[nm] for w, nm in zip(gp.weights, DEVIATIONS)))
    return GpResult(gp, sol, CriterionPair(float(j1 @ x), float(j2 @ x)), devs,
                    x[:gp.steps + 1].copy(), x[gp.steps + 1:2 * gp.steps + 2].copy(), obj, stage)


def solve_model_III(gp: GpSpec) -> GpResult:
    """Minimize the weighted goal deviations; raises if the LP has no optimum."""
    lp = discretize_gp(gp)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise GoalProgramError(f"goal program is {sol.status}: recursion rows {lp.eq_names[:-2]} "
                               f"with goal rows {lp.eq_names[-2:]}")
    return _unpack(gp, sol)


def _with_rows(lp: LpInstance, c, eq_rows=(), ub_rows=()):
    A_eq, b_eq = lp.A_eq, lp.b_eq
    if eq_rows:
        A_eq = np.vstack([A_eq] + [r for r, _ in eq_rows])
        b_eq = np.concatenate([b_eq, [b for _, b in eq_rows]])
    A_ub, b_ub = lp.A_ub, lp.b_ub
    if ub_rows:
        A_ub = np.vstack([A_ub] + [r[None, :] for r, _ in ub_rows])
        b_ub = np.concatenate([b_ub, [b for _, b in ub_rows]])
    return LpInstance(c, A_eq, b_eq, A_ub, b_ub, lp.lb, lp.ub, lp.names)


def dominance_certificates(gp: GpSpec, point: CriterionPair, tol: float = 1e-7):
    """Largest achievable gain in each criterion without losing the other.

    Both gains are at most ``tol`` (relative) exactly when no discrete
    feasible plan weakly improves both criteria with one strict.
    """
    lp = discretize_gp(gp)
    j1, j2 = _criteria_rows(gp)
    gains = {}
    for name, own, other, own_val, other_val in (("J1", j1, j2, point.j1, point.j2),
                                                 ("J2", j2, j1, point.j2, point.j1)):
        aux = _with_rows(lp, -own, ub_rows=[(-other, -other_val)])
        sol = solve_lp(aux)
        if sol.status == "unbounded":
            gains[name] = math.inf
        elif not sol.optimal:
            gains[name] = math.nan
        else:
            gains[name] = float(own @ sol.x) - own_val
    scale = max(1.0, abs(point.j1), abs(point.j2))
    efficient = all(g <= tol * scale for g in gains.values())
    return efficient, gains


def restore_efficiency(gp: GpSpec, result: GpResult) -> GpResult:
    """Second stage: hold the deviation objective at its optimum and maximize J1 + J2.

    The returned result carries the two auxiliary-LP certificates.  When both
    goals are interior and surpluses are penalized, holding the deviation
    optimum pins the criteria, so the certificate can legitimately report
    ``efficient=False``.
    """
    if not result.solution.optimal:
        raise GoalProgramError("restoration needs an optimal goal-programming solution")
    lp = discretize_gp(gp)
    j1, j2 = _criteria_rows(gp)
    z = result.objective
    sol = solve_lp(_with_rows(lp, -(j1 + j2), eq_rows=[(lp.c[None, :], z)]))
    if not sol.optimal:
        raise GoalProgramError(f"restoration stage is {sol.status}")
    out = _unpack(gp, sol, "restored")
    out.efficient, out.certificates = dominance_certificates(gp, out.criteria)
    return out
