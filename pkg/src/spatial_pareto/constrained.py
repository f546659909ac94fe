"""Epsilon-constraint formulations solved by quadratic-penalty ascent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .ascent import AscentConfig, CriteriaObjective, FrontierPoint, ParetoFrontier, Problem, \
    build_result, finish, run_ascent
from .model import CriterionPair, Field, Grids, ModelSpec, make_grids, validate_spec

ORIENTATIONS = ("utility_primary", "sustainability_primary")


@dataclass(frozen=True)
class PenalizedConstraint(CriteriaObjective):
    """Primary criterion minus ``mu * max(0, eps - secondary)**2``."""

    orientation: str
    epsilon: float
    mu: float

    def _split(self, c):
        if self.orientation == "utility_primary":
            return c.j1, c.j2
        return c.j2, c.j1

    def value(self, c):
        primary, secondary = self._split(c)
        return primary - self.mu * max(0.0, self.epsilon - secondary) ** 2

    def weights(self, c):
        _, secondary = self._split(c)
        w = 2.0 * self.mu * max(0.0, self.epsilon - secondary)
        return (1.0, w) if self.orientation == "utility_primary" else (w, 1.0)


@dataclass(frozen=True)
class EpsConstraintConfig:
    orientation: str = "utility_primary"
    epsilon_level: float = 1.3
    mu0: float = 1.0
    growth: float = 10.0
    max_rounds: int = 8
    feasibility_tol: float = 1e-2
    inner: AscentConfig = AscentConfig()

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")
        if not self.growth > 1:
            raise ValueError("growth factor must exceed 1")
        if not math.isfinite(self.epsilon_level):
            raise ValueError("epsilon_level must be finite")


@dataclass(frozen=True)
class EpsConstraintResult:
    orientation: str
    epsilon_level: float
    capital: Field
    consumption: Field
    criteria: CriterionPair
    slack: float
    feasible: bool
    rounds: tuple[dict[str, float], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "orientation": self.orientation,
            "epsilon_level": self.epsilon_level,
            "J1": self.criteria.j1,
            "J2": self.criteria.j2,
            "slack": self.slack,
            "feasible": self.feasible,
            "rounds": len(self.rounds),
        }


def _slack(orientation, crit, eps):
    return (crit.j2 if orientation == "utility_primary" else crit.j1) - eps


def solve_model_II(spec: ModelSpec, config: EpsConstraintConfig = EpsConstraintConfig(),
                   grids: Grids | None = None) -> EpsConstraintResult:
    """Maximize one criterion subject to a lower bound on the other.

    The bound enters as a quadratic penalty whose weight grows by
    ``config.growth`` until the constraint holds within ``feasibility_tol``.
    Infeasible levels return ``feasible=False`` with the best attempt.
    """
    validate_spec(spec)
    grids = grids or make_grids(spec)
    inner = config.inner
    prob = Problem(spec, grids, inner.scheme)
    eps = config.epsilon_level
    orient = config.orientation

    if orient == "utility_primary":
        # zero consumption maximizes terminal capital (comparison principle)
        K_max, _ = prob.simulate(np.zeros(grids.shape))
        if prob.criteria(K_max).j2 < eps - config.feasibility_tol:
            return _package(prob, K_max, orient, eps, config, [])

    K = prob.initial_capital(inner.initial_share)
    mu = config.mu0
    rounds: list[dict[str, float]] = []
    for rnd in range(config.max_rounds):
        obj = PenalizedConstraint(orient, eps, mu)
        K, records, reason = run_ascent(prob, K, obj, inner)
        K, _, _ = finish(prob, K, obj, inner)
        crit = prob.criteria(K)
        slack = _slack(orient, crit, eps)
        rounds.append({"mu": mu, "J1": crit.j1, "J2": crit.j2, "slack": slack,
                       "ascent_iterations": len(records) - 1})
        if slack >= -config.feasibility_tol:
            break
        mu *= config.growth
    return _package(prob, K, orient, eps, config, rounds)


def _package(prob, K, orient, eps, config, rounds):
    res = build_result(prob, K, PenalizedConstraint(orient, eps, 0.0), (), "", False, math.nan)
    slack = _slack(orient, res.criteria, eps)
    return EpsConstraintResult(orient, eps, res.capital, res.consumption, res.criteria, slack,
                               slack >= -config.feasibility_tol, tuple(rounds))


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    nearest: FrontierPoint | None
    gap: float
    dominating: tuple[FrontierPoint, ...] = field(default=())


def consistency_with_frontier(result: EpsConstraintResult | CriterionPair,
                              frontier: ParetoFrontier, tolerance: float = 0.02) -> ConsistencyReport:
    """Check that no frontier point beats ``result`` by more than ``tolerance``
    in both criteria.

    Margins are relative to the criterion scale ``max |J_i|`` over the frontier
    and the checked point.
    """
    crit = result.criteria if isinstance(result, EpsConstraintResult) else result
    pts = [p for p in frontier.points if p.criteria is not None]
    s1 = max([abs(crit.j1)] + [abs(p.criteria.j1) for p in pts]) or 1.0
    s2 = max([abs(crit.j2)] + [abs(p.criteria.j2) for p in pts]) or 1.0
    dominating = tuple(
        p for p in pts
        if p.criteria.j1 > crit.j1 + tolerance * s1 and p.criteria.j2 > crit.j2 + tolerance * s2)
    nearest, gap = None, math.inf
    for p in pts:
        d = math.hypot((p.criteria.j1 - crit.j1) / s1, (p.criteria.j2 - crit.j2) / s2)
        if d < gap:
            nearest, gap = p, d
    return ConsistencyReport(not dominating, nearest, gap, dominating)
