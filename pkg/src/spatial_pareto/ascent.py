"""Weighted-sum scalarization solved by direction-PDE ascent.

The capital trajectory ``K`` is the decision variable.  Consumption is
recovered from it through the state equation, so the scalarized objective is
an explicit functional ``J(K) = J1(C(K)) + theta * J2(K)``.  Each ascent step
solves a linear parabolic problem for a direction ``h`` with ``h(., 0) = 0``,
line-searches along it and updates ``K``.

The direction step keeps ``J'(K; h)`` pinned at ``T * |Omega|``, which makes it
a strong first-order move but not a convergent method once bounds become
active.  After it stops, an optional polish phase maximizes the same discrete
objective over consumption with L-BFGS-B, treating ``K >= 0`` by an augmented
Lagrangian.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import minimize

from .model import CriterionPair, Field, Grids, ModelSpec, discounted_time_weights, \
    make_grids, validate_spec
from .pde import DEFAULT_SCHEME, SchemeConfig, Stencil, _transpose_bands, criteria_values, \
    diffusion_stencil, recover_tangent, recover_values, simulate_values, step_matrix

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class DirectionError(RuntimeError):
    """The direction fixed-point iteration did not converge."""


def phi_to_theta(phi: float) -> float:
    """Map the convex-combination weight ``phi`` in (0, 1) to ``phi / (1 - phi)``."""
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must lie in the open interval (0, 1), got {phi}")
    return phi / (1.0 - phi)


# ---------------------------------------------------------------------------
# objectives over the criterion pair


class CriteriaObjective:
    """Smooth scalar function of ``(J1, J2)`` with its partial derivatives."""

    def value(self, c: CriterionPair) -> float:
        raise NotImplementedError

    def weights(self, c: CriterionPair) -> tuple[float, float]:
        raise NotImplementedError


@dataclass(frozen=True)
class Scalarized(CriteriaObjective):
    theta: float

    def value(self, c):
        return c.j1 + self.theta * c.j2

    def weights(self, c):
        return 1.0, self.theta


# ---------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class AscentConfig:
    theta: float = 0.0
    stop_tol: float | None = None          # None -> 1e-4 * |J0|
    max_iterations: int = 50
    delta_max: float = 0.1
    line_search_tol: float = 1e-7
    sweep_tol: float = 1e-10
    max_sweeps: int = 400
    initial_share: float = 0.9
    feasibility_tol: float = 1e-12
    polish: bool = True
    polish_max_iter: int = 4000
    polish_gtol: float = 1e-9
    polish_rounds: int = 8
    scheme: SchemeConfig = DEFAULT_SCHEME

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        if self.stop_tol is not None and not self.stop_tol > 0:
            raise ValueError("stop_tol must be positive")
        if not self.delta_max > 0:
            raise ValueError("delta_max must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective: float
    delta: float


@dataclass(frozen=True)
class AscentResult:
    capital: Field
    consumption: Field
    criteria: CriterionPair
    objective: float
    log: tuple[IterationRecord, ...]
    termination_reason: str
    polished: bool = False
    ascent_objective: float = math.nan

    @property
    def iterations(self) -> int:
        return len(self.log) - 1


@dataclass(frozen=True)
class FrontierPoint:
    theta: float
    criteria: CriterionPair | None
    iterations: int
    termination_reason: str
    dominated: bool = False
    result: AscentResult | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class ParetoFrontier:
    points: tuple[FrontierPoint, ...]

    def undominated(self) -> list[FrontierPoint]:
        return [p for p in self.points if p.criteria is not None and not p.dominated]


# ---------------------------------------------------------------------------
# discrete problem


class Problem:
    """Discrete objective machinery shared by every solver on one lattice."""

    def __init__(self, spec: ModelSpec, grids: Grids, scheme: SchemeConfig = DEFAULT_SCHEME):
        self.spec = spec
        self.grids = grids
        self.scheme = scheme
        self.stencil: Stencil = diffusion_stencil(spec.diffusivity, grids)
        self.wx = grids.space_weights()
        self.wt_disc = discounted_time_weights(spec.rho, grids)
        self.k0 = spec.initial_capital(grids.x)
        self.length = spec.length

    # -- state / criteria --------------------------------------------------

    def recover(self, K):
        return recover_values(K, self.spec, self.grids, self.scheme, self.stencil)

    def tangent(self, K, h):
        return recover_tangent(h, K, self.spec, self.grids, self.scheme, self.stencil)

    def simulate(self, C, clamp=True):
        return simulate_values(C, self.spec, self.grids, self.scheme, clamp, self.stencil)

    def criteria(self, K, C_raw=None) -> CriterionPair:
        if C_raw is None:
            C_raw = self.recover(K)
        return criteria_values(K, np.maximum(C_raw, 0.0), self.spec, self.grids)

    def objective(self, K, obj: CriteriaObjective) -> float:
        return obj.value(self.criteria(K))

    def quad(self, vals) -> float:
        return float(self.wt_disc @ vals @ self.wx)

    def directional_derivative(self, K, h, obj: CriteriaObjective, C_raw=None) -> float:
        if C_raw is None:
            C_raw = self.recover(K)
        crit = self.criteria(K, C_raw)
        a1, a2 = obj.weights(crit)
        mu = np.where(C_raw >= 0, self.spec.utility.marginal(np.maximum(C_raw, 0.0)), 0.0)
        dc = self.tangent(K, h)
        return a1 * self.quad(mu * dc) + a2 * float(self.wx @ h[-1])

    def initial_capital(self, share: float) -> np.ndarray:
        level = share * self.spec.production(self.k0)
        C = np.tile(level, (self.grids.nt + 1, 1))
        K, _ = self.simulate(C)
        return K

    # -- direction ---------------------------------------------------------

    def direction(self, K, theta: float, sweep_tol=1e-10, max_sweeps=400) -> np.ndarray:
        """Solve the direction problem by lagging the ``theta * h_t`` source."""
        g = self.grids
        dt = g.dt
        C = np.maximum(self.recover(K), 0.0)
        s = np.exp(self.spec.rho * g.t)[:, None] / self.spec.utility.marginal(C)
        sl = slice(1, None) if self.scheme.implicit else slice(None, -1)
        slopes = self.spec.reaction_slope(K[sl])
        linear = self.spec.alpha == 1.0
        if self.scheme.implicit and linear:
            ab = step_matrix(self.stencil, dt, slopes[0])
        h = np.zeros(g.shape)
        resid = math.inf
        first = None
        for sweep in range(max_sweeps):
            rate = np.zeros(g.shape)
            rate[1:] = (h[1:] - h[:-1]) / dt
            with np.errstate(over="ignore", invalid="ignore"):
                rhs = s * (1.0 - theta * rate)
            if not np.all(np.isfinite(rhs)):
                raise DirectionError(f"direction diverged at sweep {sweep + 1}")
            new = np.zeros(g.shape)
            for j in range(1, g.nt + 1):
                prev = new[j - 1]
                if self.scheme.implicit:
                    mat = ab if linear else step_matrix(self.stencil, dt, slopes[j - 1])
                    new[j] = solve_banded((1, 1), mat, prev - dt * rhs[j])
                else:
                    new[j] = prev + dt * (self.stencil.apply(prev) + slopes[j - 1] * prev - rhs[j])
            if not np.all(np.isfinite(new)):
                raise DirectionError(f"direction diverged at sweep {sweep + 1}")
            resid = float(np.max(np.abs(new - h)))
            h = new
            if first is None:
                first = resid
            elif resid > 1e6 * first:
                raise DirectionError(
                    f"direction sweeps diverging at sweep {sweep + 1} (change {resid:.3e})")
            if theta == 0.0 or resid <= sweep_tol * max(1.0, float(np.max(np.abs(h)))):
                return h
        raise DirectionError(
            f"direction sweeps did not converge in {max_sweeps} sweeps (last change {resid:.3e})")

    # -- line search -------------------------------------------------------

    def feasible(self, K, tol=1e-12) -> bool:
        if np.any(K < -tol):
            return False
        return bool(np.all(self.recover(K) >= -tol))

    def feasible_step(self, K, h, delta_max, tol=1e-12) -> float:
        """Largest ``delta <= delta_max`` keeping ``K + delta h`` and its consumption nonnegative."""
        cap = delta_max
        neg = h < 0
        if neg.any():
            cap = min(cap, float(np.min(np.maximum(K[neg], 0.0) / -h[neg])))
        C = self.recover(K)
        dc = self.tangent(K, h)
        neg = dc < 0
        if neg.any():
            cap = min(cap, float(np.min(np.maximum(C[neg], 0.0) / -dc[neg])))
        cap = max(cap, 0.0)
        if self.spec.alpha != 1.0:
            lo, hi = 0.0, cap
            if not self.feasible(K + hi * h, tol):
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if self.feasible(K + mid * h, tol):
                        lo = mid
                    else:
                        hi = mid
                cap = lo
        return cap


def golden_section_max(phi: Callable[[float], float], lo: float, hi: float,
                       tol: float) -> tuple[float, float]:
    """Maximize a unimodal ``phi`` on ``[lo, hi]``; endpoints are candidates too."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = phi(d)
    best, fbest = (c, fc) if fc >= fd else (d, fd)
    for x in (lo, hi):
        fx = phi(x)
        if fx > fbest:
            best, fbest = x, fx
    return best, fbest


@dataclass(frozen=True)
class LineSearchResult:
    delta: float
    objective: float
    stalled: bool
    bracket: float


def _line_search(problem: Problem, K, h, obj: CriteriaObjective, config: AscentConfig,
                 profile: Callable[[float], float] | None = None) -> LineSearchResult:
    if profile is None:
        bracket = problem.feasible_step(K, h, config.delta_max, config.feasibility_tol)

        def profile(delta):
            return problem.objective(K + delta * h, obj)
    else:
        bracket = config.delta_max
    f0 = profile(0.0)
    if bracket <= 0.0:
        return LineSearchResult(0.0, f0, True, 0.0)
    delta, fbest = golden_section_max(profile, 0.0, bracket, config.line_search_tol * bracket)
    if not fbest > f0:
        return LineSearchResult(0.0, f0, True, bracket)
    return LineSearchResult(delta, fbest, False, bracket)


# ---------------------------------------------------------------------------
# polish: consumption-space L-BFGS-B with augmented Lagrangian for K >= 0


def polish(problem: Problem, C_start: np.ndarray, obj: CriteriaObjective,
           max_iter: int = 4000, gtol: float = 1e-9, rounds: int = 8,
           k_tol: float = 1e-9, mu0: float = 1e4) -> np.ndarray:
    """Maximize ``obj`` over nonnegative consumption; returns the consumption field."""
    g = problem.grids
    spec = problem.spec
    n_rows = g.nt
    wt = g.time_weights()
    cell = np.outer(wt, problem.wx)[1:]
    scale = 1.0 / (g.dt * g.dx)
    dt = g.dt
    implicit = problem.scheme.implicit
    linear = spec.alpha == 1.0
    st = problem.stencil
    if linear and implicit:
        # dense inverse: one mat-vec per step is much cheaper than a banded solve here
        n = g.nx
        Minv = solve_banded((1, 1), step_matrix(st, dt, spec.A - spec.delta_K), np.eye(n))
        MinvT = np.ascontiguousarray(Minv.T)
    disc = problem.wt_disc.copy()
    row_w = disc[1:].copy()
    row_w[0] += disc[0]

    y = np.zeros((n_rows, g.nx))
    mu = mu0

    def unpack(z):
        C = np.empty(g.shape)
        C[1:] = z.reshape(n_rows, g.nx)
        C[0] = C[1]
        return C

    def forward(C):
        if not (linear and implicit):
            return problem.simulate(C, clamp=False)[0]
        K = np.empty(g.shape)
        K[0] = problem.k0
        src = -dt * C
        for j in range(g.nt):
            K[j + 1] = Minv @ (K[j] + src[j + 1])
        return K

    def fun(z):
        C = unpack(z)
        K = forward(C)
        crit = criteria_values(K, C, spec, g)
        a1, a2 = obj.weights(crit)
        Kin = K[1:]
        act = np.maximum(0.0, y - mu * Kin)
        penalty = float(np.sum(cell * (act**2 - y**2))) / (2.0 * mu)
        f = -obj.value(crit) + penalty
        gK = cell * act  # sensitivity of -f to K through the penalty
        gK[-1] += a2 * problem.wx
        grad = np.empty((n_rows, g.nx))
        p = np.zeros(g.nx)
        for j in range(g.nt, 0, -1):
            p = p + gK[j - 1]
            if implicit:
                if linear:
                    q = MinvT @ p
                else:
                    ab = step_matrix(st, dt, spec.reaction_slope(np.maximum(K[j], 1e-12)))
                    q = solve_banded((1, 1), _transpose_bands(ab), p)
                grad[j - 1] = -dt * q
                p = q
            else:
                grad[j - 1] = -dt * p
                slope = spec.reaction_slope(np.maximum(K[j - 1], 1e-12))
                p = p + dt * (st.apply_transpose(p) + slope * p)
        grad += a1 * row_w[:, None] * spec.utility.marginal(C[1:]) * problem.wx
        return scale * f, -scale * grad.ravel()

    z = np.maximum(C_start[1:], 0.0).ravel().copy()
    bounds = [(0.0, None)] * z.size
    last_viol = math.inf
    for rnd in range(rounds):
        res = minimize(fun, z, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": max_iter, "maxfun": 2 * max_iter,
                                "gtol": gtol, "ftol": 1e-16, "maxcor": 10})
        z = res.x
        Kin = forward(unpack(z))[1:]
        viol = float(max(0.0, -Kin.min()))
        y = np.maximum(0.0, y - mu * Kin)
        log.debug("polish round %d: f=%.10g viol=%.3e nit=%d", rnd, res.fun, viol, res.nit)
        if viol <= k_tol:
            break
        if viol > 0.25 * last_viol:
            mu *= 10.0
        last_viol = viol
    return unpack(z)


# ---------------------------------------------------------------------------
# public operations


def _problem_for(capital: Field, spec: ModelSpec) -> Problem:
    return Problem(spec, capital.grids)


def scalarized_objective(capital: Field, theta: float, spec: ModelSpec,
                         report: dict | None = None) -> float:
    """``J1 + theta * J2`` with consumption recovered from ``capital``.

    If ``report`` is given it receives the recovery clip diagnostics.
    """
    prob = _problem_for(capital, spec)
    C_raw = prob.recover(capital.values)
    if report is not None:
        neg = C_raw < 0
        report["clipped_nodes"] = int(neg.sum())
        report["clip_magnitude"] = float(-C_raw[neg].min()) if neg.any() else 0.0
    return Scalarized(theta).value(prob.criteria(capital.values, C_raw))


def directional_derivative(capital: Field, direction: Field | np.ndarray, theta: float,
                           spec: ModelSpec) -> float:
    """First variation of the scalarized objective along ``direction``."""
    h = direction.values if isinstance(direction, Field) else np.asarray(direction, float)
    prob = _problem_for(capital, spec)
    return prob.directional_derivative(capital.values, h, Scalarized(theta))


def ascent_direction(capital: Field, theta: float, spec: ModelSpec,
                     config: AscentConfig = AscentConfig()) -> Field:
    """Growth direction ``h`` with ``h(., 0) = 0``.

    Raises:
        DirectionError: the lagged ``theta * h_t`` iteration failed to converge.
    """
    prob = Problem(spec, capital.grids, config.scheme)
    h = prob.direction(capital.values, theta, config.sweep_tol, config.max_sweeps)
    return Field(capital.grids, h, "direction")


def line_search(capital: Field, direction: Field, theta: float, spec: ModelSpec,
                config: AscentConfig = AscentConfig(),
                profile: Callable[[float], float] | None = None) -> LineSearchResult:
    """Golden-section search for the best feasible step along ``direction``.

    ``profile`` replaces the objective along the ray (test hook).
    """
    prob = Problem(spec, capital.grids, config.scheme)
    return _line_search(prob, capital.values, direction.values, Scalarized(theta), config, profile)


def run_ascent(problem: Problem, K0: np.ndarray, obj: CriteriaObjective,
               config: AscentConfig, theta_of: Callable[[CriterionPair], float] | None = None):
    """Direction/line-search loop.  Returns ``(K, log, reason)``.

    ``theta_of`` gives the direction weight for objectives that are not a
    fixed scalarization (``a2 / a1`` by default).
    """
    K = K0
    J = problem.objective(K, obj)
    records = [IterationRecord(0, J, 0.0)]
    stop_tol = config.stop_tol if config.stop_tol is not None else 1e-4 * max(abs(J), 1e-12)
    reason = "max_iterations"
    for it in range(1, config.max_iterations + 1):
        crit = problem.criteria(K)
        if theta_of is not None:
            theta = theta_of(crit)
        else:
            a1, a2 = obj.weights(crit)
            theta = a2 / a1 if a1 > 0 else math.inf
        if not math.isfinite(theta):
            reason = "direction_failed"
            break
        try:
            h = problem.direction(K, theta, config.sweep_tol, config.max_sweeps)
        except DirectionError as exc:
            log.info("ascent stopped at iteration %d: %s", it, exc)
            reason = "direction_failed"
            break
        ls = _line_search(problem, K, h, obj, config)
        if ls.stalled:
            reason = "stalled"
            break
        K = K + ls.delta * h
        gain = ls.objective - J
        J = ls.objective
        records.append(IterationRecord(it, J, ls.delta))
        if abs(gain) < stop_tol:
            reason = "converged"
            break
    return K, tuple(records), reason


def finish(problem: Problem, K: np.ndarray, obj: CriteriaObjective, config: AscentConfig):
    """Optionally polish; returns ``(K, objective, polished)``, keeping the better of the two."""
    J_ascent = problem.objective(K, obj)
    if not config.polish:
        return K, J_ascent, False
    C = polish(problem, np.maximum(problem.recover(K), 0.0), obj,
               config.polish_max_iter, config.polish_gtol, config.polish_rounds)
    K_new, _ = problem.simulate(C, clamp=True)
    J_new = problem.objective(K_new, obj)
    if J_new >= J_ascent:
        return K_new, J_new, True
    return K, J_ascent, False


def build_result(problem: Problem, K, obj, records, reason, polished, J_ascent) -> AscentResult:
    g = problem.grids
    K = np.maximum(K, 0.0)
    C_raw = problem.recover(K)
    cap = Field(g, K, "capital")
    neg = C_raw < 0
    cons = Field(g, np.where(neg, 0.0, C_raw), "consumption",
                 {"clipped_nodes": int(neg.sum()),
                  "clip_magnitude": float(-C_raw[neg].min()) if neg.any() else 0.0})
    crit = problem.criteria(K, C_raw)
    return AscentResult(cap, cons, crit, obj.value(crit), records, reason, polished, J_ascent)


def solve_model_I(spec: ModelSpec, config: AscentConfig = AscentConfig(),
                  grids: Grids | None = None, initial: np.ndarray | None = None) -> AscentResult:
    """Maximize ``J1 + theta * J2`` from the configured initial iterate."""
    validate_spec(spec)
    grids = grids or make_grids(spec)
    prob = Problem(spec, grids, config.scheme)
    obj = Scalarized(config.theta)
    K0 = prob.initial_capital(config.initial_share) if initial is None else initial
    K, records, reason = run_ascent(prob, K0, obj, config)
    J_ascent = records[-1].objective
    K, _, polished = finish(prob, K, obj, config)
    return build_result(prob, K, obj, records, reason, polished, J_ascent)


def trace_pareto_frontier(spec: ModelSpec, theta_grid: Sequence[float],
                          config: AscentConfig = AscentConfig(), grids: Grids | None = None,
                          workers: int = 1) -> ParetoFrontier:
    """Solve the scalarized problem for each weight and collect ``(J1, J2)``."""
    thetas = [float(t) for t in theta_grid]
    if not thetas:
        raise ValueError("theta_grid must be nonempty")
    if any(b < a for a, b in zip(thetas, thetas[1:])):
        raise ValueError("theta_grid must be sorted ascending")
    grids = grids or make_grids(spec)

    def one(theta):
        try:
            res = solve_model_I(spec, replace(config, theta=theta), grids)
        except Exception as exc:  # per-point failure is recorded, not fatal
            return FrontierPoint(theta, None, 0, f"error: {exc}")
        reason = res.termination_reason + ("+polish" if res.polished else "")
        return FrontierPoint(theta, res.criteria, res.iterations, reason, result=res)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            points = list(pool.map(one, thetas))
    else:
        points = [one(t) for t in thetas]
    return ParetoFrontier(tuple(mark_dominated(points)))


def mark_dominated(points: Sequence[FrontierPoint]) -> list[FrontierPoint]:
    out = []
    for p in points:
        dom = p.criteria is not None and any(
            q.criteria is not None and q is not p and q.criteria.dominates(p.criteria)
            for q in points)
        out.append(replace(p, dominated=dom))
    return out
