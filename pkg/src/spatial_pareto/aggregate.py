"""Aggregate reduction of the linear model and its bang-bang solution.

With ``U(C) = C`` and ``alpha = 1`` the zero-flux diffusion term integrates
out, leaving

    max  int_0^T c K e^{-rho t} dt,   K' = (g - c) K,   c in [0, 1],
         K(0) = K0,   K(T) >= eps.

The value function is linear in ``K``.  Writing it as ``v(t) K`` and
``w = v e^{rho t}``, consumption is ``c = 1`` exactly when ``w < 1``.  When
``g > rho`` there is one switch from saving to consuming, with the consumption
window no longer than ``s* = ln(1 + k) / k``, ``k = g - 1 - rho``.  When
``g <= rho`` consumption comes first.  The terminal constraint caps the total
time spent consuming at ``ln(K0 e^{gT} / eps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .model import ModelSpec


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class AggregateSpec:
    g: float
    rho: float
    T: float
    K_M0: float
    epsilon_level: float = 0.0

    def __post_init__(self):
        if not self.K_M0 > 0:
            raise ValueError("K_M0 must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def capital_bound(self) -> float:
        """Terminal capital under zero consumption, the largest reachable."""
        return self.K_M0 * math.exp(self.g * self.T)


def reduce_to_aggregate(spec: ModelSpec, epsilon_level: float = 0.0) -> AggregateSpec:
    if spec.utility.kind != "linear":
        raise ReductionError("aggregate reduction requires linear utility")
    if spec.alpha != 1.0:
        raise ReductionError("aggregate reduction requires alpha = 1")
    lo, hi = spec.omega
    k_m0, _ = quad(lambda x: float(spec.initial_capital(x)), lo, hi, epsabs=1e-13, epsrel=1e-13)
    return AggregateSpec(spec.A - spec.delta_K, spec.rho, spec.T, k_m0, epsilon_level)


@dataclass(frozen=True)
class BangBangSolution:
    switch_points: tuple[float, ...]
    c_values: tuple[float, ...]
    payoff: float
    feasible: bool
    terminal_capital: float
    capital_bound: float
    agg: AggregateSpec

    @property
    def intervals(self) -> list[tuple[float, float, float]]:
        edges = (0.0,) + self.switch_points + (self.agg.T,)
        return [(a, b, c) for a, b, c in zip(edges, edges[1:], self.c_values)]

    def control(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.c_values[-1])
        for a, b, c in reversed(self.intervals):
            out = np.where((t >= a) & (t < b), c, out)
        return out

    def capital(self, t):
        """Closed-form ``K_M(t)``."""
        t = np.asarray(t, dtype=float)
        g = self.agg.g
        k = np.full_like(t, self.agg.K_M0)
        start = self.agg.K_M0
        for a, b, c in self.intervals:
            inside = (t >= a) & (t <= b)
            k = np.where(inside, start * np.exp((g - c) * (t - a)), k)
            start = start * math.exp((g - c) * (b - a))
        return k

    def to_dict(self):
        return {
            "switch_points": list(self.switch_points),
            "c_values": list(self.c_values),
            "payoff": self.payoff,
            "feasible": self.feasible,
            "terminal_capital": self.terminal_capital,
            "capital_bound": self.capital_bound,
        }


def _window_payoff(k_start, a, b, g, rho):
    """Payoff of consuming at rate 1 on ``[a, b]`` starting from capital ``k_start``."""
    if b <= a:
        return 0.0
    k = g - 1.0 - rho
    scale = k_start * math.exp(-(g - 1.0) * a)
    if abs(k) < 1e-14:
        return scale * (b - a)
    return scale * (math.exp(k * b) - math.exp(k * a)) / k


def solve_bang_bang(agg: AggregateSpec) -> BangBangSolution:
    g, rho, T, k0 = agg.g, agg.rho, agg.T, agg.K_M0
    bound = agg.capital_bound
    eps = agg.epsilon_level
    if eps > bound:
        return BangBangSolution((), (0.0,), 0.0, False, bound, bound, agg)
    s_cap = math.log(bound / eps) if eps > 0 else math.inf

    if g > rho:
        k = g - 1.0 - rho
        s_free = math.log1p(k) / k if abs(k) > 1e-14 else 1.0
        s = min(T, s_free, s_cap)
        tau = T - s
        if s <= 0:
            switches, cs = (), (0.0,)
        elif tau <= 0:
            switches, cs = (), (1.0,)
        else:
            switches, cs = (tau,), (0.0, 1.0)
        payoff = _window_payoff(k0 * math.exp(g * tau), tau, T, g, rho)
    else:
        s = min(T, s_cap)
        if s <= 0:
            switches, cs = (), (0.0,)
        elif s >= T:
            switches, cs = (), (1.0,)
        else:
            switches, cs = (s,), (1.0, 0.0)
        payoff = _window_payoff(k0, 0.0, s, g, rho)
    terminal = bound * math.exp(-s)
    return BangBangSolution(switches, cs, payoff, True, terminal, bound, agg)


# ---------------------------------------------------------------------------
# dynamic programming oracle


def _dp_sweep(agg, nu, n, levels):
    dt = agg.T / n
    t = np.arange(n) * dt
    growth = np.exp((agg.g - levels) * dt)
    v = nu
    policy = np.empty(n, dtype=int)
    for j in range(n - 1, -1, -1):
        cand = levels * math.exp(-agg.rho * t[j]) * dt + v * growth
        idx = int(np.argmax(cand))
        policy[j] = idx
        v = cand[idx]
    c = levels[policy]
    K = agg.K_M0 * np.concatenate(([1.0], np.cumprod(growth[policy])))
    payoff = float(np.sum(c * K[:-1] * np.exp(-agg.rho * t)) * dt)
    return payoff, c, K[-1]


def dp_oracle(agg: AggregateSpec, nt_fine: int = 2000, n_levels: int = 21):
    """Backward recursion for the aggregate problem on a uniform time grid.

    The value is linear in capital, so only the scalar coefficient is
    propagated.  The terminal constraint is handled by bisection on its
    multiplier.  Returns ``(payoff, control_path)``; an infeasible level gives
    ``-inf`` and the zero control.
    """
    if nt_fine < 100:
        raise ValueError("nt_fine must be at least 100")
    levels = np.linspace(0.0, 1.0, n_levels)
    if agg.epsilon_level > agg.capital_bound:
        return -math.inf, np.zeros(nt_fine)
    payoff, c, kT = _dp_sweep(agg, 0.0, nt_fine, levels)
    if kT >= agg.epsilon_level:
        return payoff, c
    lo, hi = 0.0, 1.0
    while _dp_sweep(agg, hi, nt_fine, levels)[2] < agg.epsilon_level:
        hi *= 2.0
        if hi > 1e12:
            break
    best = _dp_sweep(agg, hi, nt_fine, levels)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        out = _dp_sweep(agg, mid, nt_fine, levels)
        if out[2] >= agg.epsilon_level:
            hi, best = mid, out
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return best[0], best[1]
