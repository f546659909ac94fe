"""Finite-difference capital dynamics on a 1D interval.

The state equation is

    K_t = (d(x) K_x)_x + A K**alpha - delta_K K - C,    d K_x = 0 on the boundary,

discretized with a conservative three-point stencil in space and one-step
Euler in time.  Step ``j -> j+1`` uses consumption row ``j+1``; row 0 of a
recovered consumption field repeats row 1 so that ``simulate_capital`` and
``consumption_from_capital`` are exact discrete inverses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_banded

from .model import CriterionPair, DiffusionProfile, Field, Grids, ModelSpec, \
    integrate_space, integrate_spacetime_discounted

OVERFLOW_GUARD = 1e12


class InstabilityError(RuntimeError):
    pass


class SingularLinearizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    stepper: str = "implicit_euler"
    tol: float = 1e-12
    max_iter: int = 50

    def __post_init__(self):
        if self.stepper not in ("implicit_euler", "explicit_euler"):
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    @property
    def implicit(self) -> bool:
        return self.stepper == "implicit_euler"


DEFAULT_SCHEME = SchemeConfig()


class Stencil(NamedTuple):
    """Tridiagonal diffusion operator: ``(L u)_i = lo_i u_{i-1} + di_i u_i + up_i u_{i+1}``."""

    lo: np.ndarray
    di: np.ndarray
    up: np.ndarray

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Apply along the last axis (works on rows or whole fields)."""
        out = self.di * u
        out[..., 1:] += self.lo[1:] * u[..., :-1]
        out[..., :-1] += self.up[:-1] * u[..., 1:]
        return out

    def apply_transpose(self, u: np.ndarray) -> np.ndarray:
        out = self.di * u
        out[..., :-1] += self.lo[1:] * u[..., 1:]
        out[..., 1:] += self.up[:-1] * u[..., :-1]
        return out

    def shifted_bands(self, scale: float, shift) -> np.ndarray:
        """Banded storage of ``shift*I - scale*L`` for :func:`scipy.linalg.solve_banded`."""
        n = self.di.size
        ab = np.zeros((3, n))
        ab[0, 1:] = -scale * self.up[:-1]
        ab[1] = shift - scale * self.di
        ab[2, :-1] = -scale * self.lo[1:]
        return ab


def diffusion_stencil(diffusivity: DiffusionProfile, grids: Grids) -> Stencil:
    x = grids.x
    dx2 = grids.dx**2
    half = diffusivity(0.5 * (x[1:] + x[:-1])) / dx2
    n = grids.nx
    lo = np.zeros(n)
    up = np.zeros(n)
    lo[1:-1] = half[:-1]
    up[1:-1] = half[1:]
    # zero-flux ghost nodes mirror the first interior neighbour
    up[0] = 2.0 * half[0]
    lo[-1] = 2.0 * half[-1]
    di = -(lo + up)
    return Stencil(lo, di, up)


def diffusion_apply(row, diffusivity: DiffusionProfile, grids: Grids) -> np.ndarray:
    """Conservative approximation of ``(d u_x)_x`` with homogeneous Neumann ends."""
    row = np.asarray(row, dtype=float)
    if row.shape[-1] != grids.nx:
        raise ValueError(f"row length {row.shape[-1]} does not match nx={grids.nx}")
    return diffusion_stencil(diffusivity, grids).apply(row)


def _transpose_bands(ab: np.ndarray) -> np.ndarray:
    out = np.zeros_like(ab)
    out[0, 1:] = ab[2, :-1]
    out[1] = ab[1]
    out[2, :-1] = ab[0, 1:]
    return out


def step_matrix(stencil: Stencil, dt: float, slope) -> np.ndarray:
    """Banded ``I - dt (L + diag(slope))``."""
    ab = stencil.shifted_bands(dt, 1.0)
    ab[1] -= dt * slope
    return ab


# ---------------------------------------------------------------------------
# forward simulation


def simulate_values(consumption: np.ndarray, spec: ModelSpec, grids: Grids,
                    scheme: SchemeConfig = DEFAULT_SCHEME, clamp: bool = True,
                    stencil: Stencil | None = None):
    """Array-level forward solve.  Returns ``(K, diagnostics)``."""
    cons = np.asarray(consumption, dtype=float)
    if cons.shape != grids.shape:
        raise ValueError(f"consumption shape {cons.shape} does not match grids {grids.shape}")
    st = stencil or diffusion_stencil(spec.diffusivity, grids)
    dt = grids.dt
    K = np.empty(grids.shape)
    K[0] = spec.initial_capital(grids.x)
    clamped = 0
    clamp_mag = 0.0
    linear = spec.alpha == 1.0
    if scheme.implicit and linear:
        ab = step_matrix(st, dt, spec.A - spec.delta_K)
    for j in range(grids.nt):
        prev = K[j]
        if not scheme.implicit:
            new = prev + dt * (st.apply(prev) + spec.reaction(prev) - cons[j + 1])
        elif linear:
            new = solve_banded((1, 1), ab, prev - dt * cons[j + 1])
        else:
            new = _newton_step(prev, cons[j + 1], spec, st, dt, scheme)
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > OVERFLOW_GUARD:
            bound = grids.explicit_dt_bound(spec.diffusivity)
            raise InstabilityError(
                f"capital overflow at step {j + 1}: dt={dt:.3g} vs stability bound "
                f"dx^2/(2 max d)={bound:.3g} ({scheme.stepper})")
        if clamp:
            neg = new < 0
            if neg.any():
                clamped += int(neg.sum())
                clamp_mag = max(clamp_mag, float(-new[neg].min()))
                new = np.where(neg, 0.0, new)
        K[j + 1] = new
    return K, {"clamped_nodes": clamped, "clamp_magnitude": clamp_mag}


def _newton_step(prev, cons, spec, st, dt, scheme):
    k = np.maximum(prev, 0.0).copy()
    rhs = prev - dt * cons
    for _ in range(scheme.max_iter):
        resid = k - dt * (st.apply(k) + spec.reaction(k)) - rhs
        ab = step_matrix(st, dt, spec.reaction_slope(np.maximum(k, 1e-12)))
        dk = solve_banded((1, 1), ab, resid)
        k = k - dk
        if np.max(np.abs(dk)) <= scheme.tol * (1.0 + np.max(np.abs(k))):
            break
    return k


def simulate_capital(consumption: Field, spec: ModelSpec, grids: Grids,
                     scheme: SchemeConfig = DEFAULT_SCHEME) -> Field:
    """Integrate the capital equation forward from ``K0`` under ``consumption``.

    Negative capital produced by a step is clamped to zero; the number of
    clamped nodes and the largest clamp are reported in ``diagnostics``.

    Raises:
        InstabilityError: capital exceeded the overflow guard.
    """
    cons = consumption.values if isinstance(consumption, Field) else consumption
    K, diag = simulate_values(cons, spec, grids, scheme, clamp=True)
    return Field(grids, K, "capital", diag)


# ---------------------------------------------------------------------------
# consumption recovery and criteria


def recover_values(K: np.ndarray, spec: ModelSpec, grids: Grids,
                   scheme: SchemeConfig = DEFAULT_SCHEME,
                   stencil: Stencil | None = None) -> np.ndarray:
    """Unclipped consumption implied by ``K`` (row 0 copies row 1)."""
    st = stencil or diffusion_stencil(spec.diffusivity, grids)
    C = np.empty(grids.shape)
    src = K[1:] if scheme.implicit else K[:-1]
    C[1:] = -(K[1:] - K[:-1]) / grids.dt + st.apply(src) + spec.reaction(src)
    C[0] = C[1]
    return C


def recover_tangent(h: np.ndarray, K: np.ndarray, spec: ModelSpec, grids: Grids,
                    scheme: SchemeConfig = DEFAULT_SCHEME,
                    stencil: Stencil | None = None) -> np.ndarray:
    """First variation of :func:`recover_values` at ``K`` along ``h``."""
    st = stencil or diffusion_stencil(spec.diffusivity, grids)
    out = np.empty(grids.shape)
    sl = slice(1, None) if scheme.implicit else slice(None, -1)
    out[1:] = (-(h[1:] - h[:-1]) / grids.dt + st.apply(h[sl])
               + spec.reaction_slope(K[sl]) * h[sl])
    out[0] = out[1]
    return out


def consumption_from_capital(capital: Field, spec: ModelSpec, grids: Grids,
                             scheme: SchemeConfig = DEFAULT_SCHEME) -> Field:
    """Consumption implied by a capital trajectory, clipped at zero.

    ``diagnostics`` carries the number of clipped nodes and the largest clip.
    """
    K = capital.values if isinstance(capital, Field) else np.asarray(capital, float)
    C = recover_values(K, spec, grids, scheme)
    neg = C < 0
    diag = {"clipped_nodes": int(neg.sum()),
            "clip_magnitude": float(-C[neg].min()) if neg.any() else 0.0}
    return Field(grids, np.where(neg, 0.0, C), "consumption", diag)


def criteria_values(K: np.ndarray, C: np.ndarray, spec: ModelSpec, grids: Grids) -> CriterionPair:
    j1 = integrate_spacetime_discounted(spec.utility.value(C), spec.rho, grids)
    j2 = integrate_space(K[-1], grids)
    return CriterionPair(j1, j2)


def evaluate_criteria(capital: Field, consumption: Field, spec: ModelSpec) -> CriterionPair:
    """Discounted utility ``J1`` and terminal aggregate capital ``J2``."""
    if capital.grids != consumption.grids:
        raise ValueError("capital and consumption live on different grids")
    return criteria_values(capital.values, consumption.values, spec, capital.grids)


# ---------------------------------------------------------------------------
# adjoint


def solve_adjoint(capital: Field, theta: float, spec: ModelSpec, grids: Grids,
                  scheme: SchemeConfig = DEFAULT_SCHEME) -> Field:
    """Backward costate equation with ``lambda(x, T) = theta`` and zero flux.

    Uses the current-value costate ``lambda_t = rho lambda - (d lambda_x)_x -
    lambda (alpha A K**(alpha-1) - delta_K)``.

    Raises:
        SingularLinearizationError: ``alpha < 1`` with zero capital at a node.
    """
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    K = capital.values if isinstance(capital, Field) else np.asarray(capital, float)
    if spec.alpha < 1.0:
        zero = np.argwhere(K <= 0)
        if zero.size:
            j, i = zero[0]
            raise SingularLinearizationError(
                f"capital vanishes at time node {j}, space node {i} (x={grids.x[i]:.4g}); "
                f"K**(alpha-1) is singular")
    st = diffusion_stencil(spec.diffusivity, grids)
    dt = grids.dt
    lam = np.empty(grids.shape)
    lam[-1] = theta
    for j in range(grids.nt - 1, -1, -1):
        slope = spec.reaction_slope(K[j])
        if scheme.implicit:
            ab = st.shifted_bands(dt, 1.0 + dt * spec.rho)
            ab[1] -= dt * slope
            lam[j] = solve_banded((1, 1), ab, lam[j + 1])
        else:
            nxt = lam[j + 1]
            lam[j] = nxt - dt * (spec.rho * nxt - st.apply(nxt) - slope * nxt)
    return Field(grids, lam, "adjoint", {"theta": float(theta)})


def _boundary_flux(u: np.ndarray, d_lo: float, d_hi: float, dx: float) -> float:
    left = d_lo * (-3 * u[:, 0] + 4 * u[:, 1] - u[:, 2]) / (2 * dx)
    right = d_hi * (3 * u[:, -1] - 4 * u[:, -2] + u[:, -3]) / (2 * dx)
    return float(max(np.max(np.abs(left)), np.max(np.abs(right))))


def hamiltonian_residuals(capital: Field, consumption: Field, adjoint: Field,
                          spec: ModelSpec, theta: float | None = None,
                          scheme: SchemeConfig = DEFAULT_SCHEME) -> dict[str, float]:
    """Sup-norm residuals of the optimality system on the lattice."""
    grids = capital.grids
    K, C, lam = capital.values, consumption.values, adjoint.values
    if theta is None:
        theta = adjoint.diagnostics.get("theta", 0.0)
    st = diffusion_stencil(spec.diffusivity, grids)
    dt = grids.dt
    src = K[1:] if scheme.implicit else K[:-1]
    state = (K[1:] - K[:-1]) / dt - st.apply(src) - spec.reaction(src) + C[1:]
    lsrc = lam[:-1] if scheme.implicit else lam[1:]
    costate = ((lam[1:] - lam[:-1]) / dt
               - (spec.rho * lsrc - st.apply(lsrc) - spec.reaction_slope(K[:-1]) * lsrc))
    stationarity = spec.utility.marginal(C) - lam
    d_lo, d_hi = spec.diffusivity(np.array([grids.x_lo, grids.x_hi]))
    flux = max(_boundary_flux(K, d_lo, d_hi, grids.dx), _boundary_flux(lam, d_lo, d_hi, grids.dx))
    return {
        "state": float(np.max(np.abs(state))),
        "adjoint": float(np.max(np.abs(costate))),
        "stationarity": float(np.max(np.abs(stationarity))),
        "boundary_flux": flux,
        "terminal": float(np.max(np.abs(lam[-1] - theta))),
    }


def constant_consumption(grids: Grids, level) -> Field:
    """Consumption field equal to ``level`` (scalar or per-node row) at every time."""
    row = np.broadcast_to(np.asarray(level, dtype=float), (grids.nx,))
    return Field(grids, np.tile(row, (grids.nt + 1, 1)), "consumption")

