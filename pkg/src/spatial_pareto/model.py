"""Problem data, grids, lattice fields and quadrature.

Everything downstream consumes a validated :class:`ModelSpec` together with a
:class:`Grids` instance.  Fields are stored as ``(nt + 1, nx)`` arrays, one row
per time node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Sequence

import numpy as np


class SpecError(ValueError):
    """Raised when a model specification violates one of its invariants."""


# ---------------------------------------------------------------------------
# parametric pieces


@dataclass(frozen=True)
class UtilitySpec:
    """Instantaneous utility ``U(C)``.

    ``power_shifted`` is ``(1 + C)**gamma - 1`` and ``linear`` is ``C``; both
    vanish at ``C = 0``.
    """

    kind: str = "power_shifted"
    gamma: float = 2.0 / 3.0

    def value(self, c):
        c = np.asarray(c, dtype=float)
        if self.kind == "linear":
            return c.copy()
        return (1.0 + c) ** self.gamma - 1.0

    def marginal(self, c):
        c = np.asarray(c, dtype=float)
        if self.kind == "linear":
            return np.ones_like(c)
        return self.gamma * (1.0 + c) ** (self.gamma - 1.0)

    def inverse_marginal(self, m):
        """Consumption level at which ``U'(C) = m``.

        Only defined for ``power_shifted``; the linear family has constant
        marginal utility.
        """
        if self.kind == "linear":
            raise SpecError("linear utility has no invertible marginal")
        m = np.asarray(m, dtype=float)
        return (m / self.gamma) ** (1.0 / (self.gamma - 1.0)) - 1.0


@dataclass(frozen=True)
class DiffusionProfile:
    """Spatial diffusivity ``d(x)``.

    Kinds: ``constant`` (``d0``), ``quadratic`` (``a - b x**2``) and
    ``tabulated`` (piecewise-linear through ``xs``/``values``).
    """

    kind: str = "quadratic"
    a: float = 1.0
    b: float = 0.5
    d0: float = 1.0
    xs: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.d0)
        if self.kind == "quadratic":
            return self.a - self.b * x**2
        if self.kind == "tabulated":
            return np.interp(x, self.xs, self.values)
        raise SpecError(f"unknown diffusivity kind {self.kind!r}")


@dataclass(frozen=True)
class InitialCapital:
    """Initial capital ``K0(x)``: ``constant`` (``k``), ``affine``
    (``a + b x``) or ``tabulated``."""

    kind: str = "affine"
    a: float = 1.0
    b: float = 1.0
    k: float = 1.0
    xs: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.k)
        if self.kind == "affine":
            return self.a + self.b * x
        if self.kind == "tabulated":
            return np.interp(x, self.xs, self.values)
        raise SpecError(f"unknown initial capital kind {self.kind!r}")


@dataclass(frozen=True)
class ModelSpec:
    A: float = 1.0
    alpha: float = 1.0
    delta_K: float = 0.01
    rho: float = 0.03
    T: float = 1.0
    omega: tuple[float, float] = (0.0, 1.0)
    diffusivity: DiffusionProfile = field(default_factory=DiffusionProfile)
    initial_capital: InitialCapital = field(default_factory=InitialCapital)
    utility: UtilitySpec = field(default_factory=UtilitySpec)

    @property
    def length(self) -> float:
        return self.omega[1] - self.omega[0]

    def production(self, k):
        k = np.maximum(np.asarray(k, dtype=float), 0.0)
        return self.A * k**self.alpha

    def reaction(self, k):
        """Net production ``A K**alpha - delta_K K``."""
        k = np.asarray(k, dtype=float)
        return self.production(k) - self.delta_K * k

    def reaction_slope(self, k):
        """Derivative of :meth:`reaction` with respect to capital."""
        k = np.asarray(k, dtype=float)
        if self.alpha == 1.0:
            return np.full_like(k, self.A - self.delta_K)
        return self.alpha * self.A * np.maximum(k, 1e-300) ** (self.alpha - 1.0) - self.delta_K

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        def pack(obj):
            out = {}
            for f in fields(obj):
                v = getattr(obj, f.name)
                out[f.name] = list(v) if isinstance(v, tuple) else v
            return out

        return {
            "A": self.A,
            "alpha": self.alpha,
            "delta_K": self.delta_K,
            "rho": self.rho,
            "T": self.T,
            "omega": list(self.omega),
            "diffusivity": pack(self.diffusivity),
            "initial_capital": pack(self.initial_capital),
            "utility": pack(self.utility),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelSpec":
        def unpack(kind, raw):
            raw = dict(raw)
            for key in ("xs", "values"):
                if key in raw:
                    raw[key] = tuple(float(v) for v in raw[key])
            return kind(**raw)

        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise SpecError(f"unknown ModelSpec fields: {sorted(extra)}")
        return cls(
            A=float(data["A"]),
            alpha=float(data["alpha"]),
            delta_K=float(data["delta_K"]),
            rho=float(data["rho"]),
            T=float(data["T"]),
            omega=tuple(float(v) for v in data["omega"]),
            diffusivity=unpack(DiffusionProfile, data["diffusivity"]),
            initial_capital=unpack(InitialCapital, data["initial_capital"]),
            utility=unpack(UtilitySpec, data["utility"]),
        )


def validate_spec(spec: ModelSpec, grids: "Grids | None" = None) -> ModelSpec:
    """Return ``spec`` unchanged if every invariant holds.

    Pointwise conditions on ``d(x)`` and ``K0(x)`` are checked at the nodes of
    ``grids`` when given, otherwise on a 1001-point sampling of the domain.

    Raises:
        SpecError: naming the first violated invariant.
    """
    if not (math.isfinite(spec.rho) and spec.rho > 0):
        raise SpecError("rho must be positive")
    if not (math.isfinite(spec.T) and spec.T > 0):
        raise SpecError("T must be positive")
    lo, hi = spec.omega
    if not hi > lo:
        raise SpecError("omega must satisfy x_hi > x_lo")
    if not 0 < spec.alpha <= 1:
        raise SpecError("alpha must lie in (0, 1]")
    if not spec.A > 0:
        raise SpecError("A must be positive")
    if not spec.delta_K >= 0:
        raise SpecError("delta_K must be nonnegative")
    u = spec.utility
    if u.kind not in ("power_shifted", "linear"):
        raise SpecError(f"unknown utility kind {u.kind!r}")
    if u.kind == "power_shifted" and not 0 < u.gamma < 1:
        raise SpecError("utility gamma must lie in (0, 1)")

    xs = grids.x if grids is not None else np.linspace(lo, hi, 1001)
    d = spec.diffusivity(xs)
    bad = np.flatnonzero(~(d >= 0))
    if bad.size:
        raise SpecError(f"diffusivity negative at x≈{xs[bad[0]]:.3g}")
    if grids is not None:
        mids = 0.5 * (xs[1:] + xs[:-1])
        dm = spec.diffusivity(mids)
        bad = np.flatnonzero(~(dm >= 0))
        if bad.size:
            raise SpecError(f"diffusivity negative at x≈{mids[bad[0]]:.3g}")
    k0 = spec.initial_capital(xs)
    bad = np.flatnonzero(~(k0 >= 0))
    if bad.size:
        raise SpecError(f"initial capital negative at x≈{xs[bad[0]]:.3g}")
    return spec


# ---------------------------------------------------------------------------
# grids and fields


@dataclass(frozen=True, eq=False)
class Grids:
    nx: int
    nt: int
    x_lo: float
    x_hi: float
    T: float

    def __post_init__(self):
        if self.nx < 3:
            raise SpecError("nx must be at least 3")
        if self.nt < 2:
            raise SpecError("nt must be at least 2")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nt + 1, self.nx)

    def space_weights(self) -> np.ndarray:
        w = np.full(self.nx, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def time_weights(self) -> np.ndarray:
        w = np.full(self.nt + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def explicit_dt_bound(self, diffusivity: DiffusionProfile) -> float:
        """Largest stable explicit step ``dx**2 / (2 max d)``."""
        dmax = float(np.max(diffusivity(self.x)))
        return math.inf if dmax <= 0 else self.dx**2 / (2.0 * dmax)

    def __eq__(self, other):
        if not isinstance(other, Grids):
            return NotImplemented
        return (self.nx, self.nt, self.x_lo, self.x_hi, self.T) == (
            other.nx, other.nt, other.x_lo, other.x_hi, other.T)

    def __hash__(self):
        return hash((self.nx, self.nt, self.x_lo, self.x_hi, self.T))


def make_grids(spec: ModelSpec, nx: int = 101, nt: int = 200) -> Grids:
    return Grids(nx=nx, nt=nt, x_lo=spec.omega[0], x_hi=spec.omega[1], T=spec.T)


ROLES = ("capital", "consumption", "adjoint", "direction")


@dataclass(frozen=True, eq=False)
class Field:
    """Values on the space-time lattice, one row per time node."""

    grids: Grids
    values: np.ndarray
    role: str
    diagnostics: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grids.shape:
            raise ValueError(f"field shape {vals.shape} does not match grids {self.grids.shape}")
        if self.role not in ROLES:
            raise ValueError(f"unknown field role {self.role!r}")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{self.role} field has non-finite values")
        if self.role in ("capital", "consumption") and np.any(vals < 0):
            raise ValueError(f"{self.role} field must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def at_time(self, j: int) -> np.ndarray:
        return self.values[j]

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]


@dataclass(frozen=True)
class CriterionPair:
    j1: float
    j2: float

    def __iter__(self):
        yield self.j1
        yield self.j2

    def dominates(self, other: "CriterionPair") -> bool:
        return (self.j1 >= other.j1 and self.j2 >= other.j2
                and (self.j1 > other.j1 or self.j2 > other.j2))


# ---------------------------------------------------------------------------
# quadrature


def integrate_space(row: Sequence[float], grids: Grids) -> float:
    """Trapezoid approximation of the integral of ``row`` over the domain."""
    row = np.asarray(row, dtype=float)
    if row.shape != (grids.nx,):
        raise ValueError(f"row length {row.shape} does not match nx={grids.nx}")
    return float(grids.space_weights() @ row)


def discounted_time_weights(rho: float, grids: Grids) -> np.ndarray:
    return grids.time_weights() * np.exp(-rho * grids.t)


def integrate_spacetime_discounted(values, rho: float, grids: Grids) -> float:
    """Trapezoid-in-space, trapezoid-in-time integral of ``values * exp(-rho t)``.

    ``values`` may be a :class:`Field` or a raw ``(nt + 1, nx)`` array.
    """
    vals = values.values if isinstance(values, Field) else np.asarray(values, dtype=float)
    if vals.shape != grids.shape:
        raise ValueError(f"field shape {vals.shape} does not match grids {grids.shape}")
    return float(discounted_time_weights(rho, grids) @ vals @ grids.space_weights())


def with_rho(spec: ModelSpec, rho: float) -> ModelSpec:
    return replace(spec, rho=rho)
