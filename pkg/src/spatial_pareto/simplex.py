"""Dense two-phase simplex with Bland's rule.

Instances are small, so everything is done on a full tableau.  The general
form accepted by :func:`solve_lp` is

    min c.x   s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub

with infinite bounds allowed.  It is rewritten as ``x = offset + M y`` with
``y >= 0`` and slack columns before pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass
class LpInstance:
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    names: list[str] | None = None
    eq_names: list[str] | None = None
    ub_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "equality")
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "inequality")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bound vectors must match the number of variables")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")
        self.names = list(self.names) if self.names else [f"x{j}" for j in range(n)]
        if len(self.names) != n:
            raise ValueError("names must match the number of variables")
        self.eq_names = list(self.eq_names) if self.eq_names else [f"eq{i}" for i in range(self.n_eq)]
        self.ub_names = list(self.ub_names) if self.ub_names else [f"ub{i}" for i in range(self.n_ub)]

    @property
    def n(self):
        return self.c.size

    @property
    def n_eq(self):
        return self.b_eq.size

    @property
    def n_ub(self):
        return self.b_ub.size

    def index(self, name):
        return self.names.index(name)

    def residuals(self, x):
        """Largest equality residual and largest inequality or bound violation."""
        x = np.asarray(x, dtype=float)
        eq = np.max(np.abs(self.A_eq @ x - self.b_eq)) if self.n_eq else 0.0
        viol = [0.0]
        if self.n_ub:
            viol.append(np.max(self.A_ub @ x - self.b_ub))
        viol.append(np.max(self.lb - x))
        viol.append(np.max(x - self.ub))
        return float(eq), float(max(viol))

    def dump(self) -> str:
        """Fixed-width text form: objective row, constraint rows, bounds."""
        w = 12
        head = f"{'ROW':<10}{'SENSE':<6}" + "".join(f"{nm[:w - 1]:>{w}}" for nm in self.names) \
            + f"{'RHS':>{w}}"
        lines = [f"LP n={self.n} eq={self.n_eq} ub={self.n_ub}", head]

        def fmt(v):
            return f"{v:>{w}.6g}"

        lines.append(f"{'OBJ':<10}{'min':<6}" + "".join(fmt(v) for v in self.c) + " " * w)
        for nm, row, rhs in zip(self.eq_names, self.A_eq, self.b_eq):
            lines.append(f"{nm[:9]:<10}{'=':<6}" + "".join(fmt(v) for v in row) + fmt(rhs))
        for nm, row, rhs in zip(self.ub_names, self.A_ub, self.b_ub):
            lines.append(f"{nm[:9]:<10}{'<=':<6}" + "".join(fmt(v) for v in row) + fmt(rhs))
        lines.append(f"{'LB':<10}{'':<6}" + "".join(fmt(v) for v in self.lb) + " " * w)
        lines.append(f"{'UB':<10}{'':<6}" + "".join(fmt(v) for v in self.ub) + " " * w)
        return "\n".join(lines) + "\n"


def _rows(A, b, n, what):
    if A is None or (np.size(A) == 0 and (b is None or np.size(b) == 0)):
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape != (b.size, n):
        raise ValueError(f"{what} matrix has shape {A.shape}, expected ({b.size}, {n})")
    return A, b


@dataclass
class LpSolution:
    x: np.ndarray | None
    objective: float
    status: str
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _standardize(lp: LpInstance):
    """Map to ``min cs.y, As y = bs, y >= 0``; return the affine map back to ``x``."""
    n = lp.n
    offset = np.zeros(n)
    cols = []
    extra_ub = []
    for j in range(n):
        lo, hi = lp.lb[j], lp.ub[j]
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo) and lo == hi:
            offset[j] = lo
        elif np.isfinite(lo):
            offset[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                extra_ub.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    M = np.array(cols).T if cols else np.zeros((n, 0))
    ny = M.shape[1]

    A_ub = lp.A_ub @ M
    b_ub = lp.b_ub - lp.A_ub @ offset
    if extra_ub:
        rows = np.zeros((len(extra_ub), ny))
        for r, (k, cap) in enumerate(extra_ub):
            rows[r, k] = 1.0
        A_ub = np.vstack([A_ub, rows])
        b_ub = np.concatenate([b_ub, [cap for _, cap in extra_ub]])
    A_eq = lp.A_eq @ M
    b_eq = lp.b_eq - lp.A_eq @ offset

    m_ub = b_ub.size
    As = np.vstack([np.hstack([A_eq, np.zeros((A_eq.shape[0], m_ub))]),
                    np.hstack([A_ub, np.eye(m_ub)])])
    bs = np.concatenate([b_eq, b_ub])
    cs = np.concatenate([M.T @ lp.c, np.zeros(m_ub)])
    return As, bs, cs, M, offset, float(lp.c @ offset)


def _pivot(T, i, j):
    T[i] /= T[i, j]
    col = T[:, j].copy()
    col[i] = 0.0
    T -= np.outer(col, T[i])


def _bland(T, basis, allowed, tol, max_iter):
    """Iterate to optimality on tableau ``T`` (last row reduced costs, last column rhs)."""
    m = T.shape[0] - 1
    it = 0
    while it < max_iter:
        r = T[-1, :-1]
        enter = np.flatnonzero(allowed & (r < -tol))
        if enter.size == 0:
            return OPTIMAL, it
        j = int(enter[0])
        col = T[:m, j]
        pos = np.flatnonzero(col > tol)
        if pos.size == 0:
            return UNBOUNDED, it
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol * max(1.0, abs(best))]
        i = int(min(ties, key=lambda k: basis[k]))
        _pivot(T, i, j)
        basis[i] = j
        it += 1
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(lp: LpInstance, tol: float = 1e-9, max_iter: int = 100000) -> LpSolution:
    """Solve ``lp`` by the two-phase simplex method with Bland's anti-cycling rule."""
    As, bs, cs, M, offset, c0 = _standardize(lp)
    m, ny = As.shape
    neg = bs < 0
    As[neg] *= -1.0
    bs[neg] *= -1.0

    # phase 1: one artificial per row
    T = np.zeros((m + 1, ny + m + 1))
    T[:m, :ny] = As
    T[:m, ny:ny + m] = np.eye(m)
    T[:m, -1] = bs
    T[-1, ny:ny + m] = 1.0
    T[-1] -= T[:m].sum(axis=0)
    basis = list(range(ny, ny + m))
    allowed = np.ones(ny + m, dtype=bool)
    _, it1 = _bland(T, basis, allowed, tol, max_iter)
    scale = max(1.0, float(np.max(np.abs(bs))) if m else 1.0)
    if -T[-1, -1] > tol * scale * max(1, m):
        return LpSolution(None, np.nan, INFEASIBLE, it1)

    # drive artificials out of the basis, dropping redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= ny:
            nz = np.flatnonzero(np.abs(T[i, :ny]) > tol)
            if nz.size:
                _pivot(T, i, int(nz[0]))
                basis[i] = int(nz[0])
                keep.append(i)
        else:
            keep.append(i)
    rows = keep + [m]
    T = T[np.ix_(rows, list(range(ny)) + [ny + m])]
    basis = [basis[i] for i in keep]

    # phase 2
    T[-1, :] = 0.0
    T[-1, :ny] = cs
    for i, b in enumerate(basis):
        T[-1] -= cs[b] * T[i]
    status, it2 = _bland(T, basis, np.ones(ny, dtype=bool), tol, max_iter)
    if status == UNBOUNDED:
        return LpSolution(None, -np.inf, UNBOUNDED, it1 + it2)
    y = np.zeros(ny)
    for i, b in enumerate(basis):
        y[b] = T[i, -1]
    y = np.maximum(y, 0.0)
    x = offset + M @ y[:M.shape[1]]
    return LpSolution(x, float(lp.c @ x), OPTIMAL, it1 + it2,
                      {"basis": tuple(basis), "tableau_objective": c0 - T[-1, -1]})
