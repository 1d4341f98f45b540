"""Dense linear programming by two-phase revised simplex.

Problems are stated as

    max  c @ x    s.t.  A @ x >= b,   x free,

which is the natural form for half-space geometry (every row is a
half-space membership requirement).  Internally the problem is converted
to standard equality form with split variables and slacks.  Instances in
this package are tiny (tens of rows), so each iteration refactorizes the
basis; robustness is preferred over speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalBreakdown

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-12
_MAX_ITER = 20000
_BLAND_AFTER = 60  # consecutive degenerate pivots before switching rules


@dataclass(frozen=True)
class LpProblem:
    """max c @ x subject to A @ x >= b (set maximize=False to minimize)."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    maximize: bool = True

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape != (b.size, c.size):
            raise ValueError(f"shape mismatch: A{A.shape}, b({b.size},), c({c.size},)")
        if not (np.isfinite(c).all() and np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("non-finite coefficients in LP data")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class LpSolution:
    """Status-tagged solve result.

    For an `optimal` maximize-form solve, `dual` holds multipliers mu >= 0
    with c + A.T @ mu = 0 and mu_i * (a_i @ x - b_i) = 0; the dual
    objective is -b @ mu.  For `unbounded`, `ray` is an improving
    direction (inf-norm 1) that stays feasible.
    """

    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float | None = None
    dual: np.ndarray | None = None
    ray: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class _Tableau:
    """Equality-form data  min cs @ z, As @ z = bs, z >= 0  with bs >= 0."""

    As: np.ndarray
    bs: np.ndarray
    cs: np.ndarray
    basis: list[int] = field(default_factory=list)


def _simplex_core(t: _Tableau):
    """Run primal simplex on a tableau with a feasible starting basis.

    Returns ("optimal", xB, y) or ("unbounded", entering_col, direction_d).
    """
    As, bs, cs = t.As, t.bs, t.cs
    m = As.shape[0]
    bland = False
    degenerate = 0
    for _ in range(_MAX_ITER):
        B = As[:, t.basis]
        try:
            xB = np.linalg.solve(B, bs)
            y = np.linalg.solve(B.T, cs[t.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular basis in simplex") from exc
        reduced = cs - As.T @ y
        reduced[t.basis] = 0.0
        if bland:
            improving = np.flatnonzero(reduced < -FEAS_TOL)
            if improving.size == 0:
                return "optimal", xB, y
            entering = int(improving[0])
        else:
            entering = int(np.argmin(reduced))
            if reduced[entering] >= -FEAS_TOL:
                return "optimal", xB, y
        d = np.linalg.solve(B, As[:, entering])
        positive = d > PIVOT_TOL
        if not positive.any():
            return "unbounded", entering, d
        ratios = np.full(m, np.inf)
        ratios[positive] = np.maximum(xB[positive], 0.0) / d[positive]
        best = ratios.min()
        # smallest basis index among tied rows: anti-cycling tie-break
        tied = np.flatnonzero(ratios <= best + 1e-12)
        leaving = int(min(tied, key=lambda r: t.basis[r]))
        if abs(d[leaving]) < PIVOT_TOL:
            if not bland:
                bland = True
                continue
            raise NumericalBreakdown("pivot below tolerance under Bland's rule")
        if best <= FEAS_TOL:
            degenerate += 1
            if degenerate > _BLAND_AFTER:
                bland = True
        else:
            degenerate = 0
        t.basis[leaving] = entering
    raise NumericalBreakdown("simplex iteration limit reached")


def lp_solve(p: LpProblem) -> LpSolution:
    """Solve a dense LP; see LpProblem/LpSolution for conventions."""
    c = p.c if p.maximize else -p.c
    A, b = p.A, p.b
    m, n = A.shape

    # standard form: x = xp - xq, slack s per row:  A xp - A xq - s = b
    As = np.hstack([A, -A, -np.eye(m)])
    cs = np.concatenate([-c, c, np.zeros(m)])  # internal minimization
    flip = np.where(b < 0, -1.0, 1.0)
    As = As * flip[:, None]
    bs = b * flip
    ncols = As.shape[1]

    # phase 1: artificials with identity columns
    A1 = np.hstack([As, np.eye(m)])
    c1 = np.concatenate([np.zeros(ncols), np.ones(m)])
    t = _Tableau(A1, bs, c1, basis=list(range(ncols, ncols + m)))
    status, xB, _ = _simplex_core(t)
    assert status == "optimal"  # phase 1 is always bounded below by 0
    art_value = float(sum(xB[i] for i, j in enumerate(t.basis) if j >= ncols))
    if art_value > 1e-7:
        return LpSolution(status="infeasible")

    # drive leftover (degenerate) artificials out of the basis
    keep_rows = list(range(m))
    for row in range(m):
        if t.basis[row] < ncols:
            continue
        B = A1[np.ix_(keep_rows, [t.basis[r] for r in keep_rows])]
        tab_row = np.linalg.solve(B, A1[keep_rows][:, :ncols])[keep_rows.index(row)]
        candidates = np.flatnonzero(np.abs(tab_row) > 1e-9)
        candidates = [j for j in candidates if j not in t.basis]
        if candidates:
            t.basis[row] = int(candidates[0])
        else:
            keep_rows.remove(row)  # redundant row
    if len(keep_rows) < m:
        As = As[keep_rows]
        bs = bs[keep_rows]
        flip_kept = flip[keep_rows]
        t.basis = [t.basis[r] for r in keep_rows]
    else:
        flip_kept = flip

    # phase 2
    t2 = _Tableau(As, bs, cs, basis=t.basis)
    status, xB, y = _simplex_core(t2)

    if status == "unbounded":
        entering, d = xB, y
        dz = np.zeros(ncols)
        dz[entering] = 1.0
        for i, j in enumerate(t2.basis):
            dz[j] = -d[i]
        ray = dz[:n] - dz[n:2 * n]
        ray /= np.abs(ray).max()
        return LpSolution(status="unbounded", ray=ray)

    z = np.zeros(ncols)
    for i, j in enumerate(t2.basis):
        z[j] = xB[i]
    x = z[:n] - z[n:2 * n]
    mu = np.zeros(m)
    mu[keep_rows if len(keep_rows) < m else slice(None)] = flip_kept * y
    objective = float(c @ x)
    if not p.maximize:
        objective, mu = -objective, -mu
    return LpSolution(status="optimal", x=x, objective=objective, dual=mu)


def lp_feasible_point(A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Return some x with A @ x >= b, or None if the polyhedron is empty."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sol = lp_solve(LpProblem(c=np.zeros(A.shape[1]), A=A, b=b))
    return sol.x if sol.optimal else None
