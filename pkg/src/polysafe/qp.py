"""Strictly convex dense QP solver and the safeguarding controller.

The controller minimally modifies a nominal command subject to one
barrier-derivative row per (term, extended index) pair, with the
class-K slope alpha and the max-min coupling weight M as additional
decision variables bounded below by c_alpha and c_M.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cbf import ExtendedCbf, eval_B
from .errors import Infeasible, NotPositiveDefinite, NumericalBreakdown
from .inputs import Unbounded
from .lp import LpProblem, lp_solve

_OPT_TOL = 1e-9
_MAX_ITER = 200


@dataclass(frozen=True)
class QpProblem:
    """min 0.5 z @ P @ z + c @ z  s.t.  G @ z <= h, with P symmetric PD."""

    P: np.ndarray
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        G = np.asarray(self.G, dtype=float).reshape(-1, c.size)
        h = np.atleast_1d(np.asarray(self.h, dtype=float)).reshape(G.shape[0])
        if np.linalg.norm(P - P.T) > 1e-10:
            raise NotPositiveDefinite("cost matrix is not symmetric")
        try:
            np.linalg.cholesky(P)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite("cost matrix failed Cholesky") from exc
        for name, arr in (("P", P), ("c", c), ("G", G), ("h", h)):
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class QpSolution:
    status: str  # "optimal" | "infeasible"
    z: np.ndarray | None = None
    objective: float | None = None
    active: tuple[int, ...] = ()
    lam: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    farkas: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _feasible_start(G: np.ndarray, h: np.ndarray, hints) -> np.ndarray | None:
    """A point with G z <= h, from hints or a phase-1 LP; None if empty."""
    for z in hints:
        if z is not None and (G @ z <= h + 1e-11).all():
            return np.asarray(z, dtype=float)
    nz = G.shape[1]
    # max t s.t. G z + t <= h, t <= 1  (feasible iff optimal t >= 0)
    A = np.vstack([np.hstack([-G, -np.ones((G.shape[0], 1))]),
                   np.append(np.zeros(nz), -1.0)])
    b = np.concatenate([-h, [-1.0]])
    c = np.append(np.zeros(nz), 1.0)
    sol = lp_solve(LpProblem(c=c, A=A, b=b))
    if not sol.optimal or sol.objective < -1e-10:
        return None
    return sol.x[:nz]


def solve_qp(p: QpProblem, start: np.ndarray | None = None) -> QpSolution:
    """Primal active-set method from a feasible point.

    The working set starts empty at the phase-1 point (or caller hint)
    and rows are added/dropped with lowest-index tie-breaking, which
    makes the solve deterministic.  Strict convexity makes the optimum
    unique.
    """
    P, c, G, h = p.P, p.c, p.G, p.h
    nz = P.shape[0]
    z = _feasible_start(G, h, [start]) if G.size else (
        start if start is not None else np.zeros(nz))
    if G.size and z is None:
        # Farkas-type certificate: y >= 0 with y @ G = 0, y @ h < 0
        A = np.vstack([np.hstack([-G, -np.ones((G.shape[0], 1))]),
                       np.append(np.zeros(nz), -1.0)])
        b = np.concatenate([-h, [-1.0]])
        sol = lp_solve(LpProblem(c=np.append(np.zeros(nz), 1.0), A=A, b=b))
        return QpSolution(status="infeasible",
                          farkas=None if sol.dual is None else sol.dual[:-1])

    work: list[int] = []
    lam_w = np.zeros(0)
    for it in range(_MAX_ITER):
        Gw = G[work] if work else np.zeros((0, nz))
        K = np.block([[P, Gw.T], [Gw, np.zeros((len(work), len(work)))]])
        rhs = np.concatenate([-(P @ z + c), np.zeros(len(work))])
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
        step_p = sol[:nz]
        lam_w = sol[nz:]
        if np.linalg.norm(step_p) <= 1e-11:
            if len(work) == 0 or (lam_w >= -_OPT_TOL).all():
                break
            worst = int(np.argmin(lam_w))
            work.pop(worst)
            continue
        # longest step along p that stays feasible
        alpha = 1.0
        blocker = None
        if G.size:
            gp = G @ step_p
            slack = h - G @ z
            for i in range(G.shape[0]):
                if i in work or gp[i] <= 1e-12:
                    continue
                ratio = max(slack[i], 0.0) / gp[i]
                if ratio < alpha - 1e-12:
                    alpha = ratio
                    blocker = i
                elif blocker is not None and abs(ratio - alpha) <= 1e-12:
                    blocker = min(blocker, i)
        z = z + alpha * step_p
        if blocker is not None:
            cand = G[work + [blocker]]
            if np.linalg.matrix_rank(cand, tol=1e-10) == len(work) + 1:
                work.append(blocker)
        # a full step with no blocker ends on the next stationarity check
    else:
        raise NumericalBreakdown("active-set iteration limit reached")

    lam = np.zeros(G.shape[0])
    for j, i in enumerate(work):
        lam[i] = max(lam_w[j], 0.0) if lam_w.size else 0.0
    grad = P @ z + c + (G.T @ lam if G.size else 0.0)
    primal = float(np.maximum(G @ z - h, 0.0).max()) if G.size else 0.0
    comp = float(np.abs(lam * (G @ z - h)).max()) if G.size else 0.0
    residuals = {
        "stationarity": float(np.linalg.norm(grad, np.inf)),
        "primal": primal,
        "complementarity": comp,
    }
    return QpSolution(status="optimal", z=z,
                      objective=float(0.5 * z @ P @ z + c @ z),
                      active=tuple(sorted(work)), lam=lam,
                      residuals=residuals, iterations=it + 1)


@dataclass(frozen=True)
class QpWeights:
    """Cost weights of the safeguarding program.

    Q may be a matrix, "identity", or a callable of the state; q is an
    optional callable giving the linear input cost when no nominal
    command is supplied.
    """

    q_alpha: float = 1e4
    q_M: float = 1.0
    c_alpha: float = 40.0
    c_M: float = 1.0
    Q: object = "identity"
    q: object = None

    def __post_init__(self):
        for name in ("q_alpha", "q_M", "c_alpha", "c_M"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def Q_at(self, x: np.ndarray, m: int) -> np.ndarray:
        if callable(self.Q):
            return np.atleast_2d(np.asarray(self.Q(x), dtype=float))
        if isinstance(self.Q, str):
            return np.eye(m)
        return np.atleast_2d(np.asarray(self.Q, dtype=float))

    def q_at(self, x: np.ndarray, m: int) -> np.ndarray:
        if self.q is None:
            return np.zeros(m)
        return np.atleast_1d(np.asarray(self.q(x), dtype=float))

    def to_dict(self) -> dict:
        d = {"q_alpha": self.q_alpha, "q_M": self.q_M,
             "c_alpha": self.c_alpha, "c_M": self.c_M}
        d["Q"] = "identity" if isinstance(self.Q, str) else (
            None if callable(self.Q) else np.asarray(self.Q).tolist())
        return d


@dataclass(frozen=True)
class SafeguardResult:
    u_star: np.ndarray
    alpha_star: float
    M_star: float
    margins: np.ndarray  # barrier-row values at the optimizer, one per (term, i)
    row_labels: tuple[tuple[int, int], ...]  # (term, extended index)
    solution: QpSolution | None
    fast_path: bool


class SafeguardAssembler:
    """Reusable row assembly for one (cbf, plant, weights, input set) tuple.

    Precomputes everything state-independent so the per-step work is a
    handful of small matrix products; used directly by the simulator.
    """

    def __init__(self, cbf: ExtendedCbf, plant, weights: QpWeights,
                 input_set=None, feasibility_margin: float = 0.1):
        self.cbf = cbf
        self.plant = plant
        self.weights = weights
        self.input_set = input_set if input_set is not None else Unbounded()
        self.feasibility_margin = feasibility_margin
        self.m = plant.m
        n, r = cbf.n, cbf.r
        labels = []
        a_rows = []          # originating half-space direction per row
        is_velocity = []
        for ell, ids in enumerate(cbf.extended_terms):
            for i in ids:
                labels.append((ell, i))
                base = i if i < r else i - r
                a_rows.append(cbf.spec.halfspaces[base].a)
                is_velocity.append(i >= r)
        self.row_labels = tuple(labels)
        self._a = np.array(a_rows)                  # nrows x n
        self._vel = np.array(is_velocity)
        self._term_of_row = np.array([ell for ell, _ in labels])
        self._Gu_rows, self._hu = self.input_set.rows(self.m)
        self._warm = None

    def _barrier_rows(self, x: np.ndarray):
        """(coef over z = (u, alpha, M), const) with row meaning coef@z + const >= 0."""
        cbf, n, r = self.cbf, self.cbf.n, self.cbf.r
        x1, x2 = x[:n], x[n:]
        act = eval_B(cbf, x)
        B = act.value
        # B_i at every extended row, via per-term stacked evaluation
        nrows = len(self.row_labels)
        coef = np.zeros((nrows, self.m + 2))
        const = np.zeros(nrows)
        Bi = np.zeros(nrows)
        G2 = np.atleast_2d(self.plant.G2(x1))
        f2 = np.atleast_1d(self.plant.f2(x1, x2))
        row = 0
        for ell in range(len(cbf.spec.terms)):
            A, b, ids = cbf.term_rows(ell)
            vals = A @ x + b
            k = len(ids)
            Bi[row:row + k] = vals
            const[row:row + k] += np.where(
                self._vel[row:row + k],
                cbf.gamma * (self._a[row:row + k] @ x2) + self._a[row:row + k] @ f2,
                self._a[row:row + k] @ x2,
            )
            coef[row:row + k, :self.m] = np.where(
                self._vel[row:row + k, None],
                self._a[row:row + k] @ G2,
                0.0,
            )
            coef[row:row + k, self.m] = vals                      # alpha * B_i
            coef[row:row + k, self.m + 1] = B - act.per_term_min[ell]  # M * (B - B^l)
            row += k
        return coef, const, Bi, act

    def solve(self, x: np.ndarray, u_nom: np.ndarray | None = None,
              warm_start: bool = False) -> SafeguardResult:
        cbf, w, m = self.cbf, self.weights, self.m
        x = np.asarray(x, dtype=float)
        coef, const, Bi, act = self._barrier_rows(x)
        if act.value < -self.feasibility_margin:
            raise Infeasible(
                f"state outside the feasibility neighborhood (B = {act.value:.4g})"
            )
        Qx = w.Q_at(x, m)
        if u_nom is not None:
            u_nom = np.atleast_1d(np.asarray(u_nom, dtype=float))
            qvec = -2.0 * Qx @ u_nom
            u_center = u_nom
        else:
            qvec = w.q_at(x, m)
            u_center = np.linalg.solve(2.0 * Qx, -qvec)

        # rows in G z <= h form
        nb = coef.shape[0]
        G = np.zeros((nb + 2 + self._Gu_rows.shape[0], m + 2))
        h = np.zeros(G.shape[0])
        G[:nb] = -coef
        h[:nb] = const
        G[nb, m] = -1.0
        h[nb] = -w.c_alpha
        G[nb + 1, m + 1] = -1.0
        h[nb + 1] = -w.c_M
        if self._Gu_rows.size:
            G[nb + 2:, :m] = self._Gu_rows
            h[nb + 2:] = self._hu

        z_cand = np.concatenate([u_center, [w.c_alpha, w.c_M]])
        if (G @ z_cand <= h + 1e-11).all():
            # candidate is the unconstrained-in-u minimum with the alpha
            # and M bounds active at positive multipliers: globally optimal
            margins = coef @ z_cand + const
            if warm_start:
                self._warm = z_cand
            return SafeguardResult(u_star=z_cand[:m], alpha_star=float(z_cand[m]),
                                   M_star=float(z_cand[m + 1]), margins=margins,
                                   row_labels=self.row_labels, solution=None,
                                   fast_path=True)

        P = np.zeros((m + 2, m + 2))
        P[:m, :m] = 2.0 * Qx
        P[m, m] = 2.0 * w.q_alpha
        P[m + 1, m + 1] = 2.0 * w.q_M
        c = np.concatenate([qvec, [0.0, 0.0]])
        prob = QpProblem(P=P, c=c, G=G, h=h)
        start = self._warm if warm_start else None
        sol = solve_qp(prob, start=start)
        if not sol.optimal:
            raise Infeasible("safeguarding QP infeasible: the boundary safety "
                             "condition fails here or the input set is too small")
        if warm_start:
            self._warm = sol.z
        margins = coef @ sol.z + const
        return SafeguardResult(u_star=sol.z[:m], alpha_star=float(sol.z[m]),
                               M_star=float(sol.z[m + 1]), margins=margins,
                               row_labels=self.row_labels, solution=sol,
                               fast_path=False)


def safeguard(cbf: ExtendedCbf, plant, weights: QpWeights, input_set, x,
              u_nom=None, feasibility_margin: float = 0.1) -> SafeguardResult:
    """One-shot safeguarding solve; see SafeguardAssembler for the loop API."""
    asm = SafeguardAssembler(cbf, plant, weights, input_set,
                             feasibility_margin=feasibility_margin)
    return asm.solve(np.asarray(x, dtype=float), u_nom=u_nom)


def continuity_probe(cbf: ExtendedCbf, plant, weights: QpWeights, input_set,
                     path, u_nom_fn=None) -> float:
    """Max ||u*(x_{k+1}) - u*(x_k)|| / ||x_{k+1} - x_k|| along a path.

    Empirical Lipschitz audit of the controller; identical consecutive
    points contribute zero.
    """
    asm = SafeguardAssembler(cbf, plant, weights, input_set)
    path = [np.asarray(x, dtype=float) for x in path]
    us = []
    for x in path:
        u_nom = None if u_nom_fn is None else u_nom_fn(x)
        us.append(asm.solve(x, u_nom=u_nom).u_star)
    worst = 0.0
    for (xa, ua), (xb, ub) in zip(zip(path, us), zip(path[1:], us[1:])):
        dx = np.linalg.norm(xb - xa)
        if dx > 0:
            worst = max(worst, np.linalg.norm(ub - ua) / dx)
    return worst
