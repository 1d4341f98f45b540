"""Independent reference implementations used only by the tests."""

import itertools

import numpy as np


def qp_bruteforce(P, c, G, h, tol=1e-9):
    """Optimal z of min 0.5 z P z + c z s.t. G z <= h by enumerating
    candidate active sets and checking the optimality conditions.

    Returns None when no candidate satisfies feasibility plus
    nonnegative multipliers (the problem is then infeasible, since P is
    positive definite and the feasible set, if nonempty, has a
    minimizer).  Exponential in the row count; test-sized inputs only.
    """
    k, nz = G.shape
    best = None
    for size in range(0, min(k, nz) + 1):
        for combo in itertools.combinations(range(k), size):
            Gw = G[list(combo)]
            K = np.block([[P, Gw.T], [Gw, np.zeros((size, size))]])
            rhs = np.concatenate([-c, h[list(combo)]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            z, lam = sol[:nz], sol[nz:]
            if (G @ z > h + tol).any() or (lam < -tol).any():
                continue
            obj = 0.5 * z @ P @ z + c @ z
            if best is None or obj < best[1] - 1e-12:
                best = (z, obj)
    return best


def random_qp(rng, max_dim=4, max_rows=8):
    """A random strictly convex QP, feasible by construction."""
    nz = int(rng.integers(1, max_dim + 1))
    k = int(rng.integers(1, max_rows + 1))
    A = rng.normal(size=(nz, nz))
    P = A @ A.T + nz * np.eye(nz)
    c = rng.normal(size=nz)
    G = rng.normal(size=(k, nz))
    z0 = rng.normal(size=nz)
    h = G @ z0 + rng.uniform(0.0, 1.0, size=k)
    return P, c, G, h


def eval_barrier_naive(cbf, x):
    """Scalar max-min evaluation straight from the row definitions."""
    best = -np.inf
    for ids in cbf.extended_terms:
        worst = np.inf
        for i in ids:
            grad, const = cbf.row(i)
            worst = min(worst, float(grad @ x + const))
        best = max(best, worst)
    return best


def sample_safe_positions(spec, count, seed):
    """Rejection-sample `count` positions inside the safety region."""
    from polysafe.polytope import eval_h_many, position_bounding_box

    lo, hi = position_bounding_box(spec)
    rng = np.random.Generator(np.random.Philox(seed))
    out = []
    while sum(len(b) for b in out) < count:
        pts = rng.uniform(lo, hi, size=(4 * count, spec.n))
        out.append(pts[eval_h_many(spec, pts) >= 0.0])
    return np.concatenate(out)[:count]


def sample_extended_states(cbf, count, seed):
    """States in the extended safe set: per-term vertex mixtures.

    Vertices come from random-cost LPs over each extended term polytope;
    Dirichlet-weighted combinations stay inside the (convex) term.
    """
    from polysafe.lp import LpProblem, lp_solve

    rng = np.random.Generator(np.random.Philox(seed))
    term_vertices = []
    for ell in range(len(cbf.spec.terms)):
        A, b, _ = cbf.term_rows(ell)
        verts = []
        for _ in range(8 * cbf.n + 8):
            sol = lp_solve(LpProblem(c=rng.normal(size=A.shape[1]), A=A, b=-b))
            if sol.optimal:
                verts.append(sol.x)
        term_vertices.append(np.array(verts))
    states = []
    for k in range(count):
        verts = term_vertices[k % len(term_vertices)]
        w = rng.dirichlet(np.ones(len(verts)))
        states.append(w @ verts)
    return np.array(states)
