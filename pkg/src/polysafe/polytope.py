"""Half-space geometry of the position constraint set.

A safety region is a union of intersections of half-spaces
{x1 | a_i @ x1 + b_i >= 0} (max-min of affine functions).  This module
validates such specifications, evaluates membership, and produces the
LP-backed geometry certificate (witness points y_I per intersecting
index set and the interior margin delta) required before the extended
barrier can be built.

All index sets are 0-based internally; the JSON serialization uses
1-based indices in `terms`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    AssumptionViolated,
    EmptySet,
    TooManyHalfspaces,
    UnboundedPositions,
    ValidationError,
)
from .lp import LpProblem, lp_solve, lp_feasible_point

ENUMERATION_CAP = 20


@dataclass(frozen=True)
class HalfSpace:
    """{x | a @ x + b >= 0} with a nonzero direction and nonzero offset."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if not np.isfinite(a).all() or np.linalg.norm(a) == 0.0:
            raise ValidationError("half-space direction must be finite and nonzero")
        b = float(self.b)
        if b == 0.0 or not np.isfinite(b):
            raise ValidationError("half-space offset must be finite and nonzero")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def eval(self, x1: np.ndarray) -> float:
        return float(self.a @ x1 + self.b)


@dataclass(frozen=True)
class SafetySpec:
    """Union-of-intersections position constraint over r half-spaces.

    `terms` lists, per union term, the 0-based indices of its
    half-spaces.  Every term must be a nonempty, feasible intersection,
    and distinct half-spaces must have linearly independent augmented
    vectors (a_i, b_i).
    """

    halfspaces: tuple[HalfSpace, ...]
    terms: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self):
        hs = tuple(self.halfspaces)
        terms = tuple(tuple(int(i) for i in t) for t in self.terms)
        object.__setattr__(self, "halfspaces", hs)
        object.__setattr__(self, "terms", terms)
        if not hs:
            raise ValidationError("at least one half-space required")
        if any(h.a.size != self.n for h in hs):
            raise ValidationError(f"half-space dimension != n={self.n}")
        r = len(hs)
        if not terms or any(len(t) == 0 for t in terms):
            raise ValidationError("terms must be nonempty")
        for t in terms:
            if any(i < 0 or i >= r for i in t):
                raise ValidationError(f"term index out of range 0..{r - 1}: {t}")
            if len(set(t)) != len(t):
                raise ValidationError(f"duplicate index in term {t}")
        aug = np.array([np.append(h.a, h.b) for h in hs])
        for i, j in itertools.combinations(range(r), 2):
            if np.linalg.matrix_rank(aug[[i, j]], tol=1e-12) < 2:
                raise ValidationError(
                    f"half-spaces {i} and {j} have dependent augmented vectors"
                )
        for li, t in enumerate(terms):
            A = self.A[list(t)]
            if lp_feasible_point(A, -self.offsets[list(t)]) is None:
                raise ValidationError(f"term {li} is an empty intersection")

    @property
    def r(self) -> int:
        return len(self.halfspaces)

    @property
    def A(self) -> np.ndarray:
        """r x n matrix of half-space directions."""
        return np.array([h.a for h in self.halfspaces])

    @property
    def offsets(self) -> np.ndarray:
        return np.array([h.b for h in self.halfspaces])

    # --- serialization (1-based term indices on the wire) ---

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "halfspaces": [{"a": list(h.a), "b": h.b} for h in self.halfspaces],
            "terms": [[i + 1 for i in t] for t in self.terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SafetySpec":
        hs = tuple(HalfSpace(np.array(e["a"], dtype=float), float(e["b"]))
                   for e in d["halfspaces"])
        terms = tuple(tuple(int(i) - 1 for i in t) for t in d["terms"])
        return cls(halfspaces=hs, terms=terms, n=int(d["n"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SafetySpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GeometryCert:
    """Witness points and interior margin certifying the standing assumption.

    delta = min over stored (I, i in I) of h_i(y_I) and is strictly
    positive; proj_bounded records that every term is a bounded polytope.
    """

    s_cap: tuple[frozenset[int], ...]
    witnesses: dict[frozenset[int], np.ndarray]
    delta: float
    proj_bounded: bool


def eval_h(spec: SafetySpec, x1: np.ndarray) -> float:
    """Max over terms of min over term members of a_i @ x1 + b_i."""
    vals = spec.A @ np.asarray(x1, dtype=float) + spec.offsets
    return float(max(min(vals[i] for i in t) for t in spec.terms))


def eval_h_many(spec: SafetySpec, X: np.ndarray) -> np.ndarray:
    """Vectorized eval_h over rows of X (N x n)."""
    vals = np.asarray(X, dtype=float) @ spec.A.T + spec.offsets
    per_term = np.stack([vals[:, list(t)].min(axis=1) for t in spec.terms])
    return per_term.max(axis=0)


def contains(spec: SafetySpec, x1: np.ndarray) -> bool:
    return eval_h(spec, x1) >= 0.0


def is_bounded(rows: list[HalfSpace]) -> bool:
    """True iff the intersection of the rows is a bounded (and nonempty) set.

    Checks that the recession cone {z | a_i @ z >= 0} is {0} via 2k LPs
    maximizing +-e_j @ z under a unit box.
    """
    A = np.array([h.a for h in rows])
    b = np.array([h.b for h in rows])
    if lp_feasible_point(A, -b) is None:
        raise EmptySet("half-space intersection is empty")
    k = A.shape[1]
    box_A = np.vstack([np.eye(k), -np.eye(k)])
    cone_A = np.vstack([A, box_A])
    cone_b = np.concatenate([np.zeros(len(rows)), -np.ones(2 * k)])
    for j in range(k):
        for sign in (1.0, -1.0):
            c = np.zeros(k)
            c[j] = sign
            sol = lp_solve(LpProblem(c=c, A=cone_A, b=cone_b))
            if sol.objective > 1e-9:
                return False
    return True


def _feasible_union(spec: SafetySpec, indices: frozenset[int]) -> bool:
    A = spec.A[sorted(indices)]
    return lp_feasible_point(A, -spec.offsets[sorted(indices)]) is not None


def enumerate_s_cap(spec: SafetySpec) -> list[frozenset[int]]:
    """All nonempty I whose half-space intersection meets the safety set.

    Exhaustive over the 2^r - 1 subsets with one feasibility LP per
    distinct union I | term; capped at r <= ENUMERATION_CAP.
    """
    if spec.r > ENUMERATION_CAP:
        raise TooManyHalfspaces(f"r={spec.r} exceeds enumeration cap {ENUMERATION_CAP}")
    cache: dict[frozenset[int], bool] = {}
    result = []
    for size in range(1, spec.r + 1):
        for combo in itertools.combinations(range(spec.r), size):
            I = frozenset(combo)
            for t in spec.terms:
                union = I | frozenset(t)
                if union not in cache:
                    cache[union] = _feasible_union(spec, union)
                if cache[union]:
                    result.append(I)
                    break
    return result


def max_min_point(spec: SafetySpec, I: frozenset[int]) -> tuple[np.ndarray, float]:
    """Best interior witness y_I = argmax over C of min_{i in I} h_i.

    Solves one margin-maximization LP per term whose intersection with
    the I half-spaces is nonempty; returns the best point and its margin.
    Ties across terms break toward the lowest term index.
    """
    I = frozenset(I)
    best = None
    for t in spec.terms:
        idx_I = sorted(I)
        idx_t = sorted(t)
        # variables (x, t_margin); maximize t_margin
        n = spec.n
        rows = []
        rhs = []
        for i in idx_I:
            rows.append(np.append(spec.halfspaces[i].a, -1.0))
            rhs.append(-spec.halfspaces[i].b)
        for i in idx_t:
            rows.append(np.append(spec.halfspaces[i].a, 0.0))
            rhs.append(-spec.halfspaces[i].b)
        c = np.zeros(n + 1)
        c[-1] = 1.0
        sol = lp_solve(LpProblem(c=c, A=np.array(rows), b=np.array(rhs)))
        if sol.status == "infeasible":
            continue
        if sol.status == "unbounded":
            raise UnboundedPositions("witness margin LP unbounded; positions not compact")
        if best is None or sol.objective > best[1] + 1e-12:
            best = (sol.x[:n], sol.objective)
    if best is None:
        raise AssumptionViolated(f"index set {sorted(I)} does not meet the safety set")
    if best[1] <= 0.0:
        raise AssumptionViolated(
            f"no interior witness for {sorted(I)}: best margin {best[1]:.3e}"
        )
    return best[0], float(best[1])


def compute_cert(spec: SafetySpec, overrides=None) -> GeometryCert:
    """Assemble the geometry certificate.

    `overrides` pins witness points: either a map {frozenset -> y} or a
    single point applied to every index set (the common case of one
    deep-interior point).  Raises UnboundedPositions if any term is an
    unbounded polytope, AssumptionViolated if a witness fails its strict
    margin.
    """
    for li, t in enumerate(spec.terms):
        if not is_bounded([spec.halfspaces[i] for i in t]):
            raise UnboundedPositions(f"term {li} is unbounded")
    s_cap = enumerate_s_cap(spec)
    if overrides is not None and not isinstance(overrides, dict):
        point = np.asarray(overrides, dtype=float)
        overrides = {I: point for I in s_cap}
    witnesses: dict[frozenset[int], np.ndarray] = {}
    delta = np.inf
    for I in s_cap:
        if overrides is not None and I in overrides:
            y = np.asarray(overrides[I], dtype=float)
            margins = [spec.halfspaces[i].eval(y) for i in sorted(I)]
            if min(margins) <= 0.0 or not contains(spec, y):
                raise AssumptionViolated(
                    f"override witness for {sorted(I)} lacks a positive margin"
                )
            margin = min(margins)
        else:
            y, margin = max_min_point(spec, I)
        witnesses[I] = y
        delta = min(delta, margin)
    order = sorted(s_cap, key=lambda I: (len(I), sorted(I)))
    return GeometryCert(
        s_cap=tuple(order),
        witnesses=witnesses,
        delta=float(delta),
        proj_bounded=True,
    )


def position_bounding_box(spec: SafetySpec) -> tuple[np.ndarray, np.ndarray]:
    """(lo, hi) axis-aligned bounds of the safety set (LPs per term and axis)."""
    lo = np.full(spec.n, np.inf)
    hi = np.full(spec.n, -np.inf)
    for t in spec.terms:
        A = spec.A[list(t)]
        b = -spec.offsets[list(t)]
        for j in range(spec.n):
            c = np.zeros(spec.n)
            c[j] = 1.0
            for sign in (1.0, -1.0):
                sol = lp_solve(LpProblem(c=sign * c, A=A, b=b))
                if not sol.optimal:
                    raise UnboundedPositions("term unbounded while computing bounds")
                v = sol.x[j]
                lo[j] = min(lo[j], v)
                hi[j] = max(hi[j], v)
    return lo, hi


# canonical example geometries -------------------------------------------------

def hexagon_spec() -> SafetySpec:
    """Hexagonal joint-angle region with vertices (+-pi/2, +-pi/2), (0, +-pi)."""
    rows = [
        ((-1.0, 0.0), np.pi / 2),
        ((1.0, 0.0), np.pi / 2),
        ((-1.0, -1.0), np.pi),
        ((1.0, 1.0), np.pi),
        ((-1.0, 1.0), np.pi),
        ((1.0, -1.0), np.pi),
    ]
    hs = tuple(HalfSpace(np.array(a), b) for a, b in rows)
    return SafetySpec(halfspaces=hs, terms=((0, 1, 2, 3, 4, 5),), n=2)


def slab_spec(width: float = 1.0) -> SafetySpec:
    """1-D slab -width <= x <= width."""
    hs = (HalfSpace(np.array([1.0]), width), HalfSpace(np.array([-1.0]), width))
    return SafetySpec(halfspaces=hs, terms=((0, 1),), n=1)
