"""Second-order plants: the planar two-link arm and a double integrator.

The arm model is the standard planar elbow manipulator with point
masses at the link ends, written with the Coriolis and potential forcing
on the right-hand side:

    M(theta) thetadd = C(theta, thetad) thetad + [0, c25 cos(th1+th2)] + u.

Links are horizontal by default (c25 = 0); a gravity toggle enables the
potential term for input-bound experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InsufficientActuation, NoSplit, SingularInertia
from .polytope import SafetySpec, contains, position_bounding_box

GRAVITY = 9.8  # m/s^2


@dataclass(frozen=True)
class PlantModel:
    """Control-affine second-order dynamics x1dd = f2(x1, x2) + G2(x1) u.

    The optional split f2 = f2_potential(x1) + f2_velocity(x1, x2) is
    needed for the Euler-Lagrange constant estimates.
    """

    n: int
    m: int
    f2: Callable[[np.ndarray, np.ndarray], np.ndarray]
    G2: Callable[[np.ndarray], np.ndarray]
    f2_potential: Callable[[np.ndarray], np.ndarray] | None = None
    f2_velocity: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = "plant"

    @property
    def has_split(self) -> bool:
        return self.f2_potential is not None and self.f2_velocity is not None


@dataclass(frozen=True)
class ElConstants:
    """Grid-certified force and inertia bounds over the safety set.

    k2 is certified on the velocity ball ||x2|| <= v_cap only (the
    velocity force is quadratic for the arm, so a linear bound needs a
    bounded velocity set).
    """

    k1: float
    kG: float
    k2: float
    v_cap: float
    grid_resolution: int


@dataclass(frozen=True)
class ArmParams:
    """Two-link arm with point masses at the link ends."""

    m1: float = 1.0
    m2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    gravity: bool = False
    g: float = GRAVITY

    def __post_init__(self):
        if min(self.m1, self.m2, self.l1, self.l2) <= 0:
            raise ValueError("masses and lengths must be positive")

    @property
    def coefficients(self) -> dict[str, float]:
        """The c_ij table, regenerated from masses and lengths."""
        m1, m2, l1, l2 = self.m1, self.m2, self.l1, self.l2
        k = m2 * l1 * l2
        return {
            "c11": (m1 + m2) * l1 ** 2 + m2 * l2 ** 2,
            "c12": 2.0 * k,
            "c13": m2 * l2 ** 2,
            "c14": k,
            "c15": 2.0 * k,
            "c16": k,
            "c21": m2 * l2 ** 2,
            "c22": m2 * l2 ** 2,
            "c23": k,
            "c24": -k,
            "c25": -m2 * self.g * l2 if self.gravity else 0.0,
        }


def mass_matrix(p: ArmParams, theta: np.ndarray) -> np.ndarray:
    c = p.coefficients
    ct2 = math.cos(theta[1])
    return np.array([
        [c["c11"] + c["c12"] * ct2, c["c13"] + c["c14"] * ct2],
        [c["c22"] + c["c23"] * ct2, c["c21"]],
    ])


def coriolis_matrix(p: ArmParams, theta: np.ndarray,
                    thetad: np.ndarray) -> np.ndarray:
    """Right-hand-side Coriolis matrix C with M thetadd = C thetad + ..."""
    c = p.coefficients
    st2 = math.sin(theta[1])
    return np.array([
        [c["c15"] * st2 * thetad[1], c["c16"] * st2 * thetad[1]],
        [c["c24"] * st2 * thetad[0], 0.0],
    ])


def potential_vector(p: ArmParams, theta: np.ndarray) -> np.ndarray:
    c = p.coefficients
    return np.array([0.0, c["c25"] * math.cos(theta[0] + theta[1])])


def two_link_arm(params: ArmParams) -> PlantModel:
    """n = m = 2 arm plant with G2 = M^{-1} and the Coriolis/potential split."""

    def _Minv(theta):
        M = mass_matrix(params, theta)
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        if abs(det) < 1e-12:
            raise SingularInertia(f"inertia matrix singular at theta2={theta[1]:.4g}")
        return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / det

    def f2(x1, x2):
        return _Minv(x1) @ (coriolis_matrix(params, x1, x2) @ x2
                            + potential_vector(params, x1))

    def f2_velocity(x1, x2):
        return _Minv(x1) @ (coriolis_matrix(params, x1, x2) @ x2)

    def f2_potential(x1):
        return _Minv(x1) @ potential_vector(params, x1)

    return PlantModel(n=2, m=2, f2=f2, G2=_Minv,
                      f2_potential=f2_potential, f2_velocity=f2_velocity,
                      name="two_link_arm")


def double_integrator(n: int = 1) -> PlantModel:
    eye = np.eye(n)
    zero = np.zeros(n)
    return PlantModel(n=n, m=n,
                      f2=lambda x1, x2: zero,
                      G2=lambda x1: eye,
                      f2_potential=lambda x1: zero,
                      f2_velocity=lambda x1, x2: zero,
                      name="double_integrator")


@dataclass(frozen=True)
class SineReference:
    """r(t) = (A1 sin(w1 t), A2 sin(w2 t)) with analytic derivatives."""

    amplitudes: tuple[float, float] = (np.pi, np.pi / 2)
    frequencies: tuple[float, float] = (1.0, 4.0)

    def r(self, t: float) -> np.ndarray:
        a, w = self.amplitudes, self.frequencies
        return np.array([a[0] * math.sin(w[0] * t), a[1] * math.sin(w[1] * t)])

    def rd(self, t: float) -> np.ndarray:
        a, w = self.amplitudes, self.frequencies
        return np.array([a[0] * w[0] * math.cos(w[0] * t),
                         a[1] * w[1] * math.cos(w[1] * t)])

    def rdd(self, t: float) -> np.ndarray:
        a, w = self.amplitudes, self.frequencies
        return np.array([-a[0] * w[0] ** 2 * math.sin(w[0] * t),
                         -a[1] * w[1] ** 2 * math.sin(w[1] * t)])


def nominal_tracking(params: ArmParams,
                     reference: SineReference | None = None):
    """Computed-torque tracking law for the arm (no gravity compensation).

    u(t, x) = M (rdd - ed - e) - C thetad  with e = theta - r, which
    cancels the right-hand-side Coriolis forcing and imposes the stable
    error dynamics edd + ed + e = 0.
    """
    ref = reference if reference is not None else SineReference()

    def controller(t: float, x: np.ndarray) -> np.ndarray:
        theta, thetad = x[:2], x[2:]
        e = theta - ref.r(t)
        ed = thetad - ref.rd(t)
        M = mass_matrix(params, theta)
        Crhs = coriolis_matrix(params, theta, thetad)
        return M @ (ref.rdd(t) - ed - e) - Crhs @ thetad

    return controller


def _position_grid(spec: SafetySpec, resolution: int) -> np.ndarray:
    lo, hi = position_bounding_box(spec)
    axes = [np.linspace(lo[j], hi[j], resolution) for j in range(spec.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts[[contains(spec, p) for p in pts]]


def _unit_directions(n: int, count: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.column_stack([np.cos(ang), np.sin(ang)])
    rng = np.random.Generator(np.random.Philox(0))
    d = rng.normal(size=(count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _pattern_polish(f, x0: np.ndarray, step: np.ndarray,
                    feasible=lambda x: True, rounds: int = 80):
    """Deterministic coordinate pattern search; returns the refined max."""
    x = x0.copy()
    fx = f(x)
    step = step.copy()
    for _ in range(rounds):
        improved = False
        for j in range(x.size):
            for sgn in (1.0, -1.0):
                cand = x.copy()
                cand[j] += sgn * step[j]
                if feasible(cand):
                    fc = f(cand)
                    if fc > fx + 1e-15:
                        x, fx = cand, fc
                        improved = True
        if not improved:
            step *= 0.5
            if (step < 1e-10).all():
                break
    return fx


def estimate_constants(plant: PlantModel, spec: SafetySpec,
                       resolution: int = 200, v_cap: float = 1.0,
                       n_directions: int = 32) -> ElConstants:
    """Maxima of the potential force, right-inverse norm, and the
    velocity-force gain over the safety set: a grid scan followed by a
    deterministic pattern-search polish from the best grid candidates,
    so the reported values are refined local maxima rather than raw grid
    maxima.

    k2 uses homogeneity: for forcing quadratic in the velocity the ratio
    ||f2_velocity|| / ||x2|| is maximal on the sphere ||x2|| = v_cap, so
    only that sphere is scanned.
    """
    if not plant.has_split:
        raise NoSplit("plant lacks the potential/velocity decomposition")
    grid = _position_grid(spec, resolution)
    dirs = _unit_directions(plant.n, n_directions)
    lo, hi = position_bounding_box(spec)
    spacing = (hi - lo) / max(resolution - 1, 1)
    in_c = lambda x1: contains(spec, x1)

    def f_k1(x1):
        return float(np.linalg.norm(plant.f2_potential(x1)))

    def f_kG(x1):
        return float(np.linalg.norm(np.linalg.pinv(np.atleast_2d(plant.G2(x1))), 2))

    def f_k2(z):
        x1, w = z[:spec.n], z[spec.n:]
        x2 = v_cap * w / np.linalg.norm(w)
        return float(np.linalg.norm(plant.f2_velocity(x1, x2))) / v_cap

    k1 = kG = 0.0
    k2_top: list[tuple[float, np.ndarray]] = []
    x1_k1 = x1_kG = grid[0]
    for x1 in grid:
        v1 = f_k1(x1)
        if v1 > k1:
            k1, x1_k1 = v1, x1
        vG = f_kG(x1)
        if vG > kG:
            kG, x1_kG = vG, x1
        for d in dirs:
            z = np.concatenate([x1, d])
            k2_top.append((f_k2(z), z))
            k2_top.sort(key=lambda t: -t[0])
            del k2_top[3:]

    k1 = _pattern_polish(f_k1, x1_k1, spacing.copy(), feasible=in_c)
    kG = _pattern_polish(f_kG, x1_kG, spacing.copy(), feasible=in_c)
    k2 = 0.0
    dir_step = np.full(plant.n, np.pi / max(n_directions, 2))
    for val, z in k2_top:
        k2 = max(k2, val, _pattern_polish(
            f_k2, z, np.concatenate([spacing, dir_step]),
            feasible=lambda z: in_c(z[:spec.n])
            and np.linalg.norm(z[spec.n:]) > 0.1))
    return ElConstants(k1=k1, kG=kG, k2=k2, v_cap=v_cap,
                       grid_resolution=resolution)


def select_gamma(constants: ElConstants, d: float, spec: SafetySpec,
                 cert) -> tuple[float, float]:
    """Largest gamma (with 10% slack) meeting the input-bound condition
    gamma (k2 + gamma) kG c < (d - k1 kG) / 2, plus epsilon = gamma delta / 2.

    c is computed once at gamma = 1, epsilon = delta / 2 and reused: the
    velocity bound scales exactly linearly in (gamma, epsilon).
    """
    from .cbf import build, velocity_bound

    headroom = d - constants.kG * constants.k1
    if headroom <= 0:
        raise InsufficientActuation(
            f"d = {d:.6g} <= kG*k1 = {constants.kG * constants.k1:.6g}"
        )
    delta = cert.delta
    c = velocity_bound(build(spec, cert, 1.0, delta / 2)).c
    target = 0.45 * headroom  # strict half with 10% slack
    kGc = constants.kG * c
    if kGc <= 0:
        gamma = 1.0
    else:
        def lhs(g):
            return g * (constants.k2 + g) * kGc

        hi = 1.0
        while lhs(hi) < target:
            hi *= 2.0
        lo = 0.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if lhs(mid) < target:
                lo = mid
            else:
                hi = mid
        gamma = lo
    return gamma, gamma * delta / 2
