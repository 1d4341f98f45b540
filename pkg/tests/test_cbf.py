"""Extended barrier: evaluation, lift, velocity bound, boundary checks."""

import functools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import eval_barrier_naive, sample_safe_positions
from polysafe.cbf import (
    build,
    cbf_from_dict,
    check_compactness,
    eval_B,
    eval_B_many,
    lift_position,
    sample_boundary,
    velocity_bound,
    verify_safety_condition,
)
from polysafe.errors import NotInC, ParameterViolation
from polysafe.inputs import Box, Unbounded
from polysafe.polytope import compute_cert, hexagon_spec, slab_spec


@pytest.fixture(scope="module")
def slab_cbf(slab, slab_cert):
    return build(slab, slab_cert, 1.0, 0.5)


# --- construction gate --------------------------------------------------------

def test_build_requires_strict_margin_product(slab, slab_cert):
    build(slab, slab_cert, 1.0, 0.999)  # delta = 1, just inside
    with pytest.raises(ParameterViolation):
        build(slab, slab_cert, 1.0, 1.0)  # equality is rejected
    with pytest.raises(ParameterViolation):
        build(slab, slab_cert, 0.01, 1.0)


def test_build_rejects_nonpositive_parameters(slab, slab_cert):
    with pytest.raises(ParameterViolation):
        build(slab, slab_cert, -1.0, 0.1)
    with pytest.raises(ParameterViolation):
        build(slab, slab_cert, 1.0, 0.0)


def test_extended_terms_double_the_indices(hexagon_cbf):
    assert hexagon_cbf.extended_terms == ((0, 1, 2, 3, 4, 5,
                                           6, 7, 8, 9, 10, 11),)
    grad, const = hexagon_cbf.row(6)  # companion of row 0: a = (-1, 0)
    np.testing.assert_allclose(grad, [-10.0, 0.0, -1.0, 0.0])
    assert const == pytest.approx(10.0 * np.pi / 2 - 0.1)


# --- evaluation ---------------------------------------------------------------

def test_barrier_at_origin(hexagon_cbf):
    act = eval_B(hexagon_cbf, np.zeros(4))
    assert act.value == pytest.approx(np.pi / 2, abs=1e-12)
    assert act.argmax_terms == (0,)


def test_barrier_matches_naive_oracle(hexagon_cbf):
    rng = np.random.Generator(np.random.Philox(11))
    X = rng.uniform(-4.0, 4.0, size=(500, 4))
    fast = eval_B_many(hexagon_cbf, X)
    for x, v in zip(X, fast):
        assert v == pytest.approx(eval_barrier_naive(hexagon_cbf, x), abs=1e-12)
        assert eval_B(hexagon_cbf, x).value == pytest.approx(v, abs=1e-12)


@functools.lru_cache(maxsize=1)
def _union_cbf():
    # two disjoint unit intervals, [-2, -1] union [1, 2]
    from polysafe.polytope import HalfSpace, SafetySpec

    def hs(a, b):
        return HalfSpace(np.array(a, dtype=float), b)

    spec = SafetySpec(
        halfspaces=(hs([1.0], -1.0), hs([-1.0], 2.0),
                    hs([-1.0], -1.0), hs([1.0], 2.0)),
        terms=((0, 1), (2, 3)), n=1)
    cert = compute_cert(spec)
    return build(spec, cert, 1.0, cert.delta / 2)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_barrier_union_is_max_of_terms(pt):
    cbf = _union_cbf()
    x = np.array([pt[0], pt[1]])
    vals = []
    for ell in range(2):
        A, b, _ = cbf.term_rows(ell)
        vals.append((A @ x + b).min())
    assert eval_B(cbf, x).value == pytest.approx(max(vals), abs=1e-12)


# --- lift ---------------------------------------------------------------------

def test_lift_slab_example(slab_cbf):
    # sigma = (1 + eps/(gamma delta))/2 = 0.75; x1 = 1 -> x2 = -0.75
    state = lift_position(slab_cbf, np.array([1.0]))
    assert state[1] == pytest.approx(-0.75, abs=1e-12)
    assert eval_B(slab_cbf, state).value >= 0.0


def test_lift_rejects_outside_position(slab_cbf):
    with pytest.raises(NotInC):
        lift_position(slab_cbf, np.array([1.5]))


def test_lift_keeps_thousand_positions_safe(hexagon_cbf):
    X1 = sample_safe_positions(hexagon_cbf.spec, 1000, seed=5)
    states = np.array([lift_position(hexagon_cbf, x1) for x1 in X1])
    assert eval_B_many(hexagon_cbf, states).min() >= 0.0


# --- compactness and velocity bound -------------------------------------------

def test_extended_terms_are_compact(hexagon_cbf, slab_cbf):
    assert check_compactness(hexagon_cbf)
    assert check_compactness(slab_cbf)


def test_velocity_bound_slab_analytic(slab, slab_cert):
    for gamma, eps in ((1.0, 0.5), (3.0, 0.2), (10.0, 1.0)):
        cert = velocity_bound(build(slab, slab_cert, gamma, eps))
        assert cert.per_component_bound == pytest.approx(2 * gamma - eps,
                                                         abs=1e-9)
        assert cert.norm_bound == pytest.approx(2 * gamma - eps, abs=1e-9)
        assert cert.c == pytest.approx((2 * gamma - eps) / gamma, abs=1e-9)


def test_velocity_bound_scales_linearly(hexagon, hexagon_cert):
    base = velocity_bound(build(hexagon, hexagon_cert, 10.0, 0.1))
    for s in (0.1, 10.0):
        scaled = velocity_bound(build(hexagon, hexagon_cert, 10.0 * s, 0.1 * s))
        assert scaled.per_component_bound / s == pytest.approx(
            base.per_component_bound, rel=1e-9)


def test_velocity_bound_holds_on_extended_samples(hexagon_cbf):
    from _oracles import sample_extended_states

    states = sample_extended_states(hexagon_cbf, 2000, seed=3)
    cert = velocity_bound(hexagon_cbf)
    assert np.abs(states[:, 2:]).max() <= cert.per_component_bound + 1e-9


# --- boundary sampling --------------------------------------------------------

def test_sample_boundary_on_surface_and_deterministic(hexagon_cbf):
    X = sample_boundary(hexagon_cbf, 200, seed=42)
    assert X.shape == (200, 4)
    assert np.abs(eval_B_many(hexagon_cbf, X)).max() <= 1e-9
    X2 = sample_boundary(hexagon_cbf, 200, seed=42)
    assert (X == X2).all()
    X3 = sample_boundary(hexagon_cbf, 200, seed=43)
    assert not (X == X3).all()


def test_sample_boundary_zero_count(hexagon_cbf):
    assert sample_boundary(hexagon_cbf, 0, seed=1).shape == (0, 4)


# --- boundary safety condition ------------------------------------------------

def test_condition_fully_actuated_arm(hexagon_cbf, arm):
    X = sample_boundary(hexagon_cbf, 100, seed=9)
    report = verify_safety_condition(hexagon_cbf, arm, Unbounded(), X)
    assert report.all_feasible
    # witness margins are at least gamma * delta - epsilon by construction
    floor = hexagon_cbf.gamma * hexagon_cbf.cert.delta - hexagon_cbf.epsilon
    assert report.worst_margin >= floor - 1e-6


def test_condition_infeasible_under_tiny_input_box(hexagon_cbf, arm):
    X = sample_boundary(hexagon_cbf, 50, seed=9)
    report = verify_safety_condition(hexagon_cbf, arm,
                                     Box(np.array([1e-6, 1e-6])), X)
    assert not report.all_feasible


def test_condition_report_csv(tmp_path, hexagon_cbf, arm):
    X = sample_boundary(hexagon_cbf, 10, seed=9)
    report = verify_safety_condition(hexagon_cbf, arm, Unbounded(), X)
    path = tmp_path / "report.csv"
    report.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "sample_id,x1,x2,x3,x4,active_indices,margin,feasible"
    assert len(lines) == 11


# --- serialization ------------------------------------------------------------

def test_cbf_dict_round_trip(hexagon_cbf):
    back = cbf_from_dict(hexagon_cbf.to_dict())
    assert back.gamma == hexagon_cbf.gamma
    assert back.epsilon == hexagon_cbf.epsilon
    assert back.cert.delta == hexagon_cbf.cert.delta
    rng = np.random.Generator(np.random.Philox(1))
    X = rng.uniform(-3, 3, size=(50, 4))
    np.testing.assert_array_equal(eval_B_many(back, X),
                                  eval_B_many(hexagon_cbf, X))
