from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treedom.errors import ConsistencyError, DomainError
from treedom.ising_tree import (
    ModelParams,
    RootClass,
    TransitionMatrix2,
    classify,
    critical_coupling,
    h_star,
    phi,
    phi_partials,
    solve_fixed_points,
    stationary,
    t_extreme,
    t_star,
    transition_matrix,
)

mp.mp.dps = 40


def mp_phi(J, t):
    return mp.mpf("0.5") * mp.log(mp.cosh(mp.mpf(t) + J) / mp.cosh(mp.mpf(t) - J))


def mp_hstar(d, J):
    # maximise d*phi(t) - t directly with a high-precision root of the derivative
    g = lambda t: d * mp.mpf("0.5") * (mp.tanh(J + t) + mp.tanh(J - t)) - 1
    ts = mp.findroot(g, 1.0)
    return d * mp_phi(J, ts) - ts, ts


couplings = st.floats(0.01, 5.0)
fields = st.floats(-6.0, 6.0)
branching = st.integers(2, 6)


@pytest.mark.parametrize("J,t", [(1.0, 0.5), (0.3, -2.0), (2.5, 7.0), (0.01, 0.001), (1.0, 40.0)])
def test_phi_matches_high_precision(J, t):
    assert phi(J, t) == pytest.approx(float(mp_phi(mp.mpf(J), t)), rel=1e-14, abs=1e-16)


def test_phi_large_argument_is_finite():
    assert phi(1.3, 1e300) == pytest.approx(1.3)
    assert phi(1.3, -1e300) == pytest.approx(-1.3)


@given(couplings, st.floats(-50, 50))
def test_phi_is_odd_and_bounded(J, t):
    assert phi(J, -t) == -phi(J, t)
    assert abs(phi(J, t)) <= J * (1 + 1e-15)


@given(couplings, st.floats(-10, 10))
@settings(max_examples=50)
def test_phi_partials_finite_differences(J, t):
    dJ, dt = phi_partials(J, t)
    e = 1e-6
    assert dJ == pytest.approx((phi(J + e, t) - phi(J - e, t)) / (2 * e), abs=1e-7)
    assert dt == pytest.approx((phi(J, t + e) - phi(J, t - e)) / (2 * e), abs=1e-7)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 10])
def test_critical_coupling(d):
    assert math.tanh(critical_coupling(d)) == pytest.approx(1 / d, abs=1e-14)


def test_critical_coupling_values():
    assert critical_coupling(2) == pytest.approx(0.5493061443340549, abs=1e-15)
    assert critical_coupling(4) == pytest.approx(0.2554128118829953, abs=1e-15)


@pytest.mark.parametrize("d,J", [(4, 1.0), (2, 0.7), (3, 2.0), (5, 0.3)])
def test_closed_forms_against_mpmath(d, J):
    hs, ts = mp_hstar(d, mp.mpf(J))
    assert h_star(d, J) == pytest.approx(float(hs), abs=1e-12)
    assert t_star(d, J) == pytest.approx(float(ts), abs=1e-12)


def test_closed_forms_vanish_below_critical():
    jc = critical_coupling(3)
    assert h_star(3, jc) == 0.0 and t_star(3, jc) == 0.0
    assert h_star(3, 0.5 * jc) == 0.0


def test_hstar_strictly_increasing_above_critical():
    Js = np.linspace(critical_coupling(4) + 1e-3, 3, 200)
    hs = [h_star(4, float(J)) for J in Js]
    assert all(b > a for a, b in zip(hs, hs[1:]))


def test_example_unique_and_triple():
    sol = solve_fixed_points(ModelParams(5, 1.5, 8.0))
    assert sol.kind is RootClass.UNIQUE and len(sol.roots) == 1
    sol = solve_fixed_points(ModelParams(5, 1.5, 0.0))
    assert sol.kind is RootClass.TRIPLE
    assert sol.roots[1] == 0.0 and sol.roots[0] == -sol.roots[2]


def test_tangent_pair():
    d, J = 3, 1.0
    hs = h_star(d, J)
    sol = solve_fixed_points(ModelParams(d, J, hs))
    assert sol.kind is RootClass.TANGENT_PAIR
    assert sol.roots[0] == -t_star(d, J)
    assert max(sol.residuals) < 1e-10


@given(branching, couplings, fields)
@settings(max_examples=300)
def test_root_count_law_and_residuals(d, J, h):
    p = ModelParams(d, J, h)
    sol = solve_fixed_points(p)
    assert len(sol.roots) == classify(p).count
    assert max(sol.residuals) <= 1e-10
    assert list(sol.roots) == sorted(sol.roots)


@given(branching, couplings, fields)
@settings(max_examples=100)
def test_field_symmetry(d, J, h):
    a = solve_fixed_points(ModelParams(d, J, h)).roots
    b = solve_fixed_points(ModelParams(d, J, -h)).roots
    assert np.allclose(a, [-x for x in reversed(b)], atol=1e-11)


@given(couplings, st.floats(-20, 20))
def test_transition_matrix_cosh_forms(J, t):
    P = transition_matrix(J, t)
    assert P.p_mp == pytest.approx(math.exp(t - J) / (2 * math.cosh(J - t)), rel=1e-12)
    assert P.p_pp == pytest.approx(math.exp(J + t) / (2 * math.cosh(J + t)), rel=1e-12)


@given(couplings, fields)
@settings(max_examples=100)
def test_stationary_plus_probability_identity(J, h):
    # root marginal: the root sees d+1 neighbours, i.e. effective field t + phi(t)
    t = t_extreme(ModelParams(3, J, h), "plus")
    nu = stationary(transition_matrix(J, t))
    expected = 1 / (1 + math.exp(-2 * (t + phi(J, t))))
    assert nu.prob_plus == pytest.approx(expected, rel=1e-10)


def test_stationary_is_invariant():
    P = transition_matrix(0.8, 1.1)
    nu = stationary(P)
    v = np.array([nu.prob_minus, nu.prob_plus])
    assert np.allclose(v @ P.as_array(), v, atol=1e-15)


def test_validation_errors():
    with pytest.raises(DomainError):
        ModelParams(1, 1.0, 0.0)
    with pytest.raises(DomainError):
        ModelParams(3, 0.0, 0.0)
    with pytest.raises(DomainError):
        ModelParams(3, 1.0, float("nan"))
    with pytest.raises(DomainError):
        TransitionMatrix2(0.5, 0.6, 0.5, 0.5)
    with pytest.raises(DomainError):
        t_extreme(ModelParams(3, 1.0, 0.0), "up")
    with pytest.raises(DomainError):
        stationary(TransitionMatrix2(1.0, 0.0, 0.5, 0.5))


def test_consistency_error_type():
    assert issubclass(ConsistencyError, RuntimeError)
