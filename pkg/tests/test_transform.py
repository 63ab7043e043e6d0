import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randgen import feasible_flow, random_plan
from ramified.errors import KirchhoffViolation
from ramified.eulerian import (
    EmbeddedNetwork,
    cancel_cycles,
    check_kirchhoff,
    divergence,
    gilbert_energy,
    make_flow,
)
from ramified.lagrangian import irrigation_cost, is_simple, make_plan, marginals
from ramified.measures import dirac, make_measure
from ramified.transform import flow_to_plan, plan_to_flow, verify_equivalence

seeds = st.integers(0, 2**32 - 1)
EDGE = EmbeddedNetwork.build([(0, 0), (1, 0)], [(0, 1)])
Y = EmbeddedNetwork.build([(0, 0), (0.5, 0), (1, 1), (1, -1)], [(0, 1), (1, 2), (1, 3)])
Y_NU = make_measure([((1, 1), 0.5), ((1, -1), 0.5)])


def per_segment(net, values):
    out = np.zeros(len(net.segments))
    np.add.at(out, net.edge_segment, values)
    return out


def test_plan_to_flow_examples():
    pf = plan_to_flow(make_plan(EDGE, [(1.0, (0, 1))]))
    assert pf.flow.weights.tolist() == [1.0] and pf.intensity.tolist() == [1.0]
    pf = plan_to_flow(make_plan(EDGE, [(0.5, (0, 1)), (0.5, (1, 0))]))
    assert pf.flow.weights.tolist() == [0.0] and pf.intensity.tolist() == [1.0]
    pf = plan_to_flow(make_plan(EDGE, [(1.0, (0, 1, 0))]))
    assert pf.flow.weights.tolist() == [0.0] and pf.intensity.tolist() == [2.0]
    assert divergence(pf.flow).is_empty


def test_plan_to_flow_flips_against_orientation():
    pf = plan_to_flow(make_plan(EDGE, [(1.0, (1, 0))]))
    assert pf.flow.network.edges.tolist() == [[1, 0]]
    assert pf.flow.weights.tolist() == [1.0]


def test_flow_to_plan_examples():
    dec = flow_to_plan(make_flow(EDGE, [1.0]), dirac((0, 0)), dirac((1, 0)))
    assert dec.plan.paths == ((0, 1),) and dec.plan.weights.tolist() == [1.0]
    assert not np.any(dec.cycle_residual.weights)

    dec = flow_to_plan(make_flow(Y, [1.0, 0.5, 0.5]), dirac((0, 0)), Y_NU)
    assert dec.plan.paths == ((0, 1, 2), (0, 1, 3))
    assert dec.plan.weights.tolist() == [0.5, 0.5]
    assert not np.any(dec.cycle_residual.weights)
    assert plan_to_flow(dec.plan).intensity[0] == 1.0


def test_flow_to_plan_leaves_circulation():
    # s=0 -> a=1 -> t=2 with triangle a=1 -> b=3 -> c=4 -> a
    net = EmbeddedNetwork.build(
        [(0, 0), (1, 0), (2, 0), (1.5, 1), (0.5, 1)],
        [(1, 3), (3, 4), (4, 1), (0, 1), (1, 2)],
    )
    v = make_flow(net, [0.3, 0.3, 0.3, 1.0, 1.0])
    dec = flow_to_plan(v, dirac((0, 0)), dirac((2, 0)))
    assert dec.plan.paths == ((0, 1, 2),)
    assert dec.plan.weights.tolist() == [1.0]
    assert dec.cycle_residual.weights.tolist() == [0.3, 0.3, 0.3, 0.0, 0.0]


def test_flow_to_plan_rejects_infeasible():
    with pytest.raises(KirchhoffViolation):
        flow_to_plan(make_flow(EDGE, [1.0]), dirac((0, 0)), dirac((0, 0)))


def test_verify_examples():
    r = verify_equivalence(make_plan(Y, [(0.5, (0, 1, 2)), (0.5, (0, 1, 3))]), alpha=0.5)
    assert r.costs_equal and r.intensity_equals_flow
    r = verify_equivalence(make_plan(EDGE, [(0.5, (0, 1)), (0.5, (1, 0))]), alpha=0.5)
    assert r.I_alpha == 1.0 and r.M_alpha == 0.0
    assert not r.costs_equal and not r.intensity_equals_flow


def test_verify_with_flow():
    p = make_plan(EDGE, [(1.0, (0, 1))])
    assert verify_equivalence(p, make_flow(EDGE, [1.0])).flow_matches
    assert not verify_equivalence(p, make_flow(EDGE, [0.5])).flow_matches


@given(seeds)
@settings(max_examples=150, deadline=None)
def test_plan_flow_properties(seed):
    p = random_plan(np.random.default_rng(seed))
    pf = plan_to_flow(p)
    mu, nu = marginals(p)
    assert check_kirchhoff(pf.flow, mu, nu, 1e-12)
    assert np.all(pf.flow.weights <= pf.intensity + 1e-15)
    r = verify_equivalence(p, alpha=0.5)
    assert r.M_alpha <= r.I_alpha * (1 + 1e-12)


@given(seeds)
@settings(max_examples=150, deadline=None)
def test_acyclic_roundtrip(seed):
    v, mu, nu, _ = feasible_flow(np.random.default_rng(seed), circulation=False)
    # separate curves can still chain into a directed cycle
    v = cancel_cycles(v)
    dec = flow_to_plan(v, mu, nu)
    assert not np.any(dec.cycle_residual.weights)
    assert is_simple(dec.plan).all_simple
    back = plan_to_flow(dec.plan).flow
    assert np.allclose((back - v).weights, 0.0, atol=1e-9, rtol=0)


@given(seeds)
@settings(max_examples=150, deadline=None)
def test_decomposition_with_circulation(seed):
    v, mu, nu, _ = feasible_flow(np.random.default_rng(seed))
    dec = flow_to_plan(v, mu, nu)
    assert is_simple(dec.plan).all_simple
    assert np.allclose((dec.reconstruction() - v).weights, 0.0, atol=1e-9, rtol=0)
    assert divergence(dec.cycle_residual, 1e-12).is_empty
    net = v.network
    intensity = per_segment(net, plan_to_flow(dec.plan).intensity)
    assert np.all(intensity <= per_segment(net, v.weights) + 1e-12)
    pf = plan_to_flow(dec.plan)
    for a in (0.5, 0.9):
        assert irrigation_cost(dec.plan, a) == pytest.approx(gilbert_energy(pf.flow, a), rel=1e-9)
