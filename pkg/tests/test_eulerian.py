import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randgen import feasible_flow, random_flow
from ramified.errors import AlphaOutOfRange, InvalidNetwork, UnmatchedAtom
from ramified.eulerian import (
    EmbeddedNetwork,
    FlowField,
    cancel_cycles,
    canonicalize,
    check_kirchhoff,
    divergence,
    find_cycle,
    gilbert_energy,
    make_flow,
    net_outflow,
)
from ramified.measures import dirac, make_measure

seeds = st.integers(0, 2**32 - 1)


def flow(vertices, edges, weights):
    return make_flow(EmbeddedNetwork.build(vertices, edges), weights)


def y_flow(bx=0.5):
    return flow([(0, 0), (bx, 0), (1, 1), (1, -1)], [(0, 1), (1, 2), (1, 3)], [1.0, 0.5, 0.5])


def triangle(w=1.0):
    return flow([(0, 0), (1, 0), (0, 1)], [(0, 1), (1, 2), (2, 0)], [w, w, w])


def test_single_edge_energy():
    assert gilbert_energy(flow([(0, 0), (1, 0)], [(0, 1)], [1.0]), 0.5) == 1.0


def test_two_half_edges():
    v = flow([(0, 0), (1, 0), (0, 1)], [(0, 1), (0, 2)], [0.5, 0.5])
    assert gilbert_energy(v, 0.5) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_alpha_zero_counts_only_positive_edges():
    v = flow([(0, 0), (1, 0), (0, 2)], [(0, 1), (0, 2)], [0.5, 0.0])
    assert gilbert_energy(v, 0.0) == 1.0


def test_alpha_range():
    with pytest.raises(AlphaOutOfRange):
        gilbert_energy(triangle(), 1.5)


def test_v_versus_optimal_y():
    # At alpha = 1/2 the best branch point sits on the source, so the
    # optimal Y is the V itself and the energies coincide.
    vee = flow([(0, 0), (1, 1), (1, -1)], [(0, 1), (0, 2)], [0.5, 0.5])
    grid = np.linspace(0.0, 1.0, 10001)
    ys = [gilbert_energy(vee, 0.5)] + [gilbert_energy(y_flow(b), 0.5) for b in grid[1:]]
    assert min(ys) == pytest.approx(gilbert_energy(vee, 0.5), abs=1e-12)
    # below 1/2 a genuine branch beats the V
    ys = [gilbert_energy(y_flow(b), 0.3) for b in grid[1:]]
    assert min(ys) < gilbert_energy(vee, 0.3) - 1e-3


def test_divergence_examples():
    d = divergence(flow([(0, 0), (1, 0)], [(0, 1)], [1.0]))
    assert list(d.positive) == [((0.0, 0.0), 1.0)]
    assert list(d.negative) == [((1.0, 0.0), 1.0)]
    assert divergence(triangle()).is_empty
    d = divergence(y_flow())
    assert list(d.positive) == [((0.0, 0.0), 1.0)]
    assert sorted(d.negative) == [((1.0, -1.0), 0.5), ((1.0, 1.0), 0.5)]


def test_kirchhoff_examples():
    v = flow([(0, 0), (1, 0)], [(0, 1)], [1.0])
    assert check_kirchhoff(v, dirac((0, 0)), dirac((1, 0)))
    r = check_kirchhoff(v, dirac((0, 0)), dirac((0, 0)))
    assert not r.ok
    assert list(np.abs(r.residual)) == [1.0, 1.0]
    nu = make_measure([((1, 1), 0.5), ((1, -1), 0.5)])
    assert check_kirchhoff(y_flow(), dirac((0, 0)), nu)
    with pytest.raises(UnmatchedAtom):
        check_kirchhoff(v, dirac((0, 0)), dirac((3, 3)))


def test_find_cycle_examples():
    assert find_cycle(y_flow()) is None
    assert find_cycle(triangle()) == [0, 1, 2]
    # diamond s->a->t, s->b->t plus a<->b
    v = flow(
        [(0, 0), (1, 1), (1, -1), (2, 0)],
        [(0, 1), (1, 3), (0, 2), (2, 3), (1, 2), (2, 1)],
        [0.5, 0.5, 0.5, 0.5, 0.2, 0.2],
    )
    cyc = find_cycle(v)
    assert sorted(cyc) == [4, 5]
    edges = v.network.edges
    assert all(v.weights[e] > 0 for e in cyc)
    assert all(edges[cyc[i], 1] == edges[cyc[(i + 1) % len(cyc)], 0] for i in range(len(cyc)))


def test_cancel_cycles_examples():
    assert cancel_cycles(y_flow()) == y_flow()
    assert not np.any(cancel_cycles(triangle()).weights)
    # path 0->1->2 weight 1, plus cycle 1->2->3->1 weight 0.3 sharing edge 1->2
    v = flow([(0, 0), (1, 0), (2, 0), (1.5, 1)], [(0, 1), (1, 2), (2, 3), (3, 1)], [1.0, 1.3, 0.3, 0.3])
    w = cancel_cycles(v)
    assert list(w.weights) == [1.0, 1.0, 0.0, 0.0]
    for a in (0.1, 0.5, 0.9):
        assert gilbert_energy(w, a) < gilbert_energy(v, a)


def test_make_flow_flips_negative_edges():
    v = make_flow(EmbeddedNetwork.build([(0, 0), (1, 0)], [(0, 1)]), [-2.0])
    assert v.network.edges.tolist() == [[1, 0]]
    assert v.weights.tolist() == [2.0]


def test_make_flow_keeps_antiparallel_pairs():
    net = EmbeddedNetwork.build([(0, 0), (1, 0)], [(0, 1), (1, 0)])
    v = make_flow(net, [-0.5, 0.25])
    assert v.weights.tolist() == [0.0, 0.75]


def test_network_validation():
    with pytest.raises(InvalidNetwork):
        EmbeddedNetwork.build([(0, 0), (0, 0)], [])
    with pytest.raises(InvalidNetwork):
        EmbeddedNetwork.build([(0, 0), (1, 0)], [(0, 0)])
    with pytest.raises(InvalidNetwork):
        EmbeddedNetwork.build([(0, 0), (1, 0)], [(0, 1), (0, 1)])
    with pytest.raises(InvalidNetwork):
        EmbeddedNetwork.build([(0, 0), (1, 0)], [(0, 2)])
    with pytest.raises(InvalidNetwork):
        FlowField(EmbeddedNetwork.build([(0, 0), (1, 0)], [(0, 1)]), [-1.0])


def test_canonicalize_drops_zero_edges():
    v = flow([(0, 0), (1, 0), (2, 0)], [(0, 1), (1, 2)], [1.0, 0.0])
    c = canonicalize(v)
    assert c.network.n_edges == 1 and c.network.n_vertices == 3


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_cancel_cycles_properties(seed):
    v = random_flow(np.random.default_rng(seed))
    w = cancel_cycles(v)
    assert find_cycle(w) is None
    assert np.all(w.weights <= v.weights)
    assert np.allclose(net_outflow(w), net_outflow(v), atol=1e-12, rtol=0)
    for a in (0.0, 0.5, 1.0):
        assert gilbert_energy(w, a) <= gilbert_energy(v, a) + 1e-12


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_energy_non_increasing_in_alpha_for_subunit_weights(seed):
    v, *_ = feasible_flow(np.random.default_rng(seed), circulation=False)
    # plan flows carry at most the total mass 1 on any edge
    costs = [gilbert_energy(v, a) for a in np.linspace(0, 1, 11)]
    assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_flow_roundtrip(seed):
    v = random_flow(np.random.default_rng(seed))
    back = FlowField.from_dict(json.loads(json.dumps(v.to_dict())))
    assert back == v
