import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import branch_angle, nested_grid_min, y_cost
from randgen import random_measures
from ramified.errors import AlphaOutOfRange
from ramified.measures import dirac, make_measure
from ramified.optimize import enumerate_topologies, relax_geometry, topology_cost

seeds = st.integers(0, 2**32 - 1)
Y_NU = make_measure([((1, 1), 0.5), ((1, -1), 0.5)])


def y_topology():
    tops = [t for t in enumerate_topologies(dirac((0, 0)), Y_NU, 1) if t.steiner_count == 1]
    assert len(tops) == 1
    return tops[0]


def test_y_at_one_half_branches_at_source():
    res = relax_geometry(y_topology(), 0.5)
    x, fx = nested_grid_min(lambda x: y_cost(x, 0.5), -0.5, 1.0)
    assert res.converged and res.residual < 1e-6
    assert res.cost == pytest.approx(fx, abs=1e-6)
    s = res.steiner_positions[0]
    assert np.allclose(s, [x, 0.0], atol=1e-5)
    assert branch_angle(s[0]) == pytest.approx(90.0, abs=0.01)


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.4])
def test_y_interior_branch_matches_grid_oracle(alpha):
    res = relax_geometry(y_topology(), alpha)
    x, fx = nested_grid_min(lambda x: y_cost(x, alpha), -0.5, 1.0)
    assert x > 0.01
    assert res.cost == pytest.approx(fx, abs=1e-9)
    assert res.steiner_positions[0] == pytest.approx([x, 0.0], abs=1e-5)


def test_alpha_zero_gives_fermat_point():
    res = relax_geometry(y_topology(), 0.0)
    x = 1.0 - 1.0 / math.sqrt(3.0)
    assert res.steiner_positions[0] == pytest.approx([x, 0.0], abs=1e-7)
    assert res.cost == pytest.approx(x + 4.0 / math.sqrt(3.0), abs=1e-10)
    assert branch_angle(x) == pytest.approx(120.0)


def test_alpha_one_collapses_to_direct_transport():
    res = relax_geometry(y_topology(), 1.0)
    assert res.cost == pytest.approx(math.sqrt(2.0), abs=1e-9)


def test_no_steiner_points():
    (t,) = enumerate_topologies(dirac((0, 0)), dirac((2, 0)), 0)
    res = relax_geometry(t, 0.7)
    assert res.cost == 2.0 and res.converged and res.iterations == 0


def test_warm_start_reaches_same_cost():
    t = y_topology()
    init = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, -1.0], [0.9, 0.3]])
    assert relax_geometry(t, 0.3, init=init).cost == pytest.approx(relax_geometry(t, 0.3).cost, abs=1e-9)


def test_iteration_cap_is_reported():
    res = relax_geometry(y_topology(), 0.3, max_iters=1)
    assert not res.converged
    assert res.cost >= relax_geometry(y_topology(), 0.3).cost - 1e-12


def test_alpha_checked():
    with pytest.raises(AlphaOutOfRange):
        relax_geometry(y_topology(), -0.1)


@given(seeds, st.sampled_from([0.0, 0.3, 0.5, 0.8, 1.0]))
@settings(max_examples=60, deadline=None)
def test_relaxation_properties(seed, alpha):
    rng = np.random.default_rng(seed)
    mu, nu = random_measures(rng, int(rng.integers(1, 3)), int(rng.integers(1, 3)))
    tops = list(enumerate_topologies(mu, nu, 2))
    t = tops[int(rng.integers(0, len(tops)))]
    res = relax_geometry(t, alpha)
    assert res.converged
    assert res.residual < 1e-6
    assert all(b <= a + 1e-12 for a, b in zip(res.trace, res.trace[1:]))
    assert res.cost == pytest.approx(topology_cost(t, res.positions, alpha), abs=1e-12)
    # terminals never move
    assert np.array_equal(res.positions[: t.n_terminals], t.terminal_points())
    # convex in the branch points: random perturbations do not beat it
    for _ in range(5):
        P = res.positions.copy()
        P[t.n_terminals :] += rng.normal(scale=0.1, size=P[t.n_terminals :].shape)
        assert topology_cost(t, P, alpha) >= res.cost - 1e-9
