"""Belief dynamics: jump updates, drift/diffusion, and the generator."""

import numpy as np
import pytest

import levybandits as lb
from levybandits.filtering import (
    apply_generator,
    belief_diffusion,
    belief_drift,
    generator_stencil,
    jump_update,
    learning_rates,
)
from levybandits.model import full_belief, simplex_grid


def test_jump_update_directions(jump_news):
    # extreme increments are bad news, moderate ones good news
    prior = np.array([0.5])
    assert float(jump_update(jump_news, prior, 10.0)[0]) == pytest.approx(0.25)
    assert float(jump_update(jump_news, prior, -10.0)[0]) == pytest.approx(1.0 / 6.0)
    assert float(jump_update(jump_news, prior, 5.0)[0]) == pytest.approx(5.0 / 6.0)
    assert float(jump_update(jump_news, prior, -5.0)[0]) == pytest.approx(0.75)


def test_jump_update_is_bayes_rule(jump_news):
    pi = np.array([0.3])
    post = jump_update(jump_news, pi, 5.0)
    pf = full_belief(pi)
    w = pf * jump_news.atom_rates[:, 2]  # atom order: -10, -5, 5, 10
    assert post == pytest.approx((w / w.sum())[1:])


def test_jump_update_fixes_vertices(jump_news):
    for v in (np.array([0.0]), np.array([1.0])):
        assert jump_update(jump_news, v, 10.0) == pytest.approx(v)


def test_jump_update_rejects_unknown_size(jump_news):
    with pytest.raises(ValueError):
        jump_update(jump_news, np.array([0.5]), 3.0)


def test_jump_update_rejects_zero_probability():
    # only state 1 charges the atom; from the opposite vertex it cannot occur
    m = lb.make_model(states=[(0.0, []), (0.0, [(1.0, 2.0)])], sigma=1.0,
                      safe_payoff=1.0, prior=[0.5, 0.5], k0=0.5, n_players=2)
    with pytest.raises(ValueError):
        jump_update(m, np.array([0.0]), 1.0)


def test_drift_and_diffusion_closed_forms(unit_brownian, jump_news):
    # no jumps: no-news drift vanishes identically
    pts = simplex_grid(1, 10)
    assert np.allclose(belief_drift(unit_brownian, pts), 0.0)
    # L = 1 diffusion reduces to pi (1 - pi) (rho1 - rho0) / sigma
    d = belief_diffusion(unit_brownian, np.array([0.5]))
    assert float(d[0]) == pytest.approx(0.25)
    # equal total rates: no-news drift vanishes even with jumps
    assert np.allclose(belief_drift(jump_news, pts), 0.0)


def test_drift_compensates_jumps():
    # state 1 jumps more often; quiet spells are evidence against the busy
    # state, so the no-news drift pushes the belief toward state 0
    m = lb.make_model(states=[(0.0, []), (0.0, [(1.0, 2.0)])], sigma=1.0,
                      safe_payoff=1.0, prior=[0.5, 0.5], k0=0.5, n_players=2)
    drift = belief_drift(m, np.array([0.5]))
    assert float(drift[0]) == pytest.approx(-0.5 * (2.0 - 1.0))


def test_generator_of_affine_functions_vanishes(jump_news, three_state):
    # beliefs are martingales: the generator kills affine functions of pi
    for model in (jump_news, three_state):
        pts = simplex_grid(model.L, 6)
        interior = pts[(pts.min(axis=1) > 0.01) & (pts.sum(axis=1) < 0.99)]
        for pi in interior[::3]:
            for l in range(model.L):
                val = apply_generator(model, lambda p, l=l: p[..., l], pi)
                assert abs(val) < 1e-7


def test_generator_quadratic_oracle(unit_brownian):
    # u = pi (1 - pi): generator = (1/2) D u'' = -(pi(1-pi) drho / sigma)^2
    pi = np.array([0.5])
    val = apply_generator(unit_brownian, lambda p: p[..., 0] * (1.0 - p[..., 0]), pi,
                          grad=lambda p: np.array([1.0 - 2.0 * p[0]]),
                          hess=lambda p: np.array([[-2.0]]))
    assert val == pytest.approx(-0.0625)
    # finite-difference fallback agrees
    fd = apply_generator(unit_brownian, lambda p: p[..., 0] * (1.0 - p[..., 0]), pi)
    assert fd == pytest.approx(val, abs=1e-8)


def test_generator_jump_part_by_hand(jump_news):
    pi = np.array([0.4])
    u = lambda p: np.cos(3.0 * p[..., 0])
    st = generator_stencil(jump_news, pi)
    # diffusion is informationless here (equal rho), drift is zero (equal rates)
    assert np.allclose(st.diffusion, 0.0)
    assert np.allclose(st.drift, 0.0)
    expected = float(sum(
        st.jump_rates[a] * (u(st.jump_destinations[a]) - u(pi))
        for a in range(jump_news.atom_sizes.size)
    ))
    val = apply_generator(jump_news, u, pi,
                          grad=lambda p: np.array([-3.0 * np.sin(3.0 * p[0])]),
                          hess=lambda p: np.array([[-9.0 * np.cos(3.0 * p[0])]]))
    assert val == pytest.approx(expected, rel=1e-12)


def test_stencil_destinations_match_jump_update(jump_news):
    pi = np.array([0.7])
    st = generator_stencil(jump_news, pi)
    for a, h in enumerate(jump_news.atom_sizes):
        assert st.jump_destinations[a] == pytest.approx(jump_update(jump_news, pi, h))


def test_learning_rates_diffusion_only(unit_brownian):
    lr = learning_rates(unit_brownian)
    assert lr.eta0 == pytest.approx(-0.5)
    assert lr.eta1 == pytest.approx(0.5)
    assert lr.identify_rate0 == 0.0 and lr.identify_rate1 == 0.0
    assert lr.drift_rate(0) == pytest.approx(0.5)


def test_learning_rates_with_common_jumps(jump_news):
    # rho equal: the whole log-odds drift is the jump KL term
    lr = learning_rates(jump_news)
    r0, r1 = jump_news.atom_rates
    kl = float(np.sum(r1 * np.log(r1 / r0)))
    assert lr.eta1 == pytest.approx(kl)
    assert lr.eta0 == pytest.approx(-float(np.sum(r0 * np.log(r0 / r1))))
    assert lr.eta1 == pytest.approx(0.863497622707262)


def test_learning_rates_identifying_atom():
    # an atom only the good state charges reveals it outright
    m = lb.make_model(states=[(0.0, []), (1.0, [(2.0, 0.3)])], sigma=1.0,
                      safe_payoff=0.5, prior=[0.5, 0.5], k0=0.5, n_players=2)
    lr = learning_rates(m)
    assert lr.eta1 is None
    assert lr.identify_rate1 == pytest.approx(0.3)
    assert lr.eta0 is not None  # quiet evidence still drifts state-0 odds
    with pytest.raises(ValueError):
        lr.drift_rate(1)


def test_learning_rates_requires_two_states(three_state):
    with pytest.raises(ValueError):
        learning_rates(three_state)
