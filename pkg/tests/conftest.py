"""Shared model fixtures.

The two-state pair (stiff/soft) differ only in sigma; both have regime
boundaries at pi = 0.25 (no experimentation below) and pi = 0.375 (exclusive
experimentation above), with the risky arm dominant from pi = 0.5.
"""

import os
import pathlib

import pytest

import levybandits as lb

MODELS_DIR = pathlib.Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def two_state():
    return lb.make_model(states=[(0.0, []), (2.0, [])], sigma=0.5,
                         safe_payoff=1.0, prior=[0.5, 0.5], k0=0.5, n_players=2)


@pytest.fixture(scope="session")
def soft_two_state():
    return lb.make_model(states=[(0.0, []), (2.0, [])], sigma=1.0,
                         safe_payoff=1.0, prior=[0.5, 0.5], k0=0.5, n_players=2)


@pytest.fixture(scope="session")
def unit_brownian():
    return lb.load_model(os.path.join(MODELS_DIR, "two_state_brownian.json"))


@pytest.fixture(scope="session")
def three_state():
    return lb.load_model(os.path.join(MODELS_DIR, "three_state.json"))


@pytest.fixture(scope="session")
def jump_news():
    return lb.load_model(os.path.join(MODELS_DIR, "jump_news.json"))


@pytest.fixture(scope="session")
def models_dir():
    return MODELS_DIR
