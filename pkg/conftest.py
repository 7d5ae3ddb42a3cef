"""Shared pytest fixtures: worked example formulas, configs and random CNF generators."""

import random

import pytest

from satrules.config import SolverConfig
from satrules.core import make_formula
from satrules.rules import Outcome, apply, classify, enumerate_applicable, initial_state
from satrules.trace import CYCLE_FORMULA, EXAMPLE_FORMULA, fixtures


def random_cnf(rng: random.Random, variables: int, clauses: int, width: int = 3):
    """Uniform random width-k CNF over 1..variables (no repeated variable inside a clause)."""
    width = min(width, variables)
    result = []
    for _ in range(clauses):
        picked = rng.sample(range(1, variables + 1), width)
        result.append([v if rng.random() < 0.5 else -v for v in picked])
    return make_formula(result)


def random_walk(system, f0, config, rng: random.Random, max_steps: int = 40):
    """
    Apply randomly chosen applicable rule instances from the initial state.

    Returns the visited states (initial state first) and the applied steps.
    """
    states = [initial_state(system, f0)]
    steps = []
    for _ in range(max_steps):
        state = states[-1]
        if classify(system, state, f0, config) is not Outcome.INTERMEDIATE:
            break
        options = enumerate_applicable(system, state, f0, config)
        if not options:
            break
        step = rng.choice(options)
        steps.append(step)
        states.append(apply(system, state, step, f0, config))
    return states, steps


@pytest.fixture
def example_formula():
    return EXAMPLE_FORMULA


@pytest.fixture
def cycle_formula():
    return CYCLE_FORMULA


@pytest.fixture
def example_config():
    return SolverConfig.for_formula(EXAMPLE_FORMULA, oracle_checks=True)


@pytest.fixture
def worked_examples():
    return fixtures()


@pytest.fixture
def rng():
    return random.Random(20240611)
