"""Shared fixtures: the two-component desk quadratic and cached synthetic problems.

The desk problem f_1(w) = (1/2)(w-1)^2, f_2(w) = (1/2)(w+1)^2 has s = L = 1,
minimizer 0, and f* = 1/2, so every hand-derived value in the tests is an
exact dyadic rational.
"""

import numpy as np
import pytest

from finito import QuadraticProblem, SynthSpec, synth_problem


@pytest.fixture
def desk():
    return QuadraticProblem(centers=[[1.0], [-1.0]])


@pytest.fixture(scope="session")
def synth_small():
    """n=40 logistic problem with a tight reference; shared, do not mutate."""
    return synth_problem(SynthSpec(n=40, d=5, target_beta=2.0, seed=0))


@pytest.fixture(scope="session")
def synth_tiny():
    return synth_problem(SynthSpec(n=20, d=3, target_beta=2.0, seed=1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
