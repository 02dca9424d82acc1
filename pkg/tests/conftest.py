"""Shared fixtures; the expensive threshold and trace runs are computed once per session."""

from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from neumann_timemap.positive_phase import lambda_star

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SIGMA = 0.25


@pytest.fixture(scope="session")
def lam_star() -> float:
    return lambda_star(SIGMA)


_THRESHOLDS: dict = {}


def threshold_for(factor: float, fold: bool = False):
    """Thresholds at lam = factor * lambda_star(0.25), memoised for the session."""
    from neumann_timemap.solver import thresholds

    key = (factor, fold)
    if key not in _THRESHOLDS:
        _THRESHOLDS[key] = thresholds(factor * lambda_star(SIGMA), SIGMA, fold=fold)
    return _THRESHOLDS[key]


_TRACES: dict = {}


def trace_for(factor: float):
    from neumann_timemap.bifurcation import trace

    if factor not in _TRACES:
        _TRACES[factor] = trace(factor * lambda_star(SIGMA), SIGMA, th=threshold_for(factor))
    return _TRACES[factor]


@pytest.fixture(scope="session")
def thresholds_at():
    return threshold_for


@pytest.fixture(scope="session")
def trace_at():
    return trace_for
