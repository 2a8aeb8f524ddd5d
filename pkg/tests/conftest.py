"""Shared pytest configuration: deterministic hypothesis profile and fixtures."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dcopt import generate_instance, lmax_gram

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def small_instance():
    """One shared (40, 100, 5) problem for solver-level tests."""
    return generate_instance(40, 100, 5, seed=11)


@pytest.fixture(scope="session")
def small_L(small_instance):
    est = lmax_gram(small_instance.A)
    assert est.converged
    return est.value


@pytest.fixture()
def rng():
    return np.random.default_rng(0xD1CE)
