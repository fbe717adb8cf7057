"""Shared fixtures: solved profiles are expensive, so cache per session."""

import pytest

from bergerfill.shooter import solve

_CACHE = {}


def solved(phi0):
    if phi0 not in _CACHE:
        _CACHE[phi0] = solve(phi0)
    return _CACHE[phi0]


@pytest.fixture(scope="session")
def solve_cached():
    return solved
