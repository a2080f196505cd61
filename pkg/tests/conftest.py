"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from fem.basis import FeSpace, PeriodicMesh
from fem.projection import GramOperator
from fem.rlw import assemble_rlw, gaussian, initial_state


@pytest.fixture
def unit_mesh():
    """[0, 1] split into 8 cells."""
    return PeriodicMesh(0.0, 1.0, 8)


@pytest.fixture
def make_space():
    """Factory fixture: make_space(k, n_cells, a=0, b=1)."""
    def _make(k, n_cells, a=0.0, b=1.0):
        return FeSpace(PeriodicMesh(a, b, n_cells), k)
    return _make


@pytest.fixture
def make_gram(make_space):
    """Factory fixture returning a GramOperator for (k, n_cells)."""
    def _make(k, n_cells, a=0.0, b=1.0):
        return GramOperator.build(make_space(k, n_cells, a, b))
    return _make


@pytest.fixture
def sine():
    """sin(2 pi x) and its derivative, periodic on [0, 1]."""
    return (lambda x: np.sin(2.0 * np.pi * np.asarray(x)),
            lambda x: 2.0 * np.pi * np.cos(2.0 * np.pi * np.asarray(x)))


@pytest.fixture
def small_rlw():
    """Factory fixture: unforced RLW system and Gaussian initial state on [-10, 10]."""
    def _make(k=1, n_cells=40, solver="auto"):
        space = FeSpace(PeriodicMesh(-10.0, 10.0, n_cells), k)
        sys_ = assemble_rlw(space, solver=solver)
        return sys_, initial_state(sys_, gaussian)
    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
