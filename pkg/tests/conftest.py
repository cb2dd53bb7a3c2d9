"""Shared fixtures and state factories for the test suite."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random full-rank density matrix via a Ginibre factor."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_commuting_pair(dim: int, rng: np.random.Generator):
    """Two density matrices diagonal in one shared random basis."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, _ = np.linalg.qr(g)
    p1 = rng.dirichlet(np.ones(dim))
    p2 = rng.dirichlet(np.ones(dim))
    return (q * p1) @ q.conj().T, (q * p2) @ q.conj().T
