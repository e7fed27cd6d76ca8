"""Shared test helpers: synthetic gain matrices and dense eigen oracles."""

import numpy as np
import pytest

from twotier.channel import GainMatrix


def dense_rho(m) -> float:
    """Spectral radius via the dense eigensolver (test oracle only)."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def random_gain_matrix(rng, n_femto: int, cross_scale: float = 1e-3) -> GainMatrix:
    """Synthetic raw gains with positive cross links and dominant own links.

    Own gains sit around 1e-8, cross gains a few orders below, which keeps
    target assignments in the usual dB ranges feasible-ish.
    """
    n1 = n_femto + 1
    own = 10.0 ** rng.uniform(-9.0, -7.0, size=n1)
    raw = np.outer(own, np.ones(n1)) * cross_scale * 10.0 ** rng.uniform(-2.0, 0.0, size=(n1, n1))
    raw[np.arange(n1), np.arange(n1)] = own
    return GainMatrix.from_raw(raw)


def reachable(adjacency: np.ndarray) -> bool:
    """Strong connectivity of the positive-entry digraph (BFS both ways)."""
    a = adjacency > 0
    n = a.shape[0]

    def bfs(mat):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for i in frontier:
                for j in np.nonzero(mat[i])[0]:
                    if not seen[j]:
                        seen[j] = True
                        nxt.append(j)
            frontier = nxt
        return bool(seen.all())

    return bfs(a) and bfs(a.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
