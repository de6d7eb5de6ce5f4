import sys

import numpy as np
import pytest

from growbots.grid import CellState
from growbots.networks import NetworkArchitecture, Variant


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance scorecard collected during this run, if any."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "SCORECARD", None) if mod else None
    if lines:
        terminalreporter.section("acceptance scorecard")
        for line in lines:
            terminalreporter.write_line(line)


class ConstNet:
    """Stand-in network emitting one fixed output row for every cell."""

    def __init__(self, ndim: int, state: CellState, alpha: float):
        self.arch = NetworkArchitecture.for_lattice(ndim, Variant.FEED_FORWARD)
        out = np.zeros(6)
        out[int(state)] = 1.0
        out[5] = alpha
        self._row = out
        self.needs_memory = False

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        return np.tile(self._row, (x.shape[0], 1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_grid(rng, dims, alpha_scale=1.0, hidden_dim=None):
    """Random interior occupancy with the frame kept empty."""
    from growbots.grid import CellGrid, interior_mask

    state = np.zeros(dims, dtype=np.int8)
    alpha = np.zeros(dims)
    inner = interior_mask(dims)
    n = int(inner.sum())
    state[inner] = rng.integers(0, 5, size=n).astype(np.int8)
    alpha[inner] = rng.uniform(0.0, alpha_scale, size=n)
    alpha[state == 0] = np.where(rng.uniform(size=(state == 0).sum()) < 0.5,
                                 0.0, alpha[state == 0])
    memory_h = memory_c = None
    if hidden_dim is not None:
        memory_h = rng.normal(size=dims + (hidden_dim,))
        memory_c = rng.normal(size=dims + (hidden_dim,))
        memory_h[~inner] = 0.0
        memory_c[~inner] = 0.0
    return CellGrid(state, alpha, memory_h, memory_c)
