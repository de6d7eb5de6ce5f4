"""Grow a voxel robot from a single seed cell.

A growth network is a tiny neural net shared by every lattice cell.  Each
developmental step, every cell looks at its Moore neighborhood (state and
maturity of the 8 surrounding cells plus itself) and the network decides
what the cell becomes next.  Ten steps later the lattice is cleaned up
(diagonal-only contacts and isolated voxels removed) and the result is a
simulable morphology.

Run:  python3 demos/01_grow_a_robot.py
"""

import numpy as np

from growbots.grid import cleanup, develop, init_grid
from growbots.networks import (
    NetworkArchitecture,
    Network,
    Variant,
    individual_rng,
    random_genome,
)

LATTICE = (9, 9)
SEED_POS = (4, 4)
MASTER_SEED = 22
CHARS = ".sHAB"  # empty, soft, hard, muscle A, muscle B


def render(state: np.ndarray) -> str:
    """ASCII picture with the vertical axis pointing up."""
    rows = []
    for y in reversed(range(state.shape[1])):
        rows.append("  " + "".join(CHARS[int(state[x, y])] for x in range(state.shape[0])))
    return "\n".join(rows)


def main():
    arch = NetworkArchitecture.for_lattice(2, Variant.FEED_FORWARD)
    genome = random_genome(arch, individual_rng(MASTER_SEED, 0, 0), scale=0.6)
    print(f"growth network: {arch.variant.value}, {genome.params.size} parameters")

    grid = init_grid(LATTICE, SEED_POS)
    history = develop(grid, Network(genome), steps=10)

    print("\nlive cells per developmental step:")
    counts = [int(np.count_nonzero(g.living_mask())) for g in history]
    print("  " + " -> ".join(str(c) for c in counts))

    for step in (0, 3, 6, 10):
        g = history[step]
        live = np.where(g.living_mask(), g.state, 0)
        print(f"\nafter step {step}:")
        print(render(live))

    body = cleanup(history[-1])
    print(f"\ncleaned morphology: {body.voxel_count} voxels")
    print(render(body.voxels))
    legend = {"s": "soft passive", "H": "hard passive", "A": "muscle A", "B": "muscle B"}
    print("\nlegend: " + ", ".join(f"{k} = {v}" for k, v in legend.items()))


if __name__ == "__main__":
    main()
