"""Evolve growth networks whose robots crawl as far as possible.

A population of growth networks starts as small random weights, so most
early robots are tiny or do not move at all.  Truncation selection keeps
the top fifth, children are mutated copies of survivors, and one elite
is carried over verbatim, which makes the best fitness non-decreasing.
Everything is seeded, so rerunning this script reproduces the exact
same numbers.

This is a miniature of the full experiment (the `2d` preset runs a
population of 300 for 500 generations); it finishes in about a minute.

Run:  python3 demos/03_evolve_locomotion.py
"""

from dataclasses import replace

import numpy as np

from growbots.config import build_evaluator, preset_config
from growbots.evolution import evolve
from growbots.grid import cleanup, develop, init_grid
from growbots.networks import Network

CHARS = ".sHAB"


def render(voxels: np.ndarray) -> str:
    rows = []
    for y in reversed(range(voxels.shape[1])):
        rows.append("  " + "".join(CHARS[int(voxels[x, y])] for x in range(voxels.shape[0])))
    return "\n".join(rows)


def main():
    rc = preset_config("2d", seed=7)
    rc = replace(rc, evo=replace(rc.evo, population_size=20, generations=30))
    print(f"lattice {rc.growth.dims}, population {rc.evo.population_size}, "
          f"{rc.evo.generations} generations, mutation sigma {rc.evo.sigma}")

    history = evolve(rc.evo, rc.growth.arch, build_evaluator(rc))

    print("\ngeneration | best | mean")
    for s in history.stats:
        if s.generation % 5 == 0 or s.generation == len(history.stats) - 1:
            print(f"{s.generation:10d} | {s.best:5.2f} | {s.mean:5.2f}")

    print(f"\nchampion: generation {history.best_generation}, "
          f"distance {history.best_fitness:.3f} voxel lengths")

    grid = init_grid(rc.growth.dims, rc.growth.seed_pos)
    grown = develop(grid, Network(history.best_genome), rc.growth.dev_steps)[-1]
    body = cleanup(grown)
    print(f"champion morphology ({body.voxel_count} voxels):")
    print(render(body.voxels))


if __name__ == "__main__":
    main()
