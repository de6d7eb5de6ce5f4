"""Damage a robot, then evolve a second network that regrows it.

Damage clears every cell on one side of an axis plane.  The surviving
cells keep their state and maturity, and a dedicated regeneration
network develops the wounded lattice for ten steps.  Fitness here is
morphological similarity: the number of lattice positions whose material
matches the original.  Finally the original, damaged, and regrown bodies
race under the same physics and the recovery report compares them.

This miniature evolves regrowth for a 2-D robot in about a minute.

Run:  python3 demos/04_damage_and_regrow.py
"""

import numpy as np

from growbots.evolution import EvoConfig, FitnessKind
from growbots.grid import CellState, Morphology, morphology_to_grid
from growbots.networks import Network, NetworkArchitecture, Variant
from growbots.physics import MaterialParams, PhysicsConfig
from growbots.regeneration import (
    DamageSpec,
    apply_damage,
    damage_morphology,
    evolve_regeneration,
    recovery_report,
    regrow,
    similarity,
)

CHARS = ".sHAB"


def render(voxels: np.ndarray) -> str:
    rows = []
    for y in reversed(range(voxels.shape[1])):
        rows.append("  " + "".join(CHARS[int(voxels[x, y])] for x in range(voxels.shape[0])))
    return "\n".join(rows)


def target_robot() -> Morphology:
    """A 5x2 torso with counter-phase muscle feet on a 9x9 lattice."""
    S, A, B = CellState.SOFT_PASSIVE, CellState.MUSCLE_A, CellState.MUSCLE_B
    v = np.zeros((9, 9), dtype=np.int8)
    v[2:7, 2:4] = S
    v[2:4, 1] = A
    v[5:7, 1] = B
    return Morphology(voxels=v)


def main():
    original = target_robot()
    spec = DamageSpec.from_axis_name("x", "high", 4)
    damaged = damage_morphology(original, spec)
    print(f"original ({original.voxel_count} voxels):")
    print(render(original.voxels))
    print(f"\ndamage plane: clear every cell with x > {spec.plane_index}")
    print(f"damaged ({damaged.voxel_count} voxels):")
    print(render(damaged.voxels))

    total = int(np.prod(original.dims))
    print(f"\ndo-nothing similarity: {similarity(original, damaged)}/{total}")

    cfg = EvoConfig(
        population_size=64,
        generations=150,
        truncation_fraction=0.2,
        elite_count=1,
        sigma=0.06,
        seed=5,
        fitness_kind=FitnessKind.SIMILARITY,
    )
    arch = NetworkArchitecture.for_lattice(2, Variant.FEED_FORWARD)
    damaged_grid = apply_damage(morphology_to_grid(original), spec)
    print(f"\nevolving a regeneration network "
          f"(pop {cfg.population_size}, {cfg.generations} generations)...")
    history = evolve_regeneration(original, damaged_grid, cfg, arch)

    for s in history.stats:
        if s.generation % 25 == 0 or s.generation == len(history.stats) - 1:
            print(f"  gen {s.generation:3d}: best similarity {s.best:.0f}/{total}")

    regrown = regrow(damaged_grid, Network(history.best_genome))
    print(f"\nregrown ({regrown.voxel_count} voxels):")
    print(render(regrown.voxels))

    report = recovery_report(
        original, damaged, regrown, MaterialParams(), PhysicsConfig(), duration=0.25
    )
    print()
    print(report.table())


if __name__ == "__main__":
    main()
