"""Simulate hand-built robots and compare how far they crawl.

Every voxel becomes a lumped mass; neighboring voxels are joined by
damped springs.  Muscle voxels rhythmically change the rest lengths of
their springs (materials A and B run in counter-phase), the ground
pushes back with a stiff penalty force, and Coulomb friction lets the
body grip.  Fitness is simply how far the center of mass travels
horizontally, measured in voxel edge lengths.

Run:  python3 demos/02_locomotion_playground.py
"""

import numpy as np

from growbots.grid import CellState, Morphology
from growbots.physics import MaterialParams, PhysicsConfig, evaluate_locomotion

S, H, A, B = (
    CellState.SOFT_PASSIVE,
    CellState.HARD_PASSIVE,
    CellState.MUSCLE_A,
    CellState.MUSCLE_B,
)


def body(rows) -> Morphology:
    """Rows are written top to bottom; flip them into (x, y) index order."""
    arr = np.asarray(rows, dtype=np.int8)
    return Morphology(np.flipud(arr).T.copy())


ROBOTS = {
    "passive block (control)": body(
        [
            [S, S, S],
            [S, S, S],
        ]
    ),
    "two-muscle crawler": body(
        [
            [0, S, S, 0],
            [0, A, B, 0],
        ]
    ),
    "asymmetric walker": body(
        [
            [S, S, 0],
            [S, A, B],
        ]
    ),
    "long galloper": body(
        [
            [S, S, S, S, S],
            [A, B, 0, A, B],
        ]
    ),
}


def main():
    mat = MaterialParams()
    pc = PhysicsConfig()
    duration = 0.25
    print(f"simulating {pc.steps_for(duration)} actuated steps "
          f"({duration} s at dt={pc.dt}), actuation {pc.frequency} Hz\n")

    print(f"{'robot':28s} {'voxels':>6s} {'distance':>9s}")
    best_name, best = None, None
    for name, m in ROBOTS.items():
        result = evaluate_locomotion(m, mat, pc, duration, sample_every=250)
        print(f"{name:28s} {result.live_voxel_count:6d} {result.distance:9.3f}")
        if best is None or result.distance > best.distance:
            best_name, best = name, result

    # the winner's center of mass, sampled every 250 steps
    traj = best.trajectory
    print(f"\n'{best_name}' center-of-mass track ({len(traj)} samples):")
    print(f"  {'t (s)':>7s} {'x (voxels)':>11s}")
    edge = pc.edge
    x0 = traj[0, 1]
    for row in traj[:: max(1, len(traj) // 6)]:
        print(f"  {row[0]:7.3f} {(row[1] - x0) / edge:11.3f}")


if __name__ == "__main__":
    main()
