"""Damage, regrowth, and recovery reporting.

A damage spec clears every cell strictly on one side of an axis plane
(state, alpha, and any recurrent memory).  A separate regeneration
network then develops the damaged grid for a few steps, and the cleaned
result is compared against the original morphology with an exact
voxel-similarity count.  The recovery report runs locomotion for the
original, damaged, and regrown morphologies and renders the familiar
three-column comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolution import (EvalResult, EvoConfig, EvoHistory, FitnessKind,
                        GrowthPipeline, evolve)
from .grid import CellGrid, ConfigError, Morphology, cleanup, develop
from .networks import Genome, Network, NetworkArchitecture
from .physics import (MaterialParams, PhysicsConfig, SimulationDiverged,
                      evaluate_locomotion)

AXIS_NAMES = "xyz"


@dataclass(frozen=True)
class DamageSpec:
    axis: int            # 0=x, 1=y, 2=z
    side: str            # "low" or "high"
    plane_index: int     # cells strictly beyond this coordinate are cleared

    def __post_init__(self):
        if self.side not in ("low", "high"):
            raise ConfigError(f"side must be 'low' or 'high', got {self.side!r}")

    @classmethod
    def from_axis_name(cls, axis: str, side: str, plane_index: int) -> "DamageSpec":
        if axis not in AXIS_NAMES:
            raise ConfigError(f"axis must be one of x, y, z, got {axis!r}")
        return cls(AXIS_NAMES.index(axis), side, plane_index)

    def removed_mask(self, dims: tuple[int, ...]) -> np.ndarray:
        """Boolean mask of cleared lattice positions."""
        if not 0 <= self.axis < len(dims):
            raise ConfigError(f"axis {self.axis} out of range for {len(dims)}-D lattice")
        if not 0 < self.plane_index < dims[self.axis] - 1:
            raise ConfigError(
                f"plane index {self.plane_index} is not strictly inside axis "
                f"{AXIS_NAMES[self.axis]} of size {dims[self.axis]}"
            )
        coord = np.arange(dims[self.axis])
        line = coord < self.plane_index if self.side == "low" else coord > self.plane_index
        shape = [1] * len(dims)
        shape[self.axis] = dims[self.axis]
        return np.broadcast_to(line.reshape(shape), dims).copy()


def apply_damage(grid: CellGrid, spec: DamageSpec) -> CellGrid:
    """Clear state, alpha, and memory on the removed side; everything
    else (including intact-side memories) is untouched."""
    removed = spec.removed_mask(grid.dims)
    out = grid.copy()
    out.state[removed] = 0
    out.alpha[removed] = 0.0
    if out.memory_h is not None:
        out.memory_h[removed] = 0.0
        out.memory_c[removed] = 0.0
    return out


def damage_morphology(m: Morphology, spec: DamageSpec) -> Morphology:
    """Damage applied directly to a morphology (for locomotion of the
    damaged robot before any regrowth)."""
    voxels = m.voxels.copy()
    voxels[spec.removed_mask(m.dims)] = 0
    return Morphology(voxels=voxels)


def similarity(a: Morphology, b: Morphology) -> int:
    """Number of lattice positions (frame included) with identical
    material state."""
    if a.dims != b.dims:
        raise ValueError(f"dims differ: {a.dims} vs {b.dims}")
    return int(np.count_nonzero(a.voxels == b.voxels))


def hamming(a: Morphology, b: Morphology) -> int:
    """Complement of similarity: positions whose states differ."""
    if a.dims != b.dims:
        raise ValueError(f"dims differ: {a.dims} vs {b.dims}")
    return int(np.count_nonzero(a.voxels != b.voxels))


def regrow(damaged: CellGrid, net: Network, steps: int = 10) -> Morphology:
    """Develop the damaged grid with the regeneration network, then
    clean up.  The intact side's states, alphas, and memories are the
    starting condition."""
    return cleanup(develop(damaged, net, steps)[-1])


@dataclass(frozen=True)
class RegenerationEvaluator:
    """Fitness = similarity(regrow(damaged template, candidate), original)."""

    damaged: CellGrid
    original: Morphology
    steps: int = 10

    def __call__(self, genome: Genome) -> EvalResult:
        morphology = regrow(self.damaged, Network(genome), self.steps)
        return EvalResult(float(similarity(morphology, self.original)),
                          morphology.voxel_count)


@dataclass(frozen=True)
class SimilarityEvaluator:
    """Grow-from-seed similarity fitness (no damage involved)."""

    pipeline: GrowthPipeline
    target: Morphology

    def __call__(self, genome: Genome) -> EvalResult:
        morphology = self.pipeline.grow(genome)
        return EvalResult(float(similarity(morphology, self.target)),
                          morphology.voxel_count)


def do_nothing_baseline(damaged: CellGrid, original: Morphology) -> int:
    """Similarity floor scored by a candidate that changes nothing."""
    return similarity(cleanup(damaged), original)


def evolve_regeneration(
    original: Morphology,
    damaged_template: CellGrid,
    cfg: EvoConfig,
    arch: NetworkArchitecture,
    regrow_steps: int = 10,
    **evolve_kwargs,
) -> EvoHistory:
    """Evolve a regeneration network against a fixed damaged grid."""
    if cfg.fitness_kind is not FitnessKind.SIMILARITY:
        raise ValueError("evolve_regeneration requires the similarity fitness kind")
    evaluator = RegenerationEvaluator(damaged_template, original, regrow_steps)
    return evolve(cfg, arch, evaluator, **evolve_kwargs)


def format_percent(ratio: float) -> str:
    """Render a ratio as a floored percentage, keeping one decimal below
    10% so small recoveries do not round to nothing."""
    percent = ratio * 100.0
    if percent < 10.0:
        return f"{math.floor(percent * 10.0) / 10.0:.1f}%"
    return f"{math.floor(percent):.0f}%"


@dataclass
class RecoveryReport:
    similarity_count: int
    total_cells: int
    distance_original: float
    distance_damaged: float
    distance_regrown: float

    @property
    def similarity_fraction(self) -> float:
        return self.similarity_count / self.total_cells

    @property
    def recovery_damaged(self) -> float | None:
        if self.distance_original == 0.0:
            return None
        return self.distance_damaged / self.distance_original

    @property
    def recovery_regrown(self) -> float | None:
        if self.distance_original == 0.0:
            return None
        return self.distance_regrown / self.distance_original

    def _cell(self, distance: float, recovery: float | None) -> str:
        mark = "n/a" if recovery is None else format_percent(recovery)
        return f"{distance:.1f} ({mark})"

    def table(self) -> str:
        """Three-column comparison row, similarity line first."""
        lines = [
            f"Morphology similarity: {format_percent(self.similarity_fraction)} "
            f"({self.similarity_count}/{self.total_cells})",
            "Locomotion distance (voxel lengths):",
            "  Original | Damaged | Regrown",
            f"  {self.distance_original:.1f} | "
            f"{self._cell(self.distance_damaged, self.recovery_damaged)} | "
            f"{self._cell(self.distance_regrown, self.recovery_regrown)}",
        ]
        return "\n".join(lines)

    def to_dict(self, name: str = "robot", variant: str = "") -> dict:
        return {
            "name": name,
            "variant": variant,
            "similarity_count": self.similarity_count,
            "total_cells": self.total_cells,
            "similarity_percent": format_percent(self.similarity_fraction),
            "distance_original": self.distance_original,
            "distance_damaged": self.distance_damaged,
            "distance_regrown": self.distance_regrown,
            "recovery_damaged": self.recovery_damaged,
            "recovery_regrown": self.recovery_regrown,
            "recovery_damaged_percent":
                None if self.recovery_damaged is None else format_percent(self.recovery_damaged),
            "recovery_regrown_percent":
                None if self.recovery_regrown is None else format_percent(self.recovery_regrown),
        }


def recovery_report(
    original: Morphology,
    damaged: Morphology,
    regrown: Morphology,
    mat: MaterialParams,
    pc: PhysicsConfig,
    duration: float,
) -> RecoveryReport:
    """Evaluate locomotion of all three morphologies under one config
    and assemble the comparison.  A diverging run counts as distance
    0.0, matching the fitness rule."""
    if not (original.dims == damaged.dims == regrown.dims):
        raise ValueError("morphologies must share lattice dims")

    def distance(m: Morphology) -> float:
        if m.voxel_count == 0:
            return 0.0
        try:
            return evaluate_locomotion(m, mat, pc, duration).distance
        except SimulationDiverged:
            return 0.0

    return RecoveryReport(
        similarity_count=similarity(original, regrown),
        total_cells=int(np.prod(original.dims)),
        distance_original=distance(original),
        distance_damaged=distance(damaged),
        distance_regrown=distance(regrown),
    )
