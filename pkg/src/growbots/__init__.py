"""Grow voxel soft robots with neural cellular automata, evolve them
for locomotion, and regrow them after damage.

The pipeline: a shared per-cell network grows a morphology from a single
seed cell on a small lattice (`grid`, `networks`); a mass-spring engine
scores how far the robot walks (`physics`); a genetic algorithm searches
network weights (`evolution`); damage and regrowth experiments compare
original, damaged, and regrown robots (`regeneration`).  Presets, file
formats, and the command line live in `config`, `fileio`, and `cli`.
"""

from .config import (RunConfig, build_evaluator, config_from_json, config_hash,
                     config_to_json, fitness_of, preset_config)
from .evolution import (CheckpointState, EvalRecord, EvalResult, EvoConfig,
                        EvoHistory, FitnessKind, GenerationStats, GrowthPipeline,
                        LocomotionEvaluator, evolve, mutate, next_generation,
                        select_truncation)
from .grid import (CellGrid, CellState, ConfigError, Maturity, Morphology,
                   classify_maturity, cleanup, develop, develop_step, init_grid,
                   lattice_from_text, lattice_to_text, morphology_from_text,
                   morphology_to_grid, morphology_to_text)
from .networks import (Genome, Network, NetworkArchitecture, Variant,
                       individual_rng, param_count, random_genome)
from .physics import (LocomotionResult, MaterialParams, PhysicsConfig,
                      PhysicsWorld, ReplayResult, SimulationDiverged,
                      actuation_factor, build_world, center_of_mass,
                      evaluate_locomotion, replay_locomotion, run_world,
                      step_world, total_energy)
from .regeneration import (DamageSpec, RecoveryReport, RegenerationEvaluator,
                           SimilarityEvaluator, apply_damage, damage_morphology,
                           evolve_regeneration, hamming, recovery_report,
                           regrow, similarity)

__version__ = "0.1.0"

__all__ = [
    "CellGrid", "CellState", "CheckpointState", "ConfigError", "DamageSpec",
    "EvalRecord", "EvalResult", "EvoConfig", "EvoHistory", "FitnessKind",
    "GenerationStats", "Genome", "GrowthPipeline", "LocomotionEvaluator",
    "LocomotionResult", "MaterialParams", "Maturity", "Morphology", "Network",
    "NetworkArchitecture", "PhysicsConfig", "PhysicsWorld", "RecoveryReport",
    "RegenerationEvaluator", "ReplayResult", "RunConfig", "SimilarityEvaluator",
    "SimulationDiverged", "Variant",
    "actuation_factor", "apply_damage", "build_evaluator", "build_world",
    "center_of_mass", "classify_maturity", "cleanup", "config_from_json",
    "config_hash", "config_to_json", "damage_morphology", "develop",
    "develop_step", "evaluate_locomotion", "evolve", "evolve_regeneration",
    "fitness_of", "hamming", "individual_rng", "init_grid", "lattice_from_text",
    "lattice_to_text", "morphology_from_text", "morphology_to_grid",
    "morphology_to_text", "mutate", "next_generation", "param_count",
    "preset_config", "random_genome", "recovery_report", "regrow",
    "replay_locomotion", "run_world", "select_truncation", "similarity",
    "step_world", "total_energy", "__version__",
]
