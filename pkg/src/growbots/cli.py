"""Command-line entry points composing growth, evolution, damage, and
replay into file-driven experiments.

Commands: grow, evolve, damage, regrow, report, replay.  Exit codes:
0 success, 2 usage or incompatible inputs, 3 unreadable or schema-invalid
files, 4 simulation divergence, 5 checkpoint/config mismatch.

Given the same input files and seed, every command writes identical
bytes (the manifest's timestamp honors SOURCE_DATE_EPOCH for this).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (PRESET_NAMES, RunConfig, build_evaluator, config_from_json,
                     config_hash, config_to_json, damage_spec, preset_config)
from .evolution import FitnessKind, evolve
from .fileio import (FormatError, load_checkpoint, load_genome, load_morphology,
                     save_checkpoint, save_genome, save_morphology,
                     write_frames, write_grow_trace, write_manifest,
                     write_trajectory, write_training_log)
from .grid import (CellGrid, ConfigError, cleanup, develop, init_grid,
                   morphology_to_grid)
from .networks import Network
from .physics import SimulationDiverged, replay_locomotion
from .regeneration import (apply_damage, damage_morphology, evolve_regeneration,
                           recovery_report, regrow)

OUTPUT_DIR_ENV = "GROWBOTS_OUTPUT_DIR"


class UsageError(Exception):
    pass


class CheckpointMismatch(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run config file")
    p.add_argument("--preset", choices=PRESET_NAMES, help="named experiment preset")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--out", help="output file or directory (command dependent)")
    p.add_argument("--threads", type=int, help="worker process count for evaluation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="growbots",
        description="Grow voxel robots with neural cellular automata, evolve them "
                    "for locomotion, and regrow them after damage.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grow", help="develop a genome into a morphology file")
    p.add_argument("--genome", required=True, help="genome JSON file")
    p.add_argument("--trace", action="store_true",
                   help="also write the step-by-step growth trace")
    _add_common(p)
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("evolve", help="run the genetic algorithm")
    p.add_argument("--resume", action="store_true",
                   help="continue from the checkpoint in the output directory")
    p.add_argument("--target", help="target morphology file (similarity fitness)")
    p.add_argument("--stop-after", type=int, help=argparse.SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("damage", help="apply the configured damage plane to a morphology")
    p.add_argument("--morphology", required=True, help="morphology text file")
    _add_common(p)
    p.set_defaults(func=cmd_damage)

    p = sub.add_parser("regrow", help="develop a damaged morphology with a regeneration genome")
    p.add_argument("--morphology", required=True, help="damaged morphology text file")
    p.add_argument("--genome", required=True, help="regeneration genome JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_regrow)

    p = sub.add_parser("report", help="grow, damage, regrow, and compare locomotion")
    p.add_argument("--genome", required=True, help="original growth genome JSON file")
    p.add_argument("--regen-genome", help="regeneration genome JSON file")
    p.add_argument("--evolve-regen", action="store_true",
                   help="evolve a regeneration genome for the damaged grid")
    p.add_argument("--regen-with-original", action="store_true",
                   help="attempt regrowth with the original genome instead of a "
                        "dedicated regeneration network")
    p.add_argument("--replay-exports", action="store_true",
                   help="write trajectory and frame exports for all three morphologies")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="simulate a morphology and export its trajectory")
    p.add_argument("--morphology", required=True, help="morphology text file")
    _add_common(p)
    p.set_defaults(func=cmd_replay)

    return parser


def _resolve_config(args) -> RunConfig:
    if args.config and args.preset:
        raise UsageError("give either --config or --preset, not both")
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise FormatError(f"{path}: cannot read: {exc.strerror or exc}") from None
        rc = config_from_json(text)
    elif args.preset:
        rc = preset_config(args.preset)
    else:
        raise UsageError("a run needs --config or --preset")
    if args.seed is not None:
        rc = rc.with_seed(args.seed)
    if args.threads is not None:
        rc = replace(rc, workers=args.threads)
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        rc = replace(rc, output_dir=env_dir)
    return rc


def _output_dir(rc: RunConfig, args) -> Path:
    out = Path(args.out) if args.out else Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _output_file(rc: RunConfig, args, default_name: str) -> Path:
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / default_name


def _check_arch(genome, rc: RunConfig, what: str) -> None:
    expected = rc.growth.arch
    if genome.arch != expected:
        raise UsageError(
            f"{what} architecture ({genome.arch.variant.value}, in={genome.arch.input_dim}, "
            f"hidden={genome.arch.hidden_dim}) does not match the configured lattice "
            f"({expected.variant.value}, in={expected.input_dim}, hidden={expected.hidden_dim})"
        )


def _with_stem_suffix(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix + path.suffix)


def cmd_grow(args) -> int:
    rc = _resolve_config(args)
    genome = load_genome(args.genome)
    _check_arch(genome, rc, "genome")
    net = Network(genome)
    hidden = rc.growth.hidden_dim if net.needs_memory else None
    grid = init_grid(rc.growth.dims, rc.growth.seed_pos, hidden_dim=hidden)
    grids = develop(grid, net, rc.growth.dev_steps)
    morphology = cleanup(grids[-1])
    out = _output_file(rc, args, "morphology.txt")
    save_morphology(out, morphology)
    if args.trace:
        trace_path = _with_stem_suffix(out, "_trace")
        write_grow_trace(trace_path, grids)
        print(f"trace: {trace_path}")
    print(f"grew {morphology.voxel_count} voxels -> {out}")
    return 0


def cmd_evolve(args) -> int:
    rc = _resolve_config(args)
    out = _output_dir(rc, args)
    target = load_morphology(args.target) if args.target else None
    if rc.evo.fitness_kind is FitnessKind.SIMILARITY and target is None:
        raise UsageError("similarity fitness needs --target (or use the report command)")
    evaluator = build_evaluator(rc, target)
    cfg_hash = config_hash(rc)
    checkpoint_path = out / "checkpoint.json"

    resume_state = None
    if args.resume:
        state, stored_hash, _seed = load_checkpoint(checkpoint_path)
        if stored_hash != cfg_hash:
            raise CheckpointMismatch(
                f"checkpoint {checkpoint_path} was written by a different config "
                f"(hash {stored_hash[:12]}… vs {cfg_hash[:12]}…)"
            )
        resume_state = state

    history = evolve(
        rc.evo, rc.growth.arch, evaluator,
        workers=rc.workers,
        checkpoint_every=rc.checkpoint_every,
        on_checkpoint=lambda st: save_checkpoint(checkpoint_path, st, cfg_hash, rc.seed),
        resume=resume_state,
        stop_after=args.stop_after,
    )

    (out / "config.json").write_text(config_to_json(rc))
    write_training_log(out / "training_log.csv", history.stats)
    save_genome(out / "best_genome.json", history.best_genome)
    write_manifest(out / "manifest.json", cfg_hash, {
        "config": out / "config.json",
        "training_log": out / "training_log.csv",
        "best_genome": out / "best_genome.json",
        "checkpoint": checkpoint_path,
    })
    state = "finished" if history.completed else "stopped early"
    print(f"{state}: {len(history.stats)} generations, best fitness "
          f"{history.best_fitness:.4f} (gen {history.best_generation}, "
          f"individual {history.best_index}) -> {out}")
    return 0


def cmd_damage(args) -> int:
    rc = _resolve_config(args)
    spec = damage_spec(rc)
    m = load_morphology(args.morphology)
    damaged = damage_morphology(m, spec)
    out = _output_file(rc, args, "damaged.txt")
    save_morphology(out, damaged)
    print(f"damaged: {m.voxel_count} -> {damaged.voxel_count} voxels -> {out}")
    return 0


def _grid_for_regrowth(morphology, rc: RunConfig, net: Network) -> CellGrid:
    hidden = rc.growth.hidden_dim if net.needs_memory else None
    return morphology_to_grid(morphology, alpha=1.0, hidden_dim=hidden)


def cmd_regrow(args) -> int:
    rc = _resolve_config(args)
    damaged = load_morphology(args.morphology)
    genome = load_genome(args.genome)
    _check_arch(genome, rc, "regeneration genome")
    net = Network(genome)
    grid = _grid_for_regrowth(damaged, rc, net)
    regrown = regrow(grid, net, rc.regrow_steps)
    out = _output_file(rc, args, "regrown.txt")
    save_morphology(out, regrown)
    print(f"regrew {damaged.voxel_count} -> {regrown.voxel_count} voxels -> {out}")
    return 0


def _ensure_memory(grid: CellGrid, hidden_dim: int) -> CellGrid:
    if grid.memory_h is not None:
        return grid
    out = grid.copy()
    out.memory_h = np.zeros(grid.dims + (hidden_dim,))
    out.memory_c = np.zeros(grid.dims + (hidden_dim,))
    return out


def cmd_report(args) -> int:
    rc = _resolve_config(args)
    chosen = [bool(args.regen_genome), args.evolve_regen, args.regen_with_original]
    if sum(chosen) != 1:
        raise UsageError("choose exactly one of --regen-genome, --evolve-regen, "
                         "--regen-with-original")
    spec = damage_spec(rc)
    out = _output_dir(rc, args)

    genome = load_genome(args.genome)
    _check_arch(genome, rc, "genome")
    net = Network(genome)
    hidden = rc.growth.hidden_dim if net.needs_memory else None
    seed_grid = init_grid(rc.growth.dims, rc.growth.seed_pos, hidden_dim=hidden)
    grown = develop(seed_grid, net, rc.growth.dev_steps)[-1]
    original = cleanup(grown)

    damaged_m = damage_morphology(original, spec)
    damaged_grid = apply_damage(grown, spec)

    if args.regen_genome:
        regen_genome = load_genome(args.regen_genome)
    elif args.regen_with_original:
        regen_genome = genome
    else:
        if rc.evo.fitness_kind is not FitnessKind.SIMILARITY:
            raise UsageError("--evolve-regen needs a config with similarity fitness "
                             "(for example the regen preset)")
        history = evolve_regeneration(original, damaged_grid, rc.evo, rc.growth.arch,
                                      regrow_steps=rc.regrow_steps, workers=rc.workers)
        regen_genome = history.best_genome
        save_genome(out / "regen_genome.json", regen_genome)
        write_training_log(out / "regen_training_log.csv", history.stats)

    regen_net = Network(regen_genome)
    template = _ensure_memory(damaged_grid, rc.growth.hidden_dim) \
        if regen_net.needs_memory else damaged_grid
    regrown = regrow(template, regen_net, rc.regrow_steps)

    report = recovery_report(original, damaged_m, regrown, rc.materials, rc.physics,
                             rc.duration)
    table = report.table()
    (out / "report.txt").write_text(table + "\n")
    (out / "report.json").write_text(json.dumps(
        report.to_dict(name=Path(args.genome).stem, variant=rc.growth.variant.value),
        indent=2) + "\n")
    for name, m in (("original", original), ("damaged", damaged_m), ("regrown", regrown)):
        save_morphology(out / f"{name}.txt", m)
        if args.replay_exports and m.voxel_count:
            replay = replay_locomotion(m, rc.materials, rc.physics, rc.duration,
                                       rc.sample_every)
            write_trajectory(out / f"{name}_trajectory.csv", replay.result)
            write_frames(out / f"{name}_frames.json", replay, rc.physics.edge)
    print(table)
    print(f"-> {out}")
    return 0


def cmd_replay(args) -> int:
    rc = _resolve_config(args)
    m = load_morphology(args.morphology)
    out = _output_file(rc, args, "trajectory.csv")
    replay = replay_locomotion(m, rc.materials, rc.physics, rc.duration, rc.sample_every)
    write_trajectory(out, replay.result)
    frames_path = _with_stem_suffix(out, "_frames").with_suffix(".json")
    write_frames(frames_path, replay, rc.physics.edge)
    print(f"distance {replay.result.distance:.4f} voxel lengths, "
          f"{len(replay.times)} frames -> {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except CheckpointMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
