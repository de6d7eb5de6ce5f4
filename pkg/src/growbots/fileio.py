"""File formats: genomes, checkpoints, training logs, trajectories,
replay frames, morphology text, and run manifests.

Structured files are JSON, tabular logs CSV, lattice dumps the digit
grid text format.  Every format carries a version tag and readers
reject unknown versions instead of misparsing.  Floats survive a
round-trip bit-exactly (JSON and repr both emit shortest-round-trip
decimal).
"""

from __future__ import annotations

import csv
import json
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .evolution import CheckpointState, EvalRecord, GenerationStats
from .grid import Morphology, morphology_from_text, morphology_to_text
from .networks import Genome, NetworkArchitecture, Variant
from .physics import LocomotionResult, ReplayResult

GENOME_FORMAT = "growbots-genome"
CHECKPOINT_FORMAT = "growbots-checkpoint"
FRAMES_FORMAT = "growbots-frames"
MANIFEST_FORMAT = "growbots-manifest"
TRAJECTORY_HEADER = "# growbots-trajectory v1"
TRACE_HEADER = "# growbots-grid-trace v1"
FORMAT_VERSION = 1
RNG_SCHEME = "philox-keyed-by-seed-and-(generation<<32|index)"


class FormatError(ValueError):
    """A file failed format, version, or schema validation."""


def _read_json(path: str | os.PathLike) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top level must be a JSON object")
    return data


def _check_format(data: dict, expected: str, path) -> None:
    fmt = data.get("format")
    if fmt != expected:
        raise FormatError(f"{path}: expected format {expected!r}, found {fmt!r}")
    version = data.get("version")
    if version != FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported {expected} version {version!r}; "
            f"this build reads version {FORMAT_VERSION}"
        )


def _write_json(path: str | os.PathLike, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def _arch_to_dict(arch: NetworkArchitecture) -> dict:
    return {
        "variant": arch.variant.value,
        "input_dim": arch.input_dim,
        "hidden_dim": arch.hidden_dim,
        "output_dim": arch.output_dim,
    }


def _arch_from_dict(data: dict, path) -> NetworkArchitecture:
    try:
        return NetworkArchitecture(
            variant=Variant(data["variant"]),
            input_dim=int(data["input_dim"]),
            hidden_dim=int(data["hidden_dim"]),
            output_dim=int(data["output_dim"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: bad architecture block: {exc}") from None


def save_genome(path: str | os.PathLike, genome: Genome) -> None:
    _write_json(path, {
        "format": GENOME_FORMAT,
        "version": FORMAT_VERSION,
        "architecture": _arch_to_dict(genome.arch),
        "params": genome.params.tolist(),
    })


def load_genome(path: str | os.PathLike) -> Genome:
    data = _read_json(path)
    _check_format(data, GENOME_FORMAT, path)
    arch = _arch_from_dict(data.get("architecture", {}), path)
    params = data.get("params")
    if not isinstance(params, list):
        raise FormatError(f"{path}: params must be a list of numbers")
    try:
        vec = np.asarray(params, dtype=np.float64)
        return Genome(arch, vec)
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from None


def save_checkpoint(path: str | os.PathLike, state: CheckpointState,
                    cfg_hash: str, seed: int) -> None:
    arch = state.population[0].arch
    _write_json(path, {
        "format": CHECKPOINT_FORMAT,
        "version": FORMAT_VERSION,
        "config_hash": cfg_hash,
        "seed": seed,
        "rng_scheme": RNG_SCHEME,
        "generation": state.generation,
        "architecture": _arch_to_dict(arch),
        "population": [g.params.tolist() for g in state.population],
        "stats": [
            [s.generation, s.best, s.mean, s.min, s.best_live_voxels]
            for s in state.stats
        ],
        "records": [
            [r.generation, r.individual_index, r.fitness, r.live_voxel_count,
             r.rng_stream_id, r.diverged]
            for r in state.records
        ],
        "best": None if state.best_genome is None else {
            "fitness": state.best_fitness,
            "generation": state.best_generation,
            "index": state.best_index,
            "params": state.best_genome.params.tolist(),
        },
    })


def load_checkpoint(path: str | os.PathLike) -> tuple[CheckpointState, str, int]:
    """Returns (state, stored config hash, stored seed)."""
    data = _read_json(path)
    _check_format(data, CHECKPOINT_FORMAT, path)
    if data.get("rng_scheme") != RNG_SCHEME:
        raise FormatError(f"{path}: unknown rng scheme {data.get('rng_scheme')!r}")
    arch = _arch_from_dict(data.get("architecture", {}), path)
    try:
        population = [Genome(arch, np.asarray(p, dtype=np.float64))
                      for p in data["population"]]
        stats = [GenerationStats(int(g), float(b), float(m), float(mn), int(v))
                 for g, b, m, mn, v in data["stats"]]
        records = [EvalRecord(int(g), int(i), float(f), int(v), int(s), bool(dv))
                   for g, i, f, v, s, dv in data["records"]]
        best = data["best"]
        if best is None:
            best_genome, best_fitness = None, -float("inf")
            best_generation, best_index = -1, -1
        else:
            best_genome = Genome(arch, np.asarray(best["params"], dtype=np.float64))
            best_fitness = float(best["fitness"])
            best_generation = int(best["generation"])
            best_index = int(best["index"])
        state = CheckpointState(
            generation=int(data["generation"]),
            population=population,
            stats=stats,
            records=records,
            best_genome=best_genome,
            best_fitness=best_fitness,
            best_generation=best_generation,
            best_index=best_index,
        )
        return state, str(data["config_hash"]), int(data["seed"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: malformed checkpoint: {exc}") from None


TRAINING_LOG_COLUMNS = ("generation", "best", "mean", "min", "best_live_voxels")


def write_training_log(path: str | os.PathLike, stats: list[GenerationStats]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRAINING_LOG_COLUMNS)
        for s in stats:
            writer.writerow([s.generation, repr(s.best), repr(s.mean), repr(s.min),
                             s.best_live_voxels])


def read_training_log(path: str | os.PathLike) -> list[GenerationStats]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != TRAINING_LOG_COLUMNS:
        raise FormatError(f"{path}: not a training log (bad header)")
    try:
        return [
            GenerationStats(int(g), float(b), float(m), float(mn), int(v))
            for g, b, m, mn, v in rows[1:]
        ]
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: malformed row: {exc}") from None


def write_trajectory(path: str | os.PathLike, result: LocomotionResult) -> None:
    """COM trajectory CSV with a distance footer; the result must carry
    a sampled trajectory."""
    if result.trajectory is None:
        raise ValueError("result has no sampled trajectory")
    lines = [TRAJECTORY_HEADER, "t,com_x,com_y,com_z"]
    for row in result.trajectory:
        lines.append(",".join(repr(float(x)) for x in row))
    lines.append(f"# distance {result.distance!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path: str | os.PathLike) -> tuple[np.ndarray, float]:
    """Returns (rows, distance) from a trajectory CSV."""
    text = Path(path).read_text().splitlines()
    if not text or text[0] != TRAJECTORY_HEADER:
        raise FormatError(f"{path}: not a trajectory file")
    rows = []
    distance = None
    for line in text[2:]:
        if line.startswith("# distance "):
            distance = float(line.split(" ", 2)[2])
        elif line:
            rows.append([float(x) for x in line.split(",")])
    if distance is None:
        raise FormatError(f"{path}: missing distance footer")
    return np.asarray(rows), distance


def write_frames(path: str | os.PathLike, replay: ReplayResult, edge: float) -> None:
    _write_json(path, {
        "format": FRAMES_FORMAT,
        "version": FORMAT_VERSION,
        "edge": edge,
        "times": replay.times.tolist(),
        "positions": replay.positions.tolist(),
    })


def save_morphology(path: str | os.PathLike, m: Morphology) -> None:
    Path(path).write_text(morphology_to_text(m))


def load_morphology(path: str | os.PathLike) -> Morphology:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read: {exc.strerror or exc}") from None
    try:
        return morphology_from_text(text)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_grow_trace(path: str | os.PathLike, grids) -> None:
    """Development trajectory dump: one digit-grid block per step."""
    from .grid import lattice_to_text
    parts = [TRACE_HEADER]
    for step, grid in enumerate(grids):
        parts.append(f"# step {step}")
        parts.append(lattice_to_text(grid.state, header=False).rstrip("\n"))
    Path(path).write_text("\n".join(parts) + "\n")


def write_manifest(path: str | os.PathLike, cfg_hash: str,
                   files: dict[str, str | os.PathLike]) -> None:
    """Run manifest; only files that exist at write time are listed.

    The created timestamp honors SOURCE_DATE_EPOCH so outputs can be
    made byte-reproducible; without it the manifest is the one run
    artifact whose bytes vary between runs.
    """
    from . import __version__
    existing = {
        name: str(p) for name, p in files.items() if Path(p).exists()
    }
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        created = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        created = datetime.now(timezone.utc)
    _write_json(path, {
        "format": MANIFEST_FORMAT,
        "version": FORMAT_VERSION,
        "config_hash": cfg_hash,
        "code_version": __version__,
        "created": created.isoformat(),
        "files": existing,
    })
