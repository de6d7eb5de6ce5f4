"""Experiment configuration: presets, JSON snapshots, and the hash that
identifies a run.

The three full-scale presets encode the published experiment sizes (2D:
7x7 lattice, population 300, 500 generations; 3D: 9x9x9, population 100,
300 generations, top 20%; regeneration: population 1000, 1000
generations, top 20%).  Each has a desk-scale sibling sized for CI.

A resolved config serializes to JSON and reloads exactly; a run is
reproducible from its snapshot alone.  The config hash covers everything
that defines the experiment but not where or how wide it executes
(output_dir, workers, checkpoint_every are excluded).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

from .evolution import (EvoConfig, FitnessKind, GrowthPipeline,
                        LocomotionEvaluator)
from .grid import ConfigError, Morphology
from .networks import Genome, NetworkArchitecture, Variant
from .physics import MaterialParams, PhysicsConfig

CONFIG_FORMAT = "growbots-config"
CONFIG_VERSION = 1


@dataclass(frozen=True)
class GrowthConfig:
    dims: tuple[int, ...]
    seed_pos: tuple[int, ...]
    dev_steps: int = 10
    variant: Variant = Variant.FEED_FORWARD
    hidden_dim: int = 64

    def __post_init__(self):
        if len(self.dims) not in (2, 3):
            raise ConfigError("lattice must be 2-D or 3-D")
        if len(self.seed_pos) != len(self.dims):
            raise ConfigError("seed position dimensionality must match dims")
        if any(d < 3 for d in self.dims):
            raise ConfigError("every lattice dimension needs an interior, so at least 3")
        if self.dev_steps < 0:
            raise ConfigError("dev_steps must be non-negative")
        if self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be positive")

    @property
    def arch(self) -> NetworkArchitecture:
        return NetworkArchitecture.for_lattice(len(self.dims), self.variant, self.hidden_dim)

    @property
    def pipeline(self) -> GrowthPipeline:
        return GrowthPipeline(self.dims, self.seed_pos, self.arch, self.dev_steps)


@dataclass(frozen=True)
class DamageConfig:
    axis: str = "x"
    side: str = "low"
    plane_index: int = 4

    def __post_init__(self):
        if self.axis not in "xyz":
            raise ConfigError(f"damage axis must be x, y, or z, got {self.axis!r}")
        if self.side not in ("low", "high"):
            raise ConfigError(f"damage side must be low or high, got {self.side!r}")


@dataclass(frozen=True)
class RunConfig:
    growth: GrowthConfig
    evo: EvoConfig
    duration: float
    preset: str | None = None
    seed: int = 0
    output_dir: str = "runs/out"
    workers: int = 1
    checkpoint_every: int = 0
    materials: MaterialParams = field(default_factory=MaterialParams)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    damage: DamageConfig | None = None
    regrow_steps: int = 10
    sample_every: int = 100

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be non-negative")
        if self.sample_every < 1:
            raise ConfigError("sample_every must be at least 1")
        if self.evo.seed != self.seed:
            raise ConfigError("evo.seed must equal the run seed (use with_seed)")

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed, evo=replace(self.evo, seed=seed))


def _evo(seed: int, **kw) -> EvoConfig:
    return EvoConfig(seed=seed, **kw)


def preset_config(name: str, seed: int = 0, output_dir: str | None = None) -> RunConfig:
    """Build one of the named experiment presets."""
    out = output_dir if output_dir is not None else f"runs/{name}"
    if name == "2d":
        return RunConfig(
            growth=GrowthConfig(dims=(7, 7), seed_pos=(3, 3)),
            evo=_evo(seed, population_size=300, generations=500,
                     fitness_kind=FitnessKind.LOCOMOTION_2D),
            duration=0.25, preset=name, seed=seed, output_dir=out,
        )
    if name == "2d-desk":
        return RunConfig(
            growth=GrowthConfig(dims=(7, 7), seed_pos=(3, 3)),
            evo=_evo(seed, population_size=30, generations=30,
                     fitness_kind=FitnessKind.LOCOMOTION_2D),
            duration=0.25, preset=name, seed=seed, output_dir=out,
        )
    if name == "3d":
        return RunConfig(
            growth=GrowthConfig(dims=(9, 9, 9), seed_pos=(4, 4, 4)),
            evo=_evo(seed, population_size=100, generations=300,
                     fitness_kind=FitnessKind.LOCOMOTION_3D),
            duration=0.5, preset=name, seed=seed, output_dir=out,
        )
    if name == "3d-desk":
        return RunConfig(
            growth=GrowthConfig(dims=(9, 9, 9), seed_pos=(4, 4, 4)),
            evo=_evo(seed, population_size=20, generations=20,
                     fitness_kind=FitnessKind.LOCOMOTION_3D),
            duration=0.5, preset=name, seed=seed, output_dir=out,
        )
    if name == "regen":
        return RunConfig(
            growth=GrowthConfig(dims=(9, 9, 9), seed_pos=(4, 4, 4)),
            evo=_evo(seed, population_size=1000, generations=1000,
                     fitness_kind=FitnessKind.SIMILARITY),
            duration=0.5, preset=name, seed=seed, output_dir=out,
            damage=DamageConfig(),
        )
    if name == "regen-desk":
        return RunConfig(
            growth=GrowthConfig(dims=(9, 9, 9), seed_pos=(4, 4, 4)),
            evo=_evo(seed, population_size=100, generations=200,
                     fitness_kind=FitnessKind.SIMILARITY),
            duration=0.5, preset=name, seed=seed, output_dir=out,
            damage=DamageConfig(),
        )
    raise ConfigError(f"unknown preset {name!r}; expected one of "
                      "2d, 2d-desk, 3d, 3d-desk, regen, regen-desk")


PRESET_NAMES = ("2d", "2d-desk", "3d", "3d-desk", "regen", "regen-desk")


def config_to_dict(rc: RunConfig) -> dict:
    d = {
        "format": CONFIG_FORMAT,
        "version": CONFIG_VERSION,
        "preset": rc.preset,
        "seed": rc.seed,
        "output_dir": rc.output_dir,
        "workers": rc.workers,
        "checkpoint_every": rc.checkpoint_every,
        "growth": {
            "dims": list(rc.growth.dims),
            "seed_pos": list(rc.growth.seed_pos),
            "dev_steps": rc.growth.dev_steps,
            "variant": rc.growth.variant.value,
            "hidden_dim": rc.growth.hidden_dim,
        },
        "evo": {
            "population_size": rc.evo.population_size,
            "generations": rc.evo.generations,
            "truncation_fraction": rc.evo.truncation_fraction,
            "elite_count": rc.evo.elite_count,
            "sigma": rc.evo.sigma,
            "fitness_kind": rc.evo.fitness_kind.value,
            "voxel_cost_weight": rc.evo.voxel_cost_weight,
        },
        "materials": asdict(rc.materials),
        "physics": asdict(rc.physics),
        "duration": rc.duration,
        "damage": None if rc.damage is None else asdict(rc.damage),
        "regrow_steps": rc.regrow_steps,
        "sample_every": rc.sample_every,
    }
    for key in ("stiffness", "amplitude", "phase", "voxel_mass"):
        d["materials"][key] = list(d["materials"][key])
    return d


def _take(section: dict, key: str, where: str, default=None, required: bool = False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key {key!r} in {where}")
        return default
    return section.pop(key)


def _no_leftovers(section: dict, where: str):
    if section:
        raise ConfigError(f"unknown key {sorted(section)[0]!r} in {where}")


def config_from_dict(data: dict) -> RunConfig:
    """Strict parse: wrong format/version or unknown keys are errors."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    d = dict(data)
    fmt = _take(d, "format", "config", required=True)
    version = _take(d, "version", "config", required=True)
    if fmt != CONFIG_FORMAT:
        raise ConfigError(f"not a config file (format {fmt!r})")
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}; this build reads "
                          f"version {CONFIG_VERSION}")

    preset = _take(d, "preset", "config")
    base = preset_config(preset) if preset else None

    def section(name: str) -> dict:
        raw = _take(d, name, "config", default={})
        if raw is None:
            return {}
        if not isinstance(raw, dict):
            raise ConfigError(f"section {name!r} must be a JSON object")
        return dict(raw)

    g = section("growth")
    base_g = base.growth if base else None
    if base_g is None and ("dims" not in g or "seed_pos" not in g):
        raise ConfigError("config needs either a preset or growth.dims and growth.seed_pos")
    growth = GrowthConfig(
        dims=tuple(_take(g, "dims", "growth", base_g.dims if base_g else None,
                         required=base_g is None)),
        seed_pos=tuple(_take(g, "seed_pos", "growth", base_g.seed_pos if base_g else None,
                             required=base_g is None)),
        dev_steps=_take(g, "dev_steps", "growth", base_g.dev_steps if base_g else 10),
        variant=Variant(_take(g, "variant", "growth",
                              base_g.variant.value if base_g else Variant.FEED_FORWARD.value)),
        hidden_dim=_take(g, "hidden_dim", "growth", base_g.hidden_dim if base_g else 64),
    )
    _no_leftovers(g, "growth")

    seed = _take(d, "seed", "config", base.seed if base else 0)
    e = section("evo")
    base_e = base.evo if base else None
    evo = EvoConfig(
        population_size=_take(e, "population_size", "evo",
                              base_e.population_size if base_e else None,
                              required=base_e is None),
        generations=_take(e, "generations", "evo",
                          base_e.generations if base_e else None,
                          required=base_e is None),
        truncation_fraction=_take(e, "truncation_fraction", "evo",
                                  base_e.truncation_fraction if base_e else 0.2),
        elite_count=_take(e, "elite_count", "evo", base_e.elite_count if base_e else 1),
        sigma=_take(e, "sigma", "evo", base_e.sigma if base_e else 0.03),
        seed=seed,
        fitness_kind=FitnessKind(_take(e, "fitness_kind", "evo",
                                       base_e.fitness_kind.value if base_e
                                       else FitnessKind.LOCOMOTION_2D.value)),
        voxel_cost_weight=_take(e, "voxel_cost_weight", "evo",
                                base_e.voxel_cost_weight if base_e else 0.05),
    )
    _no_leftovers(e, "evo")

    mats = section("materials")
    base_m = base.materials if base else MaterialParams()
    materials = MaterialParams(
        stiffness=tuple(_take(mats, "stiffness", "materials", base_m.stiffness)),
        amplitude=tuple(_take(mats, "amplitude", "materials", base_m.amplitude)),
        phase=tuple(_take(mats, "phase", "materials", base_m.phase)),
        voxel_mass=tuple(_take(mats, "voxel_mass", "materials", base_m.voxel_mass)),
    )
    _no_leftovers(mats, "materials")

    ph = section("physics")
    base_p = base.physics if base else PhysicsConfig()
    physics = PhysicsConfig(**{
        name: _take(ph, name, "physics", getattr(base_p, name))
        for name in PhysicsConfig.__dataclass_fields__
    })
    _no_leftovers(ph, "physics")

    dmg_raw = _take(d, "damage", "config",
                    asdict(base.damage) if base and base.damage else None)
    damage = None
    if dmg_raw is not None:
        dmg = dict(dmg_raw)
        damage = DamageConfig(
            axis=_take(dmg, "axis", "damage", "x"),
            side=_take(dmg, "side", "damage", "low"),
            plane_index=_take(dmg, "plane_index", "damage", 4),
        )
        _no_leftovers(dmg, "damage")

    rc = RunConfig(
        growth=growth,
        evo=evo,
        duration=_take(d, "duration", "config", base.duration if base else None,
                       required=base is None),
        preset=preset,
        seed=seed,
        output_dir=_take(d, "output_dir", "config", base.output_dir if base else "runs/out"),
        workers=_take(d, "workers", "config", base.workers if base else 1),
        checkpoint_every=_take(d, "checkpoint_every", "config",
                               base.checkpoint_every if base else 0),
        materials=materials,
        physics=physics,
        damage=damage,
        regrow_steps=_take(d, "regrow_steps", "config", base.regrow_steps if base else 10),
        sample_every=_take(d, "sample_every", "config", base.sample_every if base else 100),
    )
    _no_leftovers(d, "config")
    return rc


def config_to_json(rc: RunConfig) -> str:
    return json.dumps(config_to_dict(rc), indent=2) + "\n"


def config_from_json(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


# Excluded from the hash: where the run writes and how wide it executes.
HASH_EXCLUDED_KEYS = ("output_dir", "workers", "checkpoint_every")


def config_hash(rc: RunConfig) -> str:
    d = config_to_dict(rc)
    for key in HASH_EXCLUDED_KEYS:
        d.pop(key, None)
    canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def damage_spec(rc: RunConfig):
    """The lattice damage operation configured for this run."""
    from .regeneration import DamageSpec
    if rc.damage is None:
        raise ConfigError("config has no damage section")
    return DamageSpec.from_axis_name(rc.damage.axis, rc.damage.side, rc.damage.plane_index)


def build_evaluator(rc: RunConfig, target: Morphology | None = None):
    """The fitness evaluator implied by the config's fitness kind."""
    kind = rc.evo.fitness_kind
    if kind is FitnessKind.LOCOMOTION_2D:
        return LocomotionEvaluator(rc.growth.pipeline, rc.materials, rc.physics, rc.duration)
    if kind is FitnessKind.LOCOMOTION_3D:
        return LocomotionEvaluator(rc.growth.pipeline, rc.materials, rc.physics, rc.duration,
                                   voxel_cost_weight=rc.evo.voxel_cost_weight)
    if target is None:
        raise ConfigError("similarity fitness needs a target morphology")
    from .regeneration import SimilarityEvaluator
    return SimilarityEvaluator(rc.growth.pipeline, target)


def fitness_of(genome: Genome, rc: RunConfig, target: Morphology | None = None) -> float:
    """Convenience single-genome fitness under this config."""
    return build_evaluator(rc, target)(genome).fitness
