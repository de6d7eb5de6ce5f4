"""Mass-spring voxel physics for locomotion evaluation.

One lumped point mass per voxel center; springs along face, planar
diagonal, and cube diagonal neighbor pairs; semi-implicit Euler with
gravity, an elastic ground penalty, Coulomb friction, per-spring
relative-velocity damping, and a global velocity damping factor.  Muscle
voxels drive spring rest lengths through a shared sinusoid; the two
muscle materials run in counter-phase.

The inner loop is a numba kernel.  Forces are accumulated per mass by
gathering over its Moore neighbors, with +x/-x (and in 3D +y/-y)
contributions summed pairwise before entering the accumulator.  Because
IEEE addition is commutative, a morphology mirrored across a vertical
plane then simulates as the exact bit-level mirror of the original, and
travels exactly the same distance.  Positions are therefore centered on
the lattice midplane along horizontal axes.

Vertical is the last lattice axis (y in 2D, z in 3D).  Worlds embed both
lattice sizes in 3-component arrays; for 2D the third component stays 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .grid import CellState, Morphology


class SimulationDiverged(RuntimeError):
    """A position or velocity went non-finite during integration."""

    def __init__(self, step_index: int, phase: str = "run", morphology: Morphology | None = None):
        super().__init__(f"simulation diverged at step {step_index} ({phase})")
        self.step_index = step_index
        self.phase = phase
        self.morphology = morphology


@dataclass(frozen=True)
class MaterialParams:
    """Per-material spring and actuation parameters, indexed by
    (state code - 1): soft passive, hard passive, muscle A, muscle B."""

    stiffness: tuple[float, float, float, float] = (500.0, 5000.0, 1000.0, 1000.0)
    amplitude: tuple[float, float, float, float] = (0.0, 0.0, 0.2, 0.2)
    phase: tuple[float, float, float, float] = (0.0, 0.0, 0.0, math.pi)
    voxel_mass: tuple[float, float, float, float] = (1e-3, 1e-3, 1e-3, 1e-3)

    def __post_init__(self):
        if self.amplitude[0] != 0.0 or self.amplitude[1] != 0.0:
            raise ValueError("passive materials must have zero actuation amplitude")
        if self.stiffness[1] <= self.stiffness[0]:
            raise ValueError("hard passive must be stiffer than soft passive")
        if any(m <= 0 for m in self.voxel_mass) or any(k <= 0 for k in self.stiffness):
            raise ValueError("masses and stiffnesses must be positive")

    def of(self, state: int) -> tuple[float, float, float, float]:
        """(stiffness, amplitude, phase, mass) of a non-empty state."""
        if not 1 <= int(state) <= 4:
            raise ValueError(f"state {state} has no material")
        i = int(state) - 1
        return (self.stiffness[i], self.amplitude[i], self.phase[i], self.voxel_mass[i])


@dataclass(frozen=True)
class PhysicsConfig:
    dt: float = 1e-4                 # s
    gravity: float = 9.81            # m/s^2, downward
    ground_stiffness: float = 1e4    # N/m penalty on penetration
    friction: float = 1.0            # Coulomb coefficient
    spring_damping: float = 0.1      # damping ratio per spring
    global_damping: float = 0.01     # per-step velocity multiplier is (1 - this)
    frequency: float = 40.0          # actuation Hz
    edge: float = 0.01               # voxel edge length, m
    settle_time: float = 0.1         # s of unactuated settling
    ground: bool = True
    stick_speed: float = 2e-3        # m/s below which static friction can latch

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.edge <= 0:
            raise ValueError("edge must be positive")

    def steps_for(self, duration: float) -> int:
        return int(round(duration / self.dt))


@dataclass
class Springs:
    """Explicit spring list (i < j), kept for inspection and energy."""

    endpoints: np.ndarray   # (S, 2) int64
    rest0: np.ndarray       # (S,) natural length, m
    stiffness: np.ndarray   # (S,) N/m
    damping: np.ndarray     # (S,) N s/m
    act_sin: np.ndarray     # (S,) coefficient of sin(w t) in the rest factor
    act_cos: np.ndarray     # (S,) coefficient of cos(w t)

    def __len__(self) -> int:
        return int(self.endpoints.shape[0])


@dataclass
class PhysicsWorld:
    positions: np.ndarray          # (N, 3) m
    velocities: np.ndarray         # (N, 3) m/s
    masses: np.ndarray             # (N,) kg
    materials: np.ndarray          # (N,) int8 state codes
    voxel_coords: np.ndarray       # (N, ndim) lattice coordinates
    springs: Springs
    ndim: int
    config: PhysicsConfig
    time: float = 0.0
    # kernel tables: per-mass neighbor slots and per-slot spring parameters
    nbr: np.ndarray = field(default=None, repr=False)
    slot_k: np.ndarray = field(default=None, repr=False)
    slot_rest: np.ndarray = field(default=None, repr=False)
    slot_damp: np.ndarray = field(default=None, repr=False)
    slot_sc: np.ndarray = field(default=None, repr=False)
    slot_ss: np.ndarray = field(default=None, repr=False)
    groups: np.ndarray = field(default=None, repr=False)

    @property
    def n_masses(self) -> int:
        return int(self.positions.shape[0])

    @property
    def vertical_axis(self) -> int:
        return self.ndim - 1


def _slot_offsets(ndim: int) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor offsets (embedded in 3 components) and mirror-safe groups.

    Each group row holds up to four slot indices (-1 padded); its force is
    combined as (f0 + f1) + (f2 + f3), which swaps cleanly under a flip of
    any horizontal axis.
    """
    offsets: list[tuple[int, int, int]] = []
    groups: list[list[int]] = []

    def add(slots: list[tuple[int, int, int]]):
        row = []
        for off in slots:
            row.append(len(offsets))
            offsets.append(off)
        groups.append(row + [-1] * (4 - len(row)))

    if ndim == 2:
        for dy in (-1, 0, 1):
            add([(1, dy, 0), (-1, dy, 0)])
        add([(0, -1, 0)])
        add([(0, 1, 0)])
    else:
        for dz in (-1, 0, 1):
            add([(1, 1, dz), (-1, 1, dz), (1, -1, dz), (-1, -1, dz)])
            add([(1, 0, dz), (-1, 0, dz)])
            add([(0, 1, dz), (0, -1, dz)])
            if dz != 0:
                add([(0, 0, dz)])
    return (
        np.asarray(offsets, dtype=np.int64),
        np.asarray(groups, dtype=np.int64),
    )


def _pair_params(
    mat: MaterialParams, state_a: int, state_b: int, zeta: float
) -> tuple[float, float, float, float]:
    """Stiffness (harmonic mean), damping coefficient, and actuation
    sin/cos coefficients for a spring between two materials."""
    ka, aa, pa, ma = mat.of(state_a)
    kb, ab, pb, mb = mat.of(state_b)
    k = 2.0 * ka * kb / (ka + kb)
    m_red = ma * mb / (ma + mb)
    c = 2.0 * zeta * math.sqrt(k * m_red)
    sc = 0.5 * (aa * math.cos(pa) + ab * math.cos(pb))
    ss = 0.5 * (aa * math.sin(pa) + ab * math.sin(pb))
    return k, c, sc, ss


def build_world(m: Morphology, mat: MaterialParams, pc: PhysicsConfig) -> PhysicsWorld:
    """Assemble masses and springs for a morphology resting on the ground.

    Horizontal coordinates are centered on the lattice midplane; the
    vertical coordinate is shifted so the lowest masses sit at height 0.
    """
    nd = m.ndim
    coords = np.argwhere(m.voxels != CellState.EMPTY)
    n = coords.shape[0]
    states = m.voxels[tuple(coords.T)].astype(np.int8) if n else np.zeros(0, np.int8)

    positions = np.zeros((n, 3), dtype=np.float64)
    masses = np.empty(n, dtype=np.float64)
    vert = nd - 1
    base = coords[:, vert].min() if n else 0
    for axis in range(nd):
        if axis == vert:
            positions[:, axis] = (coords[:, axis] - base) * pc.edge
        else:
            center = (m.dims[axis] - 1) / 2.0
            positions[:, axis] = (coords[:, axis] - center) * pc.edge
    for i in range(n):
        masses[i] = mat.of(states[i])[3]

    index_of = -np.ones(m.dims, dtype=np.int64)
    for i in range(n):
        index_of[tuple(coords[i])] = i

    offsets, groups = _slot_offsets(nd)
    n_off = offsets.shape[0]
    nbr = -np.ones((n, n_off), dtype=np.int64)
    slot_k = np.zeros((n, n_off), dtype=np.float64)
    slot_rest = np.zeros((n, n_off), dtype=np.float64)
    slot_damp = np.zeros((n, n_off), dtype=np.float64)
    slot_sc = np.zeros((n, n_off), dtype=np.float64)
    slot_ss = np.zeros((n, n_off), dtype=np.float64)

    ep: list[tuple[int, int]] = []
    s_rest: list[float] = []
    s_k: list[float] = []
    s_c: list[float] = []
    s_sc: list[float] = []
    s_ss: list[float] = []

    for i in range(n):
        for slot in range(n_off):
            off = offsets[slot, :nd]
            nb = coords[i] + off
            if np.any(nb < 0) or np.any(nb >= np.asarray(m.dims)):
                continue
            j = index_of[tuple(nb)]
            if j < 0:
                continue
            k, c, sc, ss = _pair_params(mat, states[i], states[j], pc.spring_damping)
            rest = pc.edge * math.sqrt(float(np.dot(off, off)))
            nbr[i, slot] = j
            slot_k[i, slot] = k
            slot_rest[i, slot] = rest
            slot_damp[i, slot] = c
            slot_sc[i, slot] = sc
            slot_ss[i, slot] = ss
            if i < j:
                ep.append((i, j))
                s_rest.append(rest)
                s_k.append(k)
                s_c.append(c)
                s_sc.append(sc)
                s_ss.append(ss)

    springs = Springs(
        endpoints=np.asarray(ep, dtype=np.int64).reshape(-1, 2),
        rest0=np.asarray(s_rest, dtype=np.float64),
        stiffness=np.asarray(s_k, dtype=np.float64),
        damping=np.asarray(s_c, dtype=np.float64),
        act_sin=np.asarray(s_sc, dtype=np.float64),
        act_cos=np.asarray(s_ss, dtype=np.float64),
    )
    return PhysicsWorld(
        positions=positions,
        velocities=np.zeros((n, 3), dtype=np.float64),
        masses=masses,
        materials=states,
        voxel_coords=coords.astype(np.int64),
        springs=springs,
        ndim=nd,
        config=pc,
        time=0.0,
        nbr=nbr,
        slot_k=slot_k,
        slot_rest=slot_rest,
        slot_damp=slot_damp,
        slot_sc=slot_sc,
        slot_ss=slot_ss,
        groups=groups,
    )


def actuation_factor(state: int, t: float, mat: MaterialParams, pc: PhysicsConfig) -> float:
    """Instantaneous rest-length factor 1 + A sin(2 pi f t + phase).

    A spring's actuated rest length is its natural length times the mean
    of its two endpoint factors.
    """
    _, amp, phase, _ = mat.of(state)
    return 1.0 + amp * math.sin(2.0 * math.pi * pc.frequency * t + phase)


@njit(cache=True)
def _slot_force(pos, vel, m, j, k, rest0, c, sc, ss, sw, cw):  # pragma: no cover
    if j < 0:
        return 0.0, 0.0, 0.0
    dx = pos[m, 0] - pos[j, 0]
    dy = pos[m, 1] - pos[j, 1]
    dz = pos[m, 2] - pos[j, 2]
    length = math.sqrt(dx * dx + dy * dy + dz * dz)
    rest = rest0 * (1.0 + sc * sw + ss * cw)
    vx = vel[m, 0] - vel[j, 0]
    vy = vel[m, 1] - vel[j, 1]
    vz = vel[m, 2] - vel[j, 2]
    vdot = (vx * dx + vy * dy + vz * dz) / length
    coef = -(k * (length - rest) + c * vdot) / length
    return coef * dx, coef * dy, coef * dz


@njit(cache=True)
def _run_kernel(
    pos, vel, mass, nbr, slot_k, slot_rest, slot_damp, slot_sc, slot_ss,
    groups, n_steps, t0, dt, gravity, vert,
    k_ground, mu, stick_speed, global_damping, omega, actuate, ground_on,
):  # pragma: no cover
    n = pos.shape[0]
    n_groups = groups.shape[0]
    forces = np.zeros((n, 3))
    stick = np.zeros(n, dtype=np.bool_)
    t = t0
    for step in range(n_steps):
        if actuate:
            sw = math.sin(omega * t)
            cw = math.cos(omega * t)
        else:
            sw = 0.0
            cw = 0.0
        for m in range(n):
            fx = 0.0
            fy = 0.0
            fz = 0.0
            for g in range(n_groups):
                s0 = groups[g, 0]
                f0x, f0y, f0z = _slot_force(
                    pos, vel, m, nbr[m, s0], slot_k[m, s0], slot_rest[m, s0],
                    slot_damp[m, s0], slot_sc[m, s0], slot_ss[m, s0], sw, cw,
                )
                s1 = groups[g, 1]
                if s1 >= 0:
                    f1x, f1y, f1z = _slot_force(
                        pos, vel, m, nbr[m, s1], slot_k[m, s1], slot_rest[m, s1],
                        slot_damp[m, s1], slot_sc[m, s1], slot_ss[m, s1], sw, cw,
                    )
                else:
                    f1x = f1y = f1z = 0.0
                s2 = groups[g, 2]
                if s2 >= 0:
                    f2x, f2y, f2z = _slot_force(
                        pos, vel, m, nbr[m, s2], slot_k[m, s2], slot_rest[m, s2],
                        slot_damp[m, s2], slot_sc[m, s2], slot_ss[m, s2], sw, cw,
                    )
                    s3 = groups[g, 3]
                    f3x, f3y, f3z = _slot_force(
                        pos, vel, m, nbr[m, s3], slot_k[m, s3], slot_rest[m, s3],
                        slot_damp[m, s3], slot_sc[m, s3], slot_ss[m, s3], sw, cw,
                    )
                else:
                    f2x = f2y = f2z = 0.0
                    f3x = f3y = f3z = 0.0
                fx += (f0x + f1x) + (f2x + f3x)
                fy += (f0y + f1y) + (f2y + f3y)
                fz += (f0z + f1z) + (f2z + f3z)

            if vert == 1:
                fy -= mass[m] * gravity
            else:
                fz -= mass[m] * gravity

            stick[m] = False
            if ground_on:
                height = pos[m, vert]
                if height < 0.0:
                    fn = -k_ground * height
                    if vert == 1:
                        fy += fn
                    else:
                        fz += fn
                    # Coulomb friction on the horizontal components
                    if vert == 1:
                        hx, hz = vel[m, 0], vel[m, 2]
                        gx, gz = fx, fz
                    else:
                        hx, hz = vel[m, 0], vel[m, 1]
                        gx, gz = fx, fy
                    speed = math.sqrt(hx * hx + hz * hz)
                    limit = mu * fn
                    if speed < stick_speed:
                        fh = math.sqrt(gx * gx + gz * gz)
                        if fh <= limit:
                            stick[m] = True
                            gx = 0.0
                            gz = 0.0
                        else:
                            scale = 1.0 - limit / fh
                            gx *= scale
                            gz *= scale
                    else:
                        gx -= limit * hx / speed
                        gz -= limit * hz / speed
                    if vert == 1:
                        fx, fz = gx, gz
                    else:
                        fx, fy = gx, gz

            forces[m, 0] = fx
            forces[m, 1] = fy
            forces[m, 2] = fz

        keep = 1.0 - global_damping
        check = 0.0
        for m in range(n):
            if stick[m]:
                if vert == 1:
                    vel[m, 0] = 0.0
                    vel[m, 2] = 0.0
                else:
                    vel[m, 0] = 0.0
                    vel[m, 1] = 0.0
            inv = dt / mass[m]
            for c in range(3):
                v = (vel[m, c] + forces[m, c] * inv) * keep
                vel[m, c] = v
                pos[m, c] += v * dt
                check += pos[m, c]
        t += dt
        if not math.isfinite(check):
            return step, t
    return -1, t


def run_world(world: PhysicsWorld, n_steps: int, actuate: bool = True) -> None:
    """Advance the world in place by ``n_steps`` of semi-implicit Euler."""
    if n_steps <= 0:
        return
    pc = world.config
    if world.n_masses == 0:
        world.time += n_steps * pc.dt
        return
    omega = 2.0 * math.pi * pc.frequency
    diverged, t = _run_kernel(
        world.positions, world.velocities, world.masses,
        world.nbr, world.slot_k, world.slot_rest, world.slot_damp,
        world.slot_sc, world.slot_ss, world.groups,
        n_steps, world.time, pc.dt, pc.gravity, world.vertical_axis,
        pc.ground_stiffness, pc.friction, pc.stick_speed,
        pc.global_damping, omega, actuate, pc.ground,
    )
    world.time = t
    if diverged >= 0:
        raise SimulationDiverged(diverged)


def step_world(world: PhysicsWorld, actuate: bool = True) -> PhysicsWorld:
    """Single integration step (in place); returns the world for chaining."""
    run_world(world, 1, actuate=actuate)
    return world


def center_of_mass(world: PhysicsWorld) -> np.ndarray:
    if world.n_masses == 0:
        raise ValueError("center of mass of an empty world is undefined")
    # fsum is correctly rounded, so the result does not depend on mass
    # enumeration order and mirrored worlds get exactly mirrored centers.
    total = math.fsum(world.masses)
    weighted = world.masses[:, None] * world.positions
    return np.array([math.fsum(weighted[:, c]) for c in range(3)]) / total


def total_energy(world: PhysicsWorld) -> float:
    """Kinetic + spring elastic + gravitational + ground elastic energy,
    with actuation ignored (natural rest lengths)."""
    pc = world.config
    energy = 0.5 * float(np.sum(world.masses[:, None] * world.velocities**2))
    s = world.springs
    if len(s):
        delta = world.positions[s.endpoints[:, 0]] - world.positions[s.endpoints[:, 1]]
        length = np.sqrt((delta**2).sum(axis=1))
        energy += 0.5 * float(np.sum(s.stiffness * (length - s.rest0) ** 2))
    height = world.positions[:, world.vertical_axis]
    energy += pc.gravity * float(np.sum(world.masses * height))
    if pc.ground:
        pen = np.minimum(height, 0.0)
        energy += 0.5 * pc.ground_stiffness * float(np.sum(pen**2))
    return energy


@dataclass
class LocomotionResult:
    distance: float                  # horizontal COM displacement, voxel lengths
    live_voxel_count: int
    trajectory: np.ndarray | None = None   # (frames, 4): t, com x, com y, com z


def evaluate_locomotion(
    m: Morphology,
    mat: MaterialParams,
    pc: PhysicsConfig,
    duration: float,
    sample_every: int | None = None,
) -> LocomotionResult:
    """Settle a morphology with actuation off, then measure how far its
    center of mass travels horizontally during ``duration`` seconds of
    actuated simulation, in voxel lengths.

    ``sample_every`` records the center of mass every that many actuated
    steps (step 0 included) into the result trajectory.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    count = m.voxel_count
    if count == 0:
        traj = None
        if sample_every:
            traj = np.zeros((1, 4))
        return LocomotionResult(0.0, 0, traj)

    world = build_world(m, mat, pc)
    try:
        run_world(world, pc.steps_for(pc.settle_time), actuate=False)
    except SimulationDiverged as exc:
        raise SimulationDiverged(exc.step_index, "settle", m) from None

    world.time = 0.0
    start = center_of_mass(world)
    n_steps = pc.steps_for(duration)
    samples: list[np.ndarray] = []

    def sample():
        com = center_of_mass(world)
        row = np.zeros(4)
        row[0] = world.time
        row[1 : 1 + 3] = com
        samples.append(row)

    try:
        if sample_every:
            done = 0
            sample()
            while done < n_steps:
                chunk = min(sample_every, n_steps - done)
                run_world(world, chunk, actuate=True)
                done += chunk
                if done % sample_every == 0:
                    sample()
        else:
            run_world(world, n_steps, actuate=True)
    except SimulationDiverged as exc:
        raise SimulationDiverged(exc.step_index, "actuated", m) from None

    end = center_of_mass(world)
    horizontal = [c for c in range(3) if c != world.vertical_axis]
    delta = end[horizontal] - start[horizontal]
    distance = float(np.sqrt(np.sum(delta**2))) / pc.edge
    trajectory = np.asarray(samples) if samples else None
    return LocomotionResult(distance, count, trajectory)


@dataclass
class ReplayResult:
    result: LocomotionResult
    times: np.ndarray        # (frames,)
    positions: np.ndarray    # (frames, n_masses, 3), meters


def replay_locomotion(
    m: Morphology,
    mat: MaterialParams,
    pc: PhysicsConfig,
    duration: float,
    sample_every: int,
) -> ReplayResult:
    """Like evaluate_locomotion with sampling, but also records every
    mass position at each sampled frame for offline animation.

    Frame count is floor(steps / sample_every) + 1, the initial settled
    state included.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be at least 1")
    if m.voxel_count == 0:
        result = LocomotionResult(0.0, 0, np.zeros((1, 4)))
        return ReplayResult(result, np.zeros(1), np.zeros((1, 0, 3)))

    world = build_world(m, mat, pc)
    try:
        run_world(world, pc.steps_for(pc.settle_time), actuate=False)
    except SimulationDiverged as exc:
        raise SimulationDiverged(exc.step_index, "settle", m) from None
    world.time = 0.0
    start = center_of_mass(world)

    n_steps = pc.steps_for(duration)
    times, frames, coms = [], [], []

    def sample():
        times.append(world.time)
        frames.append(world.positions.copy())
        com = center_of_mass(world)
        coms.append(np.concatenate(([world.time], com)))

    sample()
    done = 0
    try:
        while done + sample_every <= n_steps:
            run_world(world, sample_every, actuate=True)
            done += sample_every
            sample()
        if done < n_steps:
            run_world(world, n_steps - done, actuate=True)
            done = n_steps
    except SimulationDiverged as exc:
        raise SimulationDiverged(exc.step_index, "actuated", m) from None

    end = center_of_mass(world)
    horizontal = [c for c in range(3) if c != world.vertical_axis]
    delta = end[horizontal] - start[horizontal]
    distance = float(np.sqrt(np.sum(delta**2))) / pc.edge
    result = LocomotionResult(distance, m.voxel_count, np.asarray(coms))
    return ReplayResult(result, np.asarray(times), np.stack(frames))
