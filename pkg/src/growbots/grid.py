"""Cell lattice for developing voxel robots.

The lattice holds one material state and one maturity value (alpha) per
cell, plus optional per-cell memory vectors when development is driven by
a recurrent network.  All arrays are indexed ``[x, y]`` in 2D and
``[x, y, z]`` in 3D.  "Index order" always means x fastest, then y, then
z; every sequential rule in this module visits cells in that order.

The outer one-cell frame of the lattice is clamped empty (Dirichlet
boundary): no operation ever writes a non-empty state or nonzero alpha
there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

# Alpha above this value makes a cell "living"; exactly at the threshold
# the cell is still only "growing".
LIVING_THRESHOLD = 0.1

N_STATES = 5


class CellState(IntEnum):
    """Voxel material, serialized as the digits 0-4."""

    EMPTY = 0
    SOFT_PASSIVE = 1   # light blue: passive, low stiffness
    HARD_PASSIVE = 2   # dark blue: passive, high stiffness
    MUSCLE_A = 3       # red: actuated
    MUSCLE_B = 4       # green: actuated in counter-phase


class Maturity(IntEnum):
    EMPTY = 0
    GROWING = 1
    LIVING = 2


class ConfigError(ValueError):
    """A run parameter violates its contract (bad seed position, etc.)."""


def classify_maturity(alpha: float) -> Maturity:
    """Tag an alpha value: living above the threshold, growing in (0, 0.1],
    empty at exactly zero."""
    if alpha > LIVING_THRESHOLD:
        return Maturity.LIVING
    if alpha > 0.0:
        return Maturity.GROWING
    return Maturity.EMPTY


def moore_offsets(ndim: int) -> list[tuple[int, ...]]:
    """All 3^d offsets (center included) in canonical order: the x
    component varies fastest, each component stepping -1, 0, +1."""
    return [t[::-1] for t in itertools.product((-1, 0, 1), repeat=ndim)]


def iter_index_order(dims: tuple[int, ...]):
    """Yield every lattice position in index order (x fastest)."""
    for t in itertools.product(*(range(d) for d in reversed(dims))):
        yield t[::-1]


@dataclass
class CellGrid:
    """Developmental state: material, alpha, and optional per-cell memory.

    ``memory_h``/``memory_c`` are the per-cell hidden and cell vectors of
    the recurrent update, shaped ``dims + (hidden,)``; both are None for
    feed-forward development.
    """

    state: np.ndarray
    alpha: np.ndarray
    memory_h: np.ndarray | None = None
    memory_c: np.ndarray | None = None
    step_count: int = 0

    @property
    def dims(self) -> tuple[int, ...]:
        return self.state.shape

    @property
    def ndim(self) -> int:
        return self.state.ndim

    def copy(self) -> "CellGrid":
        return CellGrid(
            state=self.state.copy(),
            alpha=self.alpha.copy(),
            memory_h=None if self.memory_h is None else self.memory_h.copy(),
            memory_c=None if self.memory_c is None else self.memory_c.copy(),
            step_count=self.step_count,
        )

    def living_mask(self) -> np.ndarray:
        """Cells that are materially present and mature."""
        return (self.state != CellState.EMPTY) & (self.alpha > LIVING_THRESHOLD)


@dataclass
class Morphology:
    """Cleaned material lattice: occupancy only, no alpha channel."""

    voxels: np.ndarray

    @property
    def dims(self) -> tuple[int, ...]:
        return self.voxels.shape

    @property
    def ndim(self) -> int:
        return self.voxels.ndim

    @property
    def voxel_count(self) -> int:
        return int(np.count_nonzero(self.voxels))

    def copy(self) -> "Morphology":
        return Morphology(self.voxels.copy())


def interior_mask(dims: tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(dims, dtype=bool)
    mask[tuple(slice(1, d - 1) for d in dims)] = True
    return mask


def frame_is_empty(grid: CellGrid) -> bool:
    """True iff the boundary frame carries no state and no alpha."""
    inner = interior_mask(grid.dims)
    return bool(
        np.all(grid.state[~inner] == CellState.EMPTY)
        and np.all(grid.alpha[~inner] == 0.0)
    )


def init_grid(
    dims: tuple[int, ...],
    seed_pos: tuple[int, ...],
    hidden_dim: int | None = None,
) -> CellGrid:
    """Place the single initial soft passive cell, fully mature.

    ``hidden_dim`` allocates zeroed per-cell memory for recurrent
    development.  The seed must be strictly inside the boundary frame.
    """
    if len(seed_pos) != len(dims):
        raise ConfigError(f"seed position {seed_pos} does not match dims {dims}")
    if any(d < 3 for d in dims):
        raise ConfigError(f"lattice dims {dims} leave no interior")
    for p, d in zip(seed_pos, dims):
        if not 0 < p < d - 1:
            raise ConfigError(
                f"seed position {seed_pos} is on or outside the boundary frame of {dims}"
            )
    state = np.zeros(dims, dtype=np.int8)
    alpha = np.zeros(dims, dtype=np.float64)
    state[seed_pos] = CellState.SOFT_PASSIVE
    alpha[seed_pos] = 1.0
    memory_h = memory_c = None
    if hidden_dim is not None:
        memory_h = np.zeros(dims + (hidden_dim,), dtype=np.float64)
        memory_c = np.zeros(dims + (hidden_dim,), dtype=np.float64)
    return CellGrid(state, alpha, memory_h, memory_c, step_count=0)


def neighborhood_vector(grid: CellGrid, pos: tuple[int, ...]) -> np.ndarray:
    """Encode the Moore neighborhood of ``pos`` as the network input.

    One (state, alpha) pair per neighbor, neighbors in canonical offset
    order (see :func:`moore_offsets`), pairs concatenated; length
    2 * 3^d.  Living neighbors contribute (code/4, alpha); empty and
    growing neighbors contribute (0, 0).
    """
    for p, d in zip(pos, grid.dims):
        if not 0 < p < d - 1:
            raise ValueError(f"position {pos} is on the boundary frame")
    living = grid.living_mask()
    offsets = moore_offsets(grid.ndim)
    vec = np.zeros(2 * len(offsets), dtype=np.float64)
    for k, off in enumerate(offsets):
        nb = tuple(p + o for p, o in zip(pos, off))
        if living[nb]:
            vec[2 * k] = grid.state[nb] / 4.0
            vec[2 * k + 1] = grid.alpha[nb]
    return vec


def _eligible_mask(grid: CellGrid) -> np.ndarray:
    """Growth-frontier rule: a cell updates iff it is living or growing
    itself, or any cell of its Moore neighborhood is living.  Frame cells
    never update."""
    living = grid.living_mask()
    near_living = np.zeros(grid.dims, dtype=bool)
    for off in moore_offsets(grid.ndim):
        shifted = living
        for axis, o in enumerate(off):
            shifted = np.roll(shifted, -o, axis=axis)
        near_living |= shifted
    # np.roll wraps around, but the frame is empty by invariant, so the
    # wrapped values reaching the interior are always False.
    return interior_mask(grid.dims) & ((grid.alpha > 0.0) | near_living)


def _gather_inputs(grid: CellGrid, index: np.ndarray) -> np.ndarray:
    """Neighborhood input rows for the cells listed in ``index`` (n, d)."""
    living = grid.living_mask()
    scalar = np.where(living, grid.state / 4.0, 0.0)
    alph = np.where(living, grid.alpha, 0.0)
    offsets = moore_offsets(grid.ndim)
    n = index.shape[0]
    x = np.empty((n, 2 * len(offsets)), dtype=np.float64)
    for k, off in enumerate(offsets):
        nb = tuple((index + np.asarray(off, dtype=index.dtype)).T)
        x[:, 2 * k] = scalar[nb]
        x[:, 2 * k + 1] = alph[nb]
    return x


def develop_step(grid: CellGrid, net) -> CellGrid:
    """One synchronous developmental update.

    Every eligible cell's next (state, alpha, memory) comes from the
    network applied to the previous grid; everything else is reset empty.
    ``net`` is a :class:`growbots.networks.Network`.
    """
    if net.arch.input_dim != 2 * 3 ** grid.ndim:
        raise ValueError(
            f"network input width {net.arch.input_dim} does not fit a "
            f"{grid.ndim}D lattice (needs {2 * 3 ** grid.ndim})"
        )
    recurrent = net.needs_memory
    if recurrent and grid.memory_h is None:
        raise ValueError("recurrent network requires a grid with memory")

    new_state = np.zeros_like(grid.state)
    new_alpha = np.zeros_like(grid.alpha)
    new_h = new_c = None
    if recurrent:
        new_h = np.zeros_like(grid.memory_h)
        new_c = np.zeros_like(grid.memory_c)

    index = np.argwhere(_eligible_mask(grid))
    if index.shape[0] > 0:
        x = _gather_inputs(grid, index)
        where = tuple(index.T)
        if recurrent:
            out, h2, c2 = net.step_batch(x, grid.memory_h[where], grid.memory_c[where])
            new_h[where] = h2
            new_c[where] = c2
        else:
            out = net.forward_batch(x)
        states, alphas = _decode_batch(out)
        new_state[where] = states
        new_alpha[where] = alphas

    return CellGrid(new_state, new_alpha, new_h, new_c, grid.step_count + 1)


def _decode_batch(out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # argmax takes the first maximum, which is the lowest state code.
    states = np.argmax(out[:, :N_STATES], axis=1).astype(np.int8)
    alphas = np.clip(out[:, N_STATES], 0.0, 1.0)
    return states, alphas


def develop(grid: CellGrid, net, steps: int) -> list[CellGrid]:
    """Run ``steps`` updates and return the full trajectory, initial grid
    included (steps + 1 grids)."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    trajectory = [grid]
    for _ in range(steps):
        grid = develop_step(grid, net)
        trajectory.append(grid)
    return trajectory


_FACE_OFFSETS = {
    2: [(-1, 0), (1, 0), (0, -1), (0, 1)],
    3: [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)],
}


def _count_present(present: np.ndarray, pos: tuple[int, ...], offsets) -> int:
    count = 0
    dims = present.shape
    for off in offsets:
        nb = tuple(p + o for p, o in zip(pos, off))
        if all(0 <= q < d for q, d in zip(nb, dims)):
            if present[nb]:
                count += 1
    return count


def cleanup(grid: CellGrid) -> Morphology:
    """Strip a grown grid down to its physically usable voxels.

    A cell is present iff its state is non-empty and it is living.  Two
    sequential passes then run over the present set, each visiting cells
    in index order with immediate effect: pass 1 drops cells that touch
    the body only diagonally (>= 1 diagonal neighbor, 0 face neighbors);
    pass 2 drops cells left with no neighbor at all.
    """
    present = grid.living_mask().copy()
    nd = grid.ndim
    face = _FACE_OFFSETS[nd]
    diagonal = [
        off for off in moore_offsets(nd)
        if any(off) and off not in face
    ]
    all_neighbors = [off for off in moore_offsets(nd) if any(off)]

    for pos in iter_index_order(grid.dims):
        if present[pos]:
            if (
                _count_present(present, pos, face) == 0
                and _count_present(present, pos, diagonal) >= 1
            ):
                present[pos] = False
    for pos in iter_index_order(grid.dims):
        if present[pos]:
            if _count_present(present, pos, all_neighbors) == 0:
                present[pos] = False

    voxels = np.where(present, grid.state, np.int8(CellState.EMPTY)).astype(np.int8)
    return Morphology(voxels)


def largest_component(m: Morphology) -> Morphology:
    """Restrict a morphology to its largest face-connected component.

    Optional post-processing; the default pipeline keeps whatever the
    two-pass cleanup leaves, which may be several components.
    """
    face = _FACE_OFFSETS[m.ndim]
    seen = np.zeros(m.dims, dtype=bool)
    best: list[tuple[int, ...]] = []
    for start in iter_index_order(m.dims):
        if m.voxels[start] == CellState.EMPTY or seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = [start]
        while queue:
            pos = queue.pop()
            for off in face:
                nb = tuple(p + o for p, o in zip(pos, off))
                if all(0 <= q < d for q, d in zip(nb, m.dims)):
                    if m.voxels[nb] != CellState.EMPTY and not seen[nb]:
                        seen[nb] = True
                        comp.append(nb)
                        queue.append(nb)
        if len(comp) > len(best):
            best = comp
    voxels = np.zeros_like(m.voxels)
    for pos in best:
        voxels[pos] = m.voxels[pos]
    return Morphology(voxels)


def morphology_to_grid(
    m: Morphology, alpha: float = 1.0, hidden_dim: int | None = None
) -> CellGrid:
    """Reconstitute a morphology onto a lattice: present voxels get the
    given alpha, everything else is empty.  Memories start zeroed."""
    state = m.voxels.astype(np.int8).copy()
    alph = np.where(state != CellState.EMPTY, float(alpha), 0.0)
    memory_h = memory_c = None
    if hidden_dim is not None:
        memory_h = np.zeros(m.dims + (hidden_dim,), dtype=np.float64)
        memory_c = np.zeros(m.dims + (hidden_dim,), dtype=np.float64)
    return CellGrid(state, alph, memory_h, memory_c, step_count=0)


# ---------------------------------------------------------------------------
# Text format: one line of digits per y-row, z-layers separated by a blank
# line, with a versioned header comment.

_TEXT_HEADER = "# growbots-morphology v1"


def lattice_to_text(voxels: np.ndarray, header: bool = True) -> str:
    lines = [_TEXT_HEADER] if header else []
    if voxels.ndim == 2:
        layers = [voxels]
    else:
        layers = [voxels[:, :, z] for z in range(voxels.shape[2])]
    for i, layer in enumerate(layers):
        if i > 0:
            lines.append("")
        for y in range(layer.shape[1]):
            lines.append("".join(str(int(layer[x, y])) for x in range(layer.shape[0])))
    return "\n".join(lines) + "\n"


def morphology_to_text(m: Morphology) -> str:
    return lattice_to_text(m.voxels)


def lattice_from_text(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# growbots-morphology"):
        raise ValueError("not a growbots morphology file (missing header)")
    if lines[0].strip() != _TEXT_HEADER:
        raise ValueError(f"unsupported morphology format version: {lines[0].strip()!r}")
    body = lines[1:]
    layers: list[list[str]] = [[]]
    for line in body:
        if line.strip() == "":
            if layers[-1]:
                layers.append([])
            continue
        if not set(line) <= set("01234"):
            raise ValueError(f"invalid morphology row: {line!r}")
        layers[-1].append(line)
    if layers and not layers[-1]:
        layers.pop()
    if not layers or not layers[0]:
        raise ValueError("morphology file has no rows")
    ny = len(layers[0])
    nx = len(layers[0][0])
    for layer in layers:
        if len(layer) != ny or any(len(row) != nx for row in layer):
            raise ValueError("ragged morphology layers")
    if len(layers) == 1:
        voxels = np.zeros((nx, ny), dtype=np.int8)
        for y, row in enumerate(layers[0]):
            for x, ch in enumerate(row):
                voxels[x, y] = int(ch)
    else:
        voxels = np.zeros((nx, ny, len(layers)), dtype=np.int8)
        for z, layer in enumerate(layers):
            for y, row in enumerate(layer):
                for x, ch in enumerate(row):
                    voxels[x, y, z] = int(ch)
    return voxels


def morphology_from_text(text: str) -> Morphology:
    return Morphology(lattice_from_text(text))
