"""Per-cell transition networks and their flat genome encoding.

Two variants share one genome format: a feed-forward three-layer tanh
network, and a recurrent one whose hidden layer is a four-gate memory
cell (sigmoid input/forget/output gates, tanh candidate), with the
hidden/cell vectors stored per lattice cell.

All matrix products go through ``np.einsum`` rather than BLAS so that a
batched forward pass is bit-identical to evaluating the same rows one at
a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .grid import CellState, N_STATES

OUTPUT_DIM = N_STATES + 1  # five state scores plus the alpha channel


class Variant(str, Enum):
    FEED_FORWARD = "feedforward"
    RECURRENT = "recurrent"


GATE_ORDER = ("input", "forget", "candidate", "output")


@dataclass(frozen=True)
class NetworkArchitecture:
    variant: Variant
    input_dim: int
    hidden_dim: int = 64
    output_dim: int = OUTPUT_DIM

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.input_dim <= 0 or self.hidden_dim <= 0 or self.output_dim <= 0:
            raise ValueError(f"non-positive dimension in {self}")

    @staticmethod
    def for_lattice(ndim: int, variant: Variant | str, hidden_dim: int = 64):
        if ndim not in (2, 3):
            raise ValueError(f"unsupported lattice dimension {ndim}")
        return NetworkArchitecture(Variant(variant), 2 * 3**ndim, hidden_dim)


def param_count(arch: NetworkArchitecture) -> int:
    i, h, o = arch.input_dim, arch.hidden_dim, arch.output_dim
    readout = (h + 1) * o
    if arch.variant is Variant.FEED_FORWARD:
        return (i + 1) * h + readout
    return 4 * (i + h + 1) * h + readout


@dataclass
class Genome:
    """Architecture descriptor plus the flat parameter vector.

    Layout (all blocks row-major):
      feed-forward: W1 (h,i), b1 (h), W2 (o,h), b2 (o)
      recurrent:    per gate in GATE_ORDER: Wx (h,i), Wh (h,h), b (h);
                    then W2 (o,h), b2 (o)
    """

    arch: NetworkArchitecture
    params: np.ndarray

    def __post_init__(self):
        self.params = np.ascontiguousarray(self.params, dtype=np.float64)
        if self.params.ndim != 1 or self.params.size != param_count(self.arch):
            raise ValueError(
                f"parameter vector of length {self.params.size} does not match "
                f"{self.arch} (expected {param_count(self.arch)})"
            )

    def copy(self) -> "Genome":
        return Genome(self.arch, self.params.copy())


def unflatten(genome: Genome) -> dict[str, np.ndarray]:
    """Views into the flat vector, keyed by block name."""
    arch = genome.arch
    i, h, o = arch.input_dim, arch.hidden_dim, arch.output_dim
    blocks: dict[str, np.ndarray] = {}
    cursor = 0

    def take(name: str, shape: tuple[int, ...]):
        nonlocal cursor
        size = int(np.prod(shape))
        blocks[name] = genome.params[cursor : cursor + size].reshape(shape)
        cursor += size

    if arch.variant is Variant.FEED_FORWARD:
        take("W1", (h, i))
        take("b1", (h,))
    else:
        for gate in GATE_ORDER:
            take(f"Wx_{gate}", (h, i))
            take(f"Wh_{gate}", (h, h))
            take(f"b_{gate}", (h,))
    take("W2", (o, h))
    take("b2", (o,))
    assert cursor == genome.params.size
    return blocks


def flatten(arch: NetworkArchitecture, blocks: dict[str, np.ndarray]) -> np.ndarray:
    """Inverse of :func:`unflatten`; concatenates blocks in layout order."""
    order: list[str]
    if arch.variant is Variant.FEED_FORWARD:
        order = ["W1", "b1"]
    else:
        order = []
        for gate in GATE_ORDER:
            order += [f"Wx_{gate}", f"Wh_{gate}", f"b_{gate}"]
    order += ["W2", "b2"]
    return np.concatenate([np.asarray(blocks[name], dtype=np.float64).ravel() for name in order])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _affine(w: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    # einsum keeps the reduction order independent of the batch size.
    if x.ndim == 1:
        return np.einsum("hi,i->h", w, x) + b
    return np.einsum("ni,hi->nh", x, w) + b


def forward_feedforward(genome: Genome, x: np.ndarray) -> np.ndarray:
    """tanh(W2 tanh(W1 x + b1) + b2); accepts a vector or a batch."""
    if genome.arch.variant is not Variant.FEED_FORWARD:
        raise ValueError("genome is not feed-forward")
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != genome.arch.input_dim:
        raise ValueError(
            f"input width {x.shape[-1]} != {genome.arch.input_dim}"
        )
    w = unflatten(genome)
    hidden = np.tanh(_affine(w["W1"], x, w["b1"]))
    return np.tanh(_affine(w["W2"], hidden, w["b2"]))


def forward_recurrent(
    genome: Genome,
    x: np.ndarray,
    memory: tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """One recurrent step; ``memory`` is the (h, c) pair.

    Gates: i = sig(Wx x + Wh h + b), f and o likewise, g = tanh(...);
    c' = f*c + i*g; h' = o * tanh(c'); output = tanh(W2 h' + b2).
    """
    if genome.arch.variant is not Variant.RECURRENT:
        raise ValueError("genome is not recurrent")
    x = np.asarray(x, dtype=np.float64)
    h, c = (np.asarray(m, dtype=np.float64) for m in memory)
    hid = genome.arch.hidden_dim
    if x.shape[-1] != genome.arch.input_dim or h.shape[-1] != hid or c.shape[-1] != hid:
        raise ValueError("input or memory width does not match the architecture")
    w = unflatten(genome)

    def gate(name: str) -> np.ndarray:
        return _affine(w[f"Wx_{name}"], x, w[f"b_{name}"]) + _affine(
            w[f"Wh_{name}"], h, np.zeros(hid)
        )

    i = _sigmoid(gate("input"))
    f = _sigmoid(gate("forget"))
    g = np.tanh(gate("candidate"))
    o = _sigmoid(gate("output"))
    c_next = f * c + i * g
    h_next = o * np.tanh(c_next)
    out = np.tanh(_affine(w["W2"], h_next, w["b2"]))
    return out, (h_next, c_next)


def decode_outputs(out: np.ndarray) -> tuple[CellState, float]:
    """Argmax state (ties to the lowest code) and clamped alpha."""
    out = np.asarray(out, dtype=np.float64)
    if out.shape != (OUTPUT_DIM,):
        raise ValueError(f"expected {OUTPUT_DIM} outputs, got shape {out.shape}")
    state = CellState(int(np.argmax(out[:N_STATES])))
    alpha = float(np.clip(out[N_STATES], 0.0, 1.0))
    return state, alpha


class Network:
    """A genome with its weight views cached, ready for batched use."""

    def __init__(self, genome: Genome):
        self.genome = genome
        self.weights = unflatten(genome)

    @property
    def arch(self) -> NetworkArchitecture:
        return self.genome.arch

    @property
    def needs_memory(self) -> bool:
        return self.arch.variant is Variant.RECURRENT

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        w = self.weights
        hidden = np.tanh(_affine(w["W1"], x, w["b1"]))
        return np.tanh(_affine(w["W2"], hidden, w["b2"]))

    def step_batch(
        self, x: np.ndarray, h: np.ndarray, c: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        w = self.weights
        zero = np.zeros(self.arch.hidden_dim)

        def gate(name: str) -> np.ndarray:
            return _affine(w[f"Wx_{name}"], x, w[f"b_{name}"]) + _affine(
                w[f"Wh_{name}"], h, zero
            )

        i = _sigmoid(gate("input"))
        f = _sigmoid(gate("forget"))
        g = np.tanh(gate("candidate"))
        o = _sigmoid(gate("output"))
        c_next = f * c + i * g
        h_next = o * np.tanh(c_next)
        out = np.tanh(_affine(w["W2"], h_next, w["b2"]))
        return out, h_next, c_next


def individual_rng(master_seed: int, generation: int, index: int) -> np.random.Generator:
    """Counter-based stream for the individual at (generation, index).

    Philox keyed by (seed, stream id); streams never overlap, so results
    cannot depend on evaluation order or worker count, and a resumed run
    draws exactly the same noise.
    """
    return np.random.Generator(
        np.random.Philox(key=np.array([master_seed & 0xFFFFFFFFFFFFFFFF,
                                       stream_id(generation, index)], dtype=np.uint64))
    )


def stream_id(generation: int, index: int) -> int:
    if not 0 <= generation < 2**32 or not 0 <= index < 2**32:
        raise ValueError("generation and index must fit in 32 bits")
    return (generation << 32) | index


def random_genome(
    arch: NetworkArchitecture, rng: np.random.Generator, scale: float = 0.03
) -> Genome:
    """Generation-zero genome: i.i.d. Gaussian parameters at the mutation
    scale."""
    return Genome(arch, scale * rng.standard_normal(param_count(arch)))
