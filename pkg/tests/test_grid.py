import itertools

import numpy as np
import pytest

from growbots.grid import (CellGrid, CellState, ConfigError, Maturity,
                           Morphology, classify_maturity, cleanup, develop,
                           develop_step, frame_is_empty, init_grid,
                           interior_mask, iter_index_order, largest_component,
                           lattice_from_text, lattice_to_text, moore_offsets,
                           morphology_from_text, morphology_to_grid,
                           morphology_to_text, neighborhood_vector)
from growbots.networks import (Network, NetworkArchitecture, Variant,
                               individual_rng, random_genome)

from conftest import ConstNet, random_grid


class TestMaturity:
    def test_living_above_threshold(self):
        assert classify_maturity(0.5) is Maturity.LIVING

    def test_growing_band(self):
        assert classify_maturity(0.05) is Maturity.GROWING

    def test_zero_is_empty(self):
        assert classify_maturity(0.0) is Maturity.EMPTY

    def test_threshold_exactly_is_growing(self):
        # "greater than 0.1" is strict, so the tie stays growing
        assert classify_maturity(0.1) is Maturity.GROWING
        assert classify_maturity(np.nextafter(0.1, 1.0)) is Maturity.LIVING


class TestInitGrid:
    def test_2d_preset(self):
        g = init_grid((7, 7), (3, 3))
        assert g.dims == (7, 7)
        assert g.state[3, 3] == CellState.SOFT_PASSIVE
        assert g.alpha[3, 3] == 1.0
        assert np.count_nonzero(g.state) == 1
        assert np.count_nonzero(g.alpha) == 1
        assert g.step_count == 0
        assert 7 * 7 - 1 == 48  # the other 48 cells are empty

    def test_3d_preset(self):
        g = init_grid((9, 9, 9), (4, 4, 4))
        assert g.state[4, 4, 4] == CellState.SOFT_PASSIVE
        assert np.count_nonzero(g.state) == 1

    def test_seed_on_frame_rejected(self):
        with pytest.raises(ConfigError):
            init_grid((7, 7), (0, 3))
        with pytest.raises(ConfigError):
            init_grid((7, 7), (3, 6))
        with pytest.raises(ConfigError):
            init_grid((7, 7), (3, 9))

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            init_grid((7, 7), (3, 3, 3))

    def test_memory_allocated_zero(self):
        g = init_grid((7, 7), (3, 3), hidden_dim=4)
        assert g.memory_h.shape == (7, 7, 4)
        assert not g.memory_h.any()
        assert not g.memory_c.any()


class TestNeighborhoodVector:
    def test_lengths(self):
        g2 = init_grid((7, 7), (3, 3))
        assert neighborhood_vector(g2, (3, 3)).shape == (18,)
        g3 = init_grid((9, 9, 9), (4, 4, 4))
        assert neighborhood_vector(g3, (4, 4, 4)).shape == (54,)

    def test_lone_living_center(self):
        g = init_grid((7, 7), (3, 3))
        vec = neighborhood_vector(g, (3, 3))
        center = moore_offsets(2).index((0, 0))
        expected = np.zeros(18)
        expected[2 * center] = 0.25     # softPassive = 1, scaled by /4
        expected[2 * center + 1] = 1.0
        assert np.array_equal(vec, expected)

    def test_growing_center_contributes_zero(self):
        g = init_grid((7, 7), (3, 3))
        g.alpha[3, 3] = 0.05
        assert not neighborhood_vector(g, (3, 3)).any()

    def test_fully_empty(self):
        g = init_grid((7, 7), (3, 3))
        assert not neighborhood_vector(g, (1, 1)).any()

    def test_living_neighbor_encoding(self):
        g = init_grid((7, 7), (3, 3))
        g.state[4, 3] = CellState.MUSCLE_B
        g.alpha[4, 3] = 0.7
        vec = neighborhood_vector(g, (3, 3))
        k = moore_offsets(2).index((1, 0))
        assert vec[2 * k] == 1.0        # muscleB = 4, scaled by /4
        assert vec[2 * k + 1] == 0.7

    def test_frame_position_rejected(self):
        g = init_grid((7, 7), (3, 3))
        with pytest.raises(ValueError):
            neighborhood_vector(g, (0, 3))


class TestDevelopStep:
    def test_all_empty_unchanged(self):
        g = CellGrid(np.zeros((7, 7), np.int8), np.zeros((7, 7)))
        out = develop_step(g, ConstNet(2, CellState.MUSCLE_A, 0.9))
        assert not out.state.any()
        assert not out.alpha.any()
        assert out.step_count == 1

    def test_frontier_growth_around_seed(self):
        g = init_grid((7, 7), (3, 3))
        out = develop_step(g, ConstNet(2, CellState.MUSCLE_A, 0.9))
        expected = np.zeros((7, 7), np.int8)
        expected[2:5, 2:5] = CellState.MUSCLE_A
        assert np.array_equal(out.state, expected)
        assert np.array_equal(out.alpha != 0, expected != 0)
        assert np.allclose(out.alpha[2:5, 2:5], 0.9)

    def test_deterministic(self):
        arch = NetworkArchitecture.for_lattice(2, Variant.FEED_FORWARD)
        net = Network(random_genome(arch, individual_rng(7, 0, 0), scale=0.5))
        g = init_grid((7, 7), (3, 3))
        a = develop_step(g, net)
        b = develop_step(g, net)
        assert np.array_equal(a.state, b.state)
        assert np.array_equal(a.alpha, b.alpha)

    def test_input_width_mismatch_rejected(self):
        g = init_grid((9, 9, 9), (4, 4, 4))
        with pytest.raises(ValueError):
            develop_step(g, ConstNet(2, CellState.MUSCLE_A, 0.9))

    def test_recurrent_needs_memory(self):
        arch = NetworkArchitecture.for_lattice(2, Variant.RECURRENT, hidden_dim=4)
        net = Network(random_genome(arch, individual_rng(7, 0, 0)))
        with pytest.raises(ValueError):
            develop_step(init_grid((7, 7), (3, 3)), net)

    def test_isolated_stale_state_cleared(self):
        # a leftover state with alpha 0 and no living neighbor is ineligible
        # and must be reset to empty
        g = init_grid((7, 7), (3, 3))
        g.state[1, 1] = CellState.HARD_PASSIVE
        out = develop_step(g, ConstNet(2, CellState.MUSCLE_A, 0.9))
        assert out.state[1, 1] == CellState.EMPTY

    def test_frontier_monotonicity(self, rng):
        # cells that are not living/growing and have no living Moore
        # neighbor never change
        net = ConstNet(2, CellState.MUSCLE_B, 1.0)
        for _ in range(20):
            g = random_grid(rng, (7, 7), alpha_scale=0.3)
            living = g.living_mask()
            near = np.zeros_like(living)
            for off in moore_offsets(2):
                near |= np.roll(np.roll(living, -off[0], 0), -off[1], 1)
            untouched = ~((g.alpha > 0) | near)
            out = develop_step(g, net)
            assert not out.state[untouched].any()
            assert not out.alpha[untouched].any()

    def test_frame_stays_empty(self, rng):
        arch = NetworkArchitecture.for_lattice(2, Variant.FEED_FORWARD)
        net = Network(random_genome(arch, individual_rng(3, 0, 1), scale=1.0))
        for trial in range(10):
            g = random_grid(rng, (7, 7))
            out = develop_step(g, net)
            assert frame_is_empty(out)

    def test_matches_single_cell_reference(self, rng):
        # batched update must equal a cell-at-a-time reimplementation
        arch = NetworkArchitecture.for_lattice(2, Variant.FEED_FORWARD)
        net = Network(random_genome(arch, individual_rng(11, 0, 2), scale=0.8))
        g = random_grid(rng, (7, 7))
        out = develop_step(g, net)

        living = g.living_mask()
        for pos in iter_index_order(g.dims):
            if not interior_mask(g.dims)[pos]:
                assert out.state[pos] == 0 and out.alpha[pos] == 0
                continue
            near = any(
                living[tuple(p + o for p, o in zip(pos, off))]
                for off in moore_offsets(2)
                if all(0 <= p + o < d for p, o, d in zip(pos, off, g.dims))
            )
            if not (g.alpha[pos] > 0 or near):
                assert out.state[pos] == 0 and out.alpha[pos] == 0
                continue
            x = neighborhood_vector(g, pos)
            row = net.forward_batch(x[None, :])[0]
            assert out.state[pos] == int(np.argmax(row[:5]))
            assert out.alpha[pos] == np.clip(row[5], 0.0, 1.0)

    def test_recurrent_memory_updates_only_eligible(self, rng):
        arch = NetworkArchitecture.for_lattice(2, Variant.RECURRENT, hidden_dim=8)
        net = Network(random_genome(arch, individual_rng(5, 0, 0), scale=0.5))
        g = random_grid(rng, (7, 7), hidden_dim=8)
        out = develop_step(g, net)
        assert out.memory_h.shape == g.memory_h.shape
        # ineligible cells end with zero memory
        eligible_anywhere = (out.state != 0) | (out.alpha != 0)
        flat = out.memory_h.reshape(-1, 8)
        inactive = ~eligible_anywhere.reshape(-1)
        # a cell can be eligible yet decode to empty/alpha 0, so only check
        # the converse: nonzero memory implies some update happened there
        nonzero_memory = flat.any(axis=1)
        updated = np.zeros((7, 7), dtype=bool)
        living = g.living_mask()
        near = np.zeros_like(living)
        for off in moore_offsets(2):
            near |= np.roll(np.roll(living, -off[0], 0), -off[1], 1)
        updated = interior_mask(g.dims) & ((g.alpha > 0) | near)
        assert not nonzero_memory[~updated.reshape(-1)].any()


class TestDevelop:
    def test_trajectory_lengths(self):
        g = init_grid((7, 7), (3, 3))
        net = ConstNet(2, CellState.SOFT_PASSIVE, 1.0)
        assert len(develop(g, net, 0)) == 1
        assert len(develop(g, net, 10)) == 11

    def test_compositional(self):
        arch = NetworkArchitecture.for_lattice(2, Variant.FEED_FORWARD)
        net = Network(random_genome(arch, individual_rng(2, 0, 0), scale=0.6))
        g = init_grid((7, 7), (3, 3))
        traj = develop(g, net, 5)
        cur = g
        for k in range(1, 6):
            cur = develop_step(cur, net)
            assert np.array_equal(traj[k].state, cur.state)
            assert np.array_equal(traj[k].alpha, cur.alpha)

    def test_negative_steps_rejected(self):
        with pytest.raises(ValueError):
            develop(init_grid((7, 7), (3, 3)), ConstNet(2, CellState.SOFT_PASSIVE, 1.0), -1)


def brute_force_cleanup(state: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Independent reimplementation of the cleanup contract on plain
    Python sets, for cross-checking."""
    dims = state.shape
    nd = len(dims)
    present = {
        pos for pos in itertools.product(*(range(d) for d in dims))
        if state[pos] != 0 and alpha[pos] > 0.1
    }

    def neighbors(pos, offs):
        for off in offs:
            q = tuple(p + o for p, o in zip(pos, off))
            if all(0 <= c < d for c, d in zip(q, dims)):
                yield q

    face = [off for off in itertools.product((-1, 0, 1), repeat=nd)
            if sum(abs(o) for o in off) == 1]
    diag = [off for off in itertools.product((-1, 0, 1), repeat=nd)
            if any(off) and sum(abs(o) for o in off) > 1]
    full = face + diag

    # visit in index order, x fastest: sort by reversed tuple
    order = sorted(present, key=lambda p: tuple(reversed(p)))
    for pos in order:
        if pos not in present:
            continue
        n_face = sum(1 for q in neighbors(pos, face) if q in present)
        n_diag = sum(1 for q in neighbors(pos, diag) if q in present)
        if n_face == 0 and n_diag >= 1:
            present.discard(pos)
    order = sorted(present, key=lambda p: tuple(reversed(p)))
    for pos in order:
        n_all = sum(1 for q in neighbors(pos, full) if q in present)
        if n_all == 0:
            present.discard(pos)

    out = np.zeros(dims, dtype=np.int8)
    for pos in present:
        out[pos] = state[pos]
    return out


class TestCleanup:
    def _grid(self, positions, dims=(7, 7), state=CellState.SOFT_PASSIVE):
        s = np.zeros(dims, np.int8)
        a = np.zeros(dims)
        for p in positions:
            s[p] = state
            a[p] = 1.0
        return CellGrid(s, a)

    def test_face_adjacent_pair_survives(self):
        m = cleanup(self._grid([(2, 2), (2, 3)]))
        assert m.voxel_count == 2
        assert m.voxels[2, 2] == m.voxels[2, 3] == CellState.SOFT_PASSIVE

    def test_diagonal_pair_removed_entirely(self):
        # pass 1 removes (2,2) first (index order), pass 2 removes the
        # then-isolated (3,3)
        m = cleanup(self._grid([(2, 2), (3, 3)]))
        assert m.voxel_count == 0

    def test_singleton_removed(self):
        m = cleanup(self._grid([(3, 3)]))
        assert m.voxel_count == 0

    def test_growing_cells_not_present(self):
        g = self._grid([(2, 2), (2, 3)])
        g.alpha[2, 3] = 0.1  # exactly at threshold: growing, not living
        m = cleanup(g)
        assert m.voxel_count == 0  # partner became a singleton

    def test_matches_brute_force_oracle(self, rng):
        for trial in range(700):
            dims = (5, 5) if trial % 2 else (7, 7)
            g = random_grid(rng, dims)
            got = cleanup(g).voxels
            want = brute_force_cleanup(g.state, g.alpha)
            assert np.array_equal(got, want), f"trial {trial}"

    def test_matches_brute_force_oracle_3d(self, rng):
        for trial in range(300):
            g = random_grid(rng, (9, 9, 9))
            got = cleanup(g).voxels
            want = brute_force_cleanup(g.state, g.alpha)
            assert np.array_equal(got, want), f"trial {trial}"

    def test_idempotent(self, rng):
        for trial in range(200):
            g = random_grid(rng, (7, 7) if trial % 2 else (6, 8))
            m = cleanup(g)
            again = cleanup(morphology_to_grid(m))
            assert np.array_equal(m.voxels, again.voxels)

    def test_largest_component_optional(self):
        g = self._grid([(1, 1), (1, 2), (4, 4), (4, 5), (5, 4)])
        m = cleanup(g)
        assert m.voxel_count == 5  # cleanup alone keeps both islands
        big = largest_component(m)
        assert big.voxel_count == 3
        assert big.voxels[4, 4] and not big.voxels[1, 1]


class TestMorphologyText:
    def test_golden_2d(self):
        v = np.zeros((4, 3), np.int8)
        v[1, 0] = 3
        v[2, 1] = 4
        m = Morphology(v)
        text = morphology_to_text(m)
        # line per y-row, x across
        assert text == "# growbots-morphology v1\n0300\n0040\n0000\n"
        back = morphology_from_text(text)
        assert np.array_equal(back.voxels, v)

    def test_round_trip_3d(self, rng):
        v = rng.integers(0, 5, size=(5, 4, 3)).astype(np.int8)
        m = Morphology(v)
        back = morphology_from_text(morphology_to_text(m))
        assert np.array_equal(back.voxels, v)

    def test_rejects_bad_header(self):
        with pytest.raises(ValueError):
            morphology_from_text("0300\n0040\n")
        with pytest.raises(ValueError):
            morphology_from_text("# growbots-morphology v9\n00\n00\n")

    def test_rejects_bad_digits(self):
        with pytest.raises(ValueError):
            morphology_from_text("# growbots-morphology v1\n05\n00\n")
        with pytest.raises(ValueError):
            morphology_from_text("# growbots-morphology v1\n0a\n00\n")

    def test_rejects_ragged_rows(self):
        with pytest.raises(ValueError):
            morphology_from_text("# growbots-morphology v1\n00\n000\n")

    def test_lattice_text_no_header(self):
        v = np.zeros((3, 2), np.int8)
        v[1, 0] = 2
        assert lattice_to_text(v, header=False) == "020\n000\n"
        assert np.array_equal(lattice_from_text(lattice_to_text(v)), v)


def test_moore_offsets_order():
    offs = moore_offsets(2)
    assert len(offs) == 9
    assert offs[0] == (-1, -1)
    assert offs[1] == (0, -1)    # x varies fastest
    assert offs[4] == (0, 0)
    assert len(moore_offsets(3)) == 27


def test_iter_index_order_x_fastest():
    seq = list(iter_index_order((2, 2)))
    assert seq == [(0, 0), (1, 0), (0, 1), (1, 1)]
