import numpy as np
import pytest

from replicagrid.density import CanonicalProfile
from replicagrid.errors import InvalidInputError
from replicagrid.grid import GridSpec
from replicagrid.placement import (
    CachePlacement,
    canonical_place,
    diagonal_order,
    render_matrix,
    validate_capacity,
)
from replicagrid.popularity import Popularity, zipf


def _levels_profile(levels, nu, capacity):
    return CanonicalProfile.from_levels(np.array(levels), nu=nu, capacity=capacity)


def _random_levels(rng, nu, capacity, m_max=40):
    """Random level assignment with sum of densities <= capacity."""
    levels = []
    budget = float(capacity)
    for _ in range(int(rng.integers(1, m_max + 1))):
        k = int(rng.integers(0, nu + 1))
        if 4.0 ** -k > budget:
            k = nu
            if 4.0 ** -k > budget:
                break
        levels.append(k)
        budget -= 4.0 ** -k
    return levels or [nu]


def test_diagonal_order_k1():
    assert diagonal_order(1) == [(0, 0), (1, 1), (1, 0), (0, 1)]


def test_diagonal_order_k2_main_diagonal_first():
    order = diagonal_order(2)
    assert order[:4] == [(0, 0), (1, 1), (2, 2), (3, 3)]
    assert sorted(order) == [(x, y) for x in range(4) for y in range(4)]


def test_diagonal_order_is_permutation():
    for k in (1, 2, 3):
        order = diagonal_order(k)
        assert len(order) == 4 ** k
        assert len(set(order)) == 4 ** k
    with pytest.raises(InvalidInputError):
        diagonal_order(0)


def test_reference_layout_64_nodes():
    # 3 files at level 1, 19 at level 2, 3 at level 3 on the 8x8 grid, K=2.
    levels = [1] * 3 + [2] * 19 + [3] * 3
    canon = _levels_profile(levels, nu=3, capacity=2.0)
    pop = zipf(25, 1.0)
    grid = GridSpec(nu=3)
    placed = canonical_place(grid, canon, pop, 2)
    assert validate_capacity(placed)
    # File 3 (0-based id 2, level 1) gets 16 replicas every 2 nodes.
    reps = placed.replica_nodes(2)
    assert len(reps) == 16
    (x0, y0) = reps[0]
    assert set(reps) == {((x0 + 2 * i) % 8, (y0 + 2 * j) % 8) for i in range(4) for j in range(4)}


def test_full_replication_when_everything_level0():
    grid = GridSpec(nu=2)
    canon = _levels_profile([0, 0, 0], nu=2, capacity=3.0)
    placed = canonical_place(grid, canon, zipf(3, 1.0), 3)
    for node in grid.nodes():
        assert placed.buffer_at(node) == frozenset({0, 1, 2})


def test_single_file_at_top_level():
    grid = GridSpec(nu=2)
    canon = _levels_profile([2], nu=2, capacity=1.0)
    placed = canonical_place(grid, canon, Popularity(np.array([1.0])), 1)
    assert len(placed.replica_nodes(0)) == 1


def test_measured_densities_match_canonical():
    rng = np.random.default_rng(5)
    for _ in range(20):
        nu = int(rng.integers(1, 4))
        cap = int(rng.integers(1, 4))
        levels = _random_levels(rng, nu, cap)
        canon = _levels_profile(levels, nu=nu, capacity=float(cap))
        pop = zipf(len(levels), 1.0)
        placed = canonical_place(GridSpec(nu=nu), canon, pop, cap)
        assert np.array_equal(placed.measured_densities(), canon.densities)
        assert validate_capacity(placed)


def test_tiling_has_single_base():
    grid = GridSpec(nu=3)
    levels = [1, 1, 2, 2, 2, 3]
    canon = _levels_profile(levels, nu=3, capacity=1.0)
    placed = canonical_place(grid, canon, zipf(6, 0.8), 1)
    for m, k in enumerate(levels):
        period = 2 ** k
        reps = placed.replica_nodes(m)
        assert len(reps) == grid.node_count // 4 ** k
        x0, y0 = min(reps)
        expected = {
            ((x0 + i * period) % 8, (y0 + j * period) % 8)
            for i in range(8 // period)
            for j in range(8 // period)
        }
        assert set(reps) == expected


def test_occupancy_balance_within_submatrix():
    rng = np.random.default_rng(9)
    for _ in range(10):
        nu = int(rng.integers(1, 4))
        cap = int(rng.integers(1, 4))
        levels = _random_levels(rng, nu, cap)
        canon = _levels_profile(levels, nu=nu, capacity=float(cap))
        placed = canonical_place(GridSpec(nu=nu), canon, zipf(len(levels), 1.2), cap)
        side = 2 ** nu
        occ = np.array([[len(placed.buffer_at((x, y))) for y in range(side)] for x in range(side)])
        assert occ.max() - occ.min() <= 1


def test_determinism():
    grid = GridSpec(nu=2)
    canon = _levels_profile([1, 1, 2, 2, 2], nu=2, capacity=1.0)
    pop = zipf(5, 1.0)
    a = canonical_place(grid, canon, pop, 1)
    b = canonical_place(grid, canon, pop, 1)
    assert a.buffers == b.buffers


def test_validate_capacity_violations():
    grid = GridSpec(nu=1)
    over = CachePlacement(
        grid=grid, capacity=1, file_count=2,
        buffers=(frozenset({0, 1}), frozenset(), frozenset(), frozenset()),
    )
    assert not validate_capacity(over)
    missing = CachePlacement(
        grid=grid, capacity=1, file_count=2,
        buffers=(frozenset({0}), frozenset(), frozenset(), frozenset()),
    )
    assert not validate_capacity(missing)


def test_canonical_place_input_validation():
    grid = GridSpec(nu=1)
    canon = _levels_profile([1, 1], nu=1, capacity=1.0)
    pop = zipf(2, 1.0)
    with pytest.raises(InvalidInputError):
        canonical_place(grid, canon, pop, 0)
    with pytest.raises(InvalidInputError):
        canonical_place(GridSpec(nu=2), canon, pop, 1)
    over = _levels_profile([0, 0], nu=1, capacity=1.0)
    with pytest.raises(InvalidInputError):
        canonical_place(grid, over, pop, 1)


def test_render_matrix_smoke():
    grid = GridSpec(nu=1)
    canon = _levels_profile([1, 1, 1], nu=1, capacity=1.0)
    placed = canonical_place(grid, canon, Popularity(np.array([0.7, 0.2, 0.1])), 1)
    text = render_matrix(placed)
    assert text.splitlines() == ["1 .", "3 2"]
