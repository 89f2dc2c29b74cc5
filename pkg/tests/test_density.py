import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from replicagrid.density import (
    COST_FACTOR,
    DensityProfile,
    a_coeff,
    canonical_truncate,
    cd_cost,
    kkt_residuals,
    lower_bound,
    solve_cd,
)
from replicagrid.errors import InfeasibleError, InvalidInputError
from replicagrid.popularity import Popularity, zipf


def _pop(values):
    return Popularity(np.array(values, dtype=float))


def _random_pop(rng, m):
    raw = np.sort(rng.uniform(0.05, 1.0, m))[::-1]
    return Popularity(raw / raw.sum())


def test_solve_cd_two_equal_files():
    prof = solve_cd(16, 1.0, _pop([0.5, 0.5]))
    assert np.allclose(prof.densities, [0.5, 0.5], atol=1e-12)
    assert (prof.l_index, prof.r_index) == (1, 3)


def test_solve_cd_reference_instance():
    prof = solve_cd(4, 1.0, _pop([0.7, 0.2, 0.1]))
    assert np.allclose(prof.densities, [0.5, 0.25, 0.25], atol=1e-12)
    assert (prof.l_index, prof.r_index) == (1, 2)
    # Hand-checked multiplier ordering: interior marginal exceeds the
    # down-truncated marginals 0.8 and 0.4.
    assert math.isclose(prof.mu, 0.5 * 0.7 * 0.5 ** -1.5, rel_tol=1e-12)


def test_solve_cd_slack_capacity():
    prof = solve_cd(4, 3.0, _pop([0.7, 0.2, 0.1]))
    assert np.all(prof.densities == 1.0)
    assert (prof.l_index, prof.r_index) == (4, 4)
    assert prof.mu == 0.0


def test_solve_cd_infeasible():
    with pytest.raises(InfeasibleError):
        solve_cd(4, 1.0, zipf(5, 1.0))
    with pytest.raises(InvalidInputError):
        solve_cd(0, 1.0, zipf(2, 1.0))
    with pytest.raises(InvalidInputError):
        solve_cd(4, 0.0, zipf(2, 1.0))


def test_cd_cost_examples():
    all_ones = DensityProfile(
        densities=np.ones(3), l_index=4, r_index=4, mu=0.0, n_nodes=4, capacity=3.0
    )
    assert cd_cost(all_ones, _pop([0.5, 0.3, 0.2])) == 0.0

    half = DensityProfile(
        densities=np.array([0.5, 0.5]), l_index=1, r_index=3, mu=1.0,
        n_nodes=16, capacity=1.0,
    )
    assert math.isclose(
        cd_cost(half, _pop([0.5, 0.5])), COST_FACTOR * (math.sqrt(2) - 1),
        rel_tol=1e-12,
    )

    single = DensityProfile(
        densities=np.array([0.01]), l_index=1, r_index=1, mu=1.0,
        n_nodes=100, capacity=1.0,
    )
    assert math.isclose(cd_cost(single, _pop([1.0])), COST_FACTOR * 9, rel_tol=1e-12)


def test_lower_bound_matches_cd_cost_and_raw_vectors():
    pop = _pop([0.5, 0.5])
    assert math.isclose(
        lower_bound(np.array([0.25, 0.25]), pop), COST_FACTOR * 1.0, rel_tol=1e-12
    )
    prof = solve_cd(16, 1.0, pop)
    assert lower_bound(prof, pop) == cd_cost(prof, pop)
    with pytest.raises(InvalidInputError):
        lower_bound(np.array([0.5, 0.0]), pop)


def test_canonical_truncate_examples():
    prof = DensityProfile(
        densities=np.array([0.3, 0.25, 1.0]), l_index=1, r_index=4, mu=1.0,
        n_nodes=16, capacity=2.0,
    )
    canon = canonical_truncate(prof)
    assert canon.levels.tolist() == [1, 1, 0]
    assert np.allclose(canon.densities, [0.25, 0.25, 1.0])
    assert canon.level_sets[0] == (2,)
    assert canon.level_sets[1] == (0, 1)

    prof4 = solve_cd(4, 1.0, _pop([0.7, 0.2, 0.1]))
    canon4 = canonical_truncate(prof4)
    assert np.allclose(canon4.densities, [0.25] * 3)
    assert float(canon4.densities.sum()) == 0.75

    bad = DensityProfile(
        densities=np.array([0.5]), l_index=1, r_index=2, mu=1.0,
        n_nodes=8, capacity=1.0,
    )
    with pytest.raises(InvalidInputError):
        canonical_truncate(bad)


def test_a_coeff_examples():
    assert a_coeff(0, 0, 1.0, 4, _pop([1.0])) == 1.0
    # Zero denominator is defined as 1.
    assert a_coeff(1, 0, 1.0, 4, _pop([0.6, 0.4])) == 1.0
    val = a_coeff(0, 0, 2.0, 4, _pop([0.5, 0.5]))
    assert math.isclose(val, 0.5 ** (2.0 / 3.0), rel_tol=1e-12)
    with pytest.raises(InvalidInputError):
        a_coeff(2, 3, 1.0, 4, _pop([0.5, 0.5]))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 5), st.integers(1, 60), st.floats(1.0, 8.0), st.integers(0, 10**6))
def test_solve_cd_structure_and_kkt(nu, m, k, seed):
    n = 4 ** nu
    if k * n < m:
        k = math.ceil(m / n)
    rng = np.random.default_rng(seed)
    pop = _random_pop(rng, m)
    prof = solve_cd(n, float(k), pop)
    d = prof.densities
    l, r = prof.l_index, prof.r_index
    assert 1 <= l <= r <= m + 1
    assert np.all(d[: l - 1] == 1.0)
    assert np.all(d[r - 1 :] == 1.0 / n)
    assert np.all(d[l - 1 : r - 1] > 1.0 / n) and np.all(d[l - 1 : r - 1] < 1.0)
    assert np.all(np.diff(d) <= 1e-12)  # nonincreasing with nonincreasing p
    total = float(d.sum())
    assert total <= k + 1e-9
    if k < m:
        assert abs(total - k) <= 1e-9
    interior_res, up_slack, down_slack = kkt_residuals(prof, pop)
    assert interior_res <= 1e-7
    assert up_slack >= -1e-9
    assert down_slack >= -1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 40), st.floats(1.0, 6.0), st.integers(0, 10**6))
def test_theorem7_sandwich_and_truncation(nu, m, k, seed):
    n = 4 ** nu
    if k * n < m:
        k = math.ceil(m / n)
    pop = _random_pop(np.random.default_rng(seed), m)
    prof = solve_cd(n, float(k), pop)
    canon = canonical_truncate(prof)
    # d0 <= d < 4 d0 and capacity is respected.
    assert np.all(canon.densities <= prof.densities + 1e-15)
    assert np.all(prof.densities < 4.0 * canon.densities + 1e-15)
    assert float(canon.densities.sum()) <= k + 1e-9
    exact = cd_cost(prof, pop)
    rounded = lower_bound(canon.densities, pop)
    assert exact <= rounded + 1e-12
    assert rounded < 2.0 * exact + math.sqrt(2.0) / 6.0 + 1e-12


def test_monotone_comparative_statics():
    rng = np.random.default_rng(3)
    pop = _random_pop(rng, 20)
    costs_k = [cd_cost(solve_cd(64, k, pop), pop) for k in (1.0, 1.5, 2.0, 4.0, 8.0)]
    assert all(a >= b - 1e-12 for a, b in zip(costs_k, costs_k[1:]))
    costs_n = [cd_cost(solve_cd(4 ** nu, 2.0, pop), pop) for nu in (2, 3, 4, 5)]
    assert all(a >= b - 1e-12 for a, b in zip(costs_n, costs_n[1:]))


def test_uniqueness_under_permuted_ties():
    # Equal popularities must give equal densities regardless of ordering.
    pop = _pop([0.3, 0.3, 0.2, 0.2])
    d = solve_cd(16, 2.0, pop).densities
    assert d[0] == d[1] and d[2] == d[3]


def test_real_valued_capacity():
    pop = zipf(6, 1.0)
    prof = solve_cd(16, 1.5, pop)
    assert abs(float(prof.densities.sum()) - 1.5) <= 1e-9


def test_json_roundtrip():
    prof = solve_cd(16, 1.0, zipf(5, 1.1))
    doc = json.loads(prof.to_json())
    assert set(doc) == {"n_nodes", "capacity", "l", "r", "mu", "densities"}
    back = DensityProfile.from_json(prof.to_json())
    assert np.array_equal(back.densities, prof.densities)
    assert (back.l_index, back.r_index) == (prof.l_index, prof.r_index)
    assert back.mu == prof.mu
