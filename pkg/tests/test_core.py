import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.stats import pearsonr, rankdata, spearmanr

from conftest import brute_force_dri
from dri.core import (
    CorrelationGrid,
    CorrelationPair,
    DriConfig,
    adjusted_distance,
    correlate,
    dri,
    midranks,
    orthogonal_distance,
    pair_grid,
    penalty_weight,
    rank_with_midranks,
)
from dri.errors import ComputationError, UsageError

corr_values = st.floats(-1.0, 1.0, allow_nan=False)
STANDARD = DriConfig(method="standard")


# --- ranks ---------------------------------------------------------------


@pytest.mark.parametrize(
    "values, expected",
    [
        ([1, 2, 3], [1, 2, 3]),
        ([5, 5, 5], [2, 2, 2]),
        ([1, 2, 2, 4], [1, 2.5, 2.5, 4]),
    ],
)
def test_rank_with_midranks_examples(values, expected):
    assert rank_with_midranks(values) == expected


def test_rank_with_midranks_rejects_empty():
    with pytest.raises(UsageError):
        rank_with_midranks([])


@given(st.lists(st.integers(1, 7), min_size=1, max_size=40))
def test_midranks_match_scipy_and_sum(values):
    ranks = rank_with_midranks(values)
    np.testing.assert_allclose(ranks, rankdata(values, method="average"))
    n = len(values)
    assert math.isclose(sum(ranks), n * (n + 1) / 2)


def test_midranks_columnwise(rng):
    m = rng.integers(1, 6, size=(15, 7))
    np.testing.assert_allclose(midranks(m, axis=0), rankdata(m, axis=0))
    np.testing.assert_allclose(midranks(m, axis=1), rankdata(m, axis=1))


# --- correlate -----------------------------------------------------------


def test_correlate_examples():
    assert correlate([1, 2, 3], [1, 2, 3]) == 1.0
    assert correlate([1, 2, 3], [3, 2, 1]) == -1.0
    assert correlate([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(4.5 / math.sqrt(22.5), abs=1e-4)
    assert correlate([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(0.9487, abs=1e-4)


@pytest.mark.parametrize("kind", ["spearman-midrank", "pearson"])
def test_correlate_zero_variance_is_undefined(kind):
    assert correlate([2, 2, 2], [1, 5, 3], kind) is None


@pytest.mark.parametrize("x, y", [([1, 2], [1, 2]), ([1, 2, 3], [1, 2, 3, 4])])
def test_correlate_usage_errors(x, y):
    with pytest.raises(UsageError):
        correlate(x, y)


@settings(max_examples=60)
@given(st.integers(3, 30).flatmap(lambda n: st.tuples(st.lists(st.integers(1, 5), min_size=n, max_size=n),
                                                       st.lists(st.integers(1, 10), min_size=n, max_size=n))))
def test_correlate_matches_scipy(xy):
    x, y = xy
    assume(len(set(x)) > 1 and len(set(y)) > 1)
    assert correlate(x, y) == pytest.approx(spearmanr(x, y)[0], abs=1e-12)
    assert correlate(x, y, "pearson") == pytest.approx(pearsonr(x, y)[0], abs=1e-12)


# --- pair_grid -----------------------------------------------------------


def test_pair_grid_single_identical_pair():
    col = np.array([[1], [2], [3], [4]])
    grid = pair_grid(col, col, col, col)
    assert grid.pair(0, 0) == CorrelationPair(1.0, 1.0)
    assert dri(grid).value == 1.0


def test_pair_grid_shape_and_independent_cells(rng):
    ra, rb = rng.integers(1, 6, (10, 2)), rng.integers(1, 6, (12, 2))
    pa = np.argsort(rng.random((10, 2)), axis=1) + 1
    pb = np.argsort(rng.random((12, 2)), axis=1) + 1
    grid = pair_grid(ra, pa, rb, pb)
    assert (grid.n_considerations, grid.n_preferences) == (2, 2)
    for c in range(2):
        for p in range(2):
            assert grid.r[c, p] == pytest.approx(spearmanr(ra[:, c], pa[:, p])[0], abs=1e-12)
            assert grid.q[c, p] == pytest.approx(spearmanr(rb[:, c], pb[:, p])[0], abs=1e-12)


def test_pair_grid_constant_column_policies(rng):
    ra = rng.integers(1, 6, (8, 3))
    ra[:, 1] = 3
    rb = rng.integers(1, 6, (8, 3))
    pa = np.argsort(rng.random((8, 4)), axis=1) + 1
    pb = np.argsort(rng.random((8, 4)), axis=1) + 1
    excl = pair_grid(ra, pa, rb, pb)
    assert not excl.valid[1].any()
    assert excl.valid[[0, 2]].all()
    zero = pair_grid(ra, pa, rb, pb, degenerate_policy="treat-as-zero")
    assert zero.valid.all()
    assert (zero.r[1] == 0).all()


def test_pair_grid_too_few_respondents():
    m = np.array([[1], [2]])
    with pytest.raises(UsageError):
        pair_grid(m, m, np.array([[1], [2], [3]]), np.array([[1], [2], [3]]))


def test_pair_grid_column_mismatch(rng):
    with pytest.raises(UsageError):
        pair_grid(rng.integers(1, 6, (5, 2)), rng.integers(1, 6, (5, 2)),
                  rng.integers(1, 6, (5, 3)), rng.integers(1, 6, (5, 2)))


def test_grid_is_read_only():
    grid = CorrelationGrid([[0.1, 0.2]], [[0.3, 0.4]])
    with pytest.raises(ValueError):
        grid.r[0, 0] = 0.5


def test_grid_from_pairs_round_trip():
    pairs = [[CorrelationPair(0.5, 0.3), CorrelationPair(0, 0, valid=False)]]
    grid = CorrelationGrid.from_pairs(pairs)
    assert grid.n_valid == 1
    assert grid.pairs[0][0] == CorrelationPair(0.5, 0.3)
    assert not grid.pairs[0][1].valid


# --- distance, weight, adjustment -----------------------------------------


@pytest.mark.parametrize(
    "r, q, expected",
    [(0.5, 0.5, 0.0), (1.0, -1.0, math.sqrt(2)), (0.3, -0.1, 0.282843)],
)
def test_orthogonal_distance_examples(r, q, expected):
    assert orthogonal_distance(r, q) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize(
    "r, q, expected",
    [(0.05, 0.10, 0.5), (0.0, 0.0, 0.0), (0.25, 0.0, 1.0), (0.2, 0.1, 1.0)],
)
def test_penalty_weight_examples(r, q, expected):
    assert penalty_weight(r, q, 0.2) == pytest.approx(expected)


@pytest.mark.parametrize(
    "d, w, mode, expected",
    [
        (0.3, 1.0, "as-printed", 0.3),
        (0.3, 1.0, "floor-referenced", 0.3),
        (0.1, 0.5, "as-printed", 0.05),
        (0.0, 0.0, "floor-referenced", 0.707107),
    ],
)
def test_adjusted_distance_examples(d, w, mode, expected):
    assert adjusted_distance(d, w, mode, 1 / math.sqrt(2)) == pytest.approx(expected, abs=1e-6)


@given(corr_values, corr_values)
def test_distance_symmetry(r, q):
    assert orthogonal_distance(r, q) == orthogonal_distance(q, r)
    assert 0.0 <= orthogonal_distance(r, q) <= math.sqrt(2) + 1e-15


@given(corr_values, corr_values, corr_values, corr_values, st.floats(0.01, 1.0))
def test_penalty_bounds_and_monotone(r1, q1, r2, q2, tau):
    w1, w2 = penalty_weight(r1, q1, tau), penalty_weight(r2, q2, tau)
    assert 0.0 <= w1 <= 1.0
    if max(abs(r1), abs(q1)) <= max(abs(r2), abs(q2)):
        assert w1 <= w2
    if max(abs(r1), abs(q1)) >= tau:
        assert w1 == 1.0


@given(st.floats(0.01, 1.0), st.floats(0.0, 0.01))
def test_penalty_continuity_at_threshold(tau, eps):
    assume(eps <= tau)
    assert abs(penalty_weight(tau - eps, 0.0, tau) - 1.0) <= eps / tau + 1e-12


# --- dri -----------------------------------------------------------------


def test_dri_single_perfect_pair():
    grid = CorrelationGrid([[1.0]], [[1.0]])
    for cfg in (STANDARD, DriConfig(), DriConfig(adjustment_mode="as-printed")):
        assert dri(grid, cfg).value == 1.0


def test_dri_two_pair_hand_oracle():
    grid = CorrelationGrid([[0.5, -0.2]], [[0.3, -0.4]])
    res = dri(grid, STANDARD)
    assert res.mean_adjusted_distance == pytest.approx(0.141421, abs=1e-6)
    assert res.value == pytest.approx(0.6, abs=1e-12)
    assert res.n_pairs_penalized == 0 and res.mean_penalty == 1.0


def test_dri_no_valid_pairs():
    grid = CorrelationGrid([[np.nan]], [[0.2]])
    with pytest.raises(ComputationError, match="no usable correlation pairs"):
        dri(grid)


def test_dri_diagnostics():
    grid = CorrelationGrid([[0.05, 0.5], [np.nan, 0.0]], [[0.1, 0.4], [0.3, 0.0]])
    res = dri(grid, DriConfig())
    assert (res.n_pairs_total, res.n_pairs_valid, res.n_pairs_penalized) == (4, 3, 2)
    assert res.mean_penalty == pytest.approx((0.5 + 1.0 + 0.0) / 3)
    assert res.value == (-2 * res.mean_adjusted_distance + res.lam) / res.lam


def test_config_validation():
    with pytest.raises(UsageError):
        DriConfig(tau=0.0)
    with pytest.raises(UsageError):
        DriConfig(lam=-1.0)
    with pytest.raises(UsageError):
        DriConfig(adjustment_mode="shrink")


def _random_grid(rng, c, p, low=-1.0, high=1.0, invalid_rate=0.0):
    r = rng.uniform(low, high, (c, p)) * rng.choice((-1, 1), (c, p))
    q = rng.uniform(low, high, (c, p)) * rng.choice((-1, 1), (c, p))
    mask = rng.random((c, p)) >= invalid_rate
    mask.flat[0] = True
    return CorrelationGrid(np.where(mask, r, np.nan), q)


def test_dri_matches_brute_force(rng):
    for _ in range(300):
        c, p = rng.integers(1, 5, size=2)
        grid = _random_grid(rng, c, p, invalid_rate=0.2)
        tau = float(rng.uniform(0.05, 1.0))
        pairs = [(None, None) if not grid.valid[i, j] else (float(grid.r[i, j]), float(grid.q[i, j]))
                 for i in range(c) for j in range(p)]
        for method, mode in (("standard", "floor-referenced"), ("modified", "floor-referenced"), ("modified", "as-printed")):
            cfg = DriConfig(tau=tau, method=method, adjustment_mode=mode)
            assert abs(dri(grid, cfg).value - brute_force_dri(pairs, tau, cfg.lam, method, mode)) <= 1e-12


@settings(max_examples=200)
@given(st.lists(st.tuples(corr_values, corr_values), min_size=1, max_size=16), st.floats(0.01, 0.5))
def test_mode_direction(pairs, tau):
    grid = CorrelationGrid([[p[0] for p in pairs]], [[p[1] for p in pairs]])
    std = dri(grid, STANDARD).value
    floor = dri(grid, DriConfig(tau=tau)).value
    shrink = dri(grid, DriConfig(tau=tau, adjustment_mode="as-printed")).value
    assert floor <= std + 1e-12
    assert shrink >= std - 1e-12
    if dri(grid, DriConfig(tau=tau)).n_pairs_penalized == 0:
        assert floor == std == shrink


@settings(max_examples=200)
@given(st.lists(st.tuples(corr_values, corr_values), min_size=1, max_size=16), st.floats(0.01, 0.99))
def test_dormancy(pairs, tau):
    grid = CorrelationGrid([[p[0] for p in pairs]], [[p[1] for p in pairs]])
    assume(np.all(np.maximum(np.abs(grid.r), np.abs(grid.q)) > tau))
    std = dri(grid, STANDARD).value
    for mode in ("floor-referenced", "as-printed"):
        assert abs(dri(grid, DriConfig(tau=tau, adjustment_mode=mode)).value - std) <= 1e-12


def test_exclude_pair_ignores_constant_column(rng):
    ra, rb = rng.integers(1, 6, (12, 3)), rng.integers(1, 6, (12, 3))
    pa = np.argsort(rng.random((12, 4)), axis=1) + 1
    pb = np.argsort(rng.random((12, 4)), axis=1) + 1
    base = dri(pair_grid(ra, pa, rb, pb)).value
    const = np.full((12, 1), 4)
    grown = pair_grid(np.hstack([ra, const]), pa, np.hstack([rb, const]), pb)
    assert dri(grown).value == base
