import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpscatter.grid import (
    FrequencyGrid,
    Potential,
    SpatialGrid,
    eval_potential,
    japanese,
    trapezoid_weights,
    weighted_l1_norm,
)

BUILTINS = [Potential.square_barrier(1.0, 1.0), Potential.gaussian(2.0, 1.0), Potential.sech2_barrier(1.5)]


def test_eval_examples():
    assert eval_potential(Potential.square_barrier(1, 1), 0.0) == 1.0
    assert eval_potential(Potential.square_barrier(1, 1), 5.0) == 0.0
    assert eval_potential(Potential.gaussian(2, 1), 0.0) == 2.0
    with pytest.raises(ValueError):
        eval_potential(Potential.gaussian(2, 1), math.nan)


@pytest.mark.parametrize("p", BUILTINS)
def test_builtins_even_and_nonnegative(p):
    x = np.linspace(-30, 30, 1001)
    assert np.array_equal(p(x), p(-x))
    assert np.all(p(x) >= 0)


def test_weighted_norm_oracles(grid):
    sq = Potential.square_barrier(1.0, 1.0)
    assert weighted_l1_norm(Potential.zero(), 3.0, grid) == 0.0
    assert weighted_l1_norm(sq, 0.0, grid) == pytest.approx(2.0, abs=1e-12)
    # int_{-1}^{1} (1 + x^2) dx = 8/3; trapezoid error is L h^2 max|f''| / 12
    err = abs(weighted_l1_norm(sq, 2.0, grid) - 8.0 / 3.0)
    assert err <= 2.0 * grid.h ** 2 * 2.0 / 12 * (1 + 1e-9)
    err_fine = abs(weighted_l1_norm(sq, 2.0, grid.refined()) - 8.0 / 3.0)
    assert err / err_fine == pytest.approx(4.0, rel=0.02)
    # gaussian with gamma = 0: sqrt(pi) w V0
    assert weighted_l1_norm(Potential.gaussian(2.0, 1.5), 0.0, grid) == pytest.approx(2 * 1.5 * math.sqrt(math.pi), rel=1e-9)


@pytest.mark.parametrize("p", BUILTINS)
def test_weighted_norm_monotone_and_refinement_stable(p, grid):
    vals = [weighted_l1_norm(p, gm, grid) for gm in (0.0, 1.0, 2.0, 3.0)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    if p.kind != "square_barrier":
        assert abs(weighted_l1_norm(p, 2.0, grid.refined()) - vals[2]) <= 1e-6 * vals[2]


def test_grid_validation():
    with pytest.raises(ValueError):
        SpatialGrid(1.0, 2.0, 11)
    with pytest.raises(ValueError):
        SpatialGrid(-1.0, 1.0, 2)
    g = SpatialGrid(-1.0, 1.0, 5)
    assert g.h == 0.5 and g.refined().n_points == 9


def test_potential_validation():
    with pytest.raises(ValueError):
        Potential.square_barrier(-1.0)
    with pytest.raises(ValueError):
        Potential("triangle")
    with pytest.raises(ValueError):
        Potential.sampled([0, 0, 1], [1, 2, 3])


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("x,V\n-1,0\n0,2\n1,0\n")
    p = Potential.from_csv(path)
    assert p(0.0) == 2.0 and p(0.5) == 1.0 and p(3.0) == 0.0
    assert p.support() == (-1.0, 1.0)


def test_frequency_grids():
    fg = FrequencyGrid.symmetric(2.0, 4)
    assert np.allclose(fg.tau, -fg.tau[::-1]) and 0.0 in fg.tau
    assert fg.weights.sum() == pytest.approx(4.0)
    band = FrequencyGrid.band(0.5, 2.0, 0.1)
    assert band.covers(0.5, 2.0) and not band.includes_zero
    assert band.weights.sum() == pytest.approx(3.0)
    with pytest.raises(ValueError):
        FrequencyGrid(np.array([0.0, 1.0]), np.ones(2), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=40, unique=True))
def test_trapezoid_weights_integrate_linear_exactly(pts):
    x = np.sort(np.array(pts))
    w = trapezoid_weights(x)
    assert w.sum() == pytest.approx(x[-1] - x[0], rel=1e-12, abs=1e-12)
    assert w @ x == pytest.approx(0.5 * (x[-1] ** 2 - x[0] ** 2), rel=1e-9, abs=1e-9)


def test_japanese():
    assert japanese(0.0) == 1.0
    assert japanese(3.0) == pytest.approx(math.sqrt(10))
