import math

import numpy as np
import pytest
from scipy.integrate import quad

from lpscatter.counterexample import build_phiN, riesz_at_zero, scaling_report

LN2 = math.log(2.0)


def test_closed_form_values():
    f = build_phiN(5)
    assert f(1.5) == 1.5 ** -0.5
    assert f(-1.5) == 1.5 ** -0.5
    assert f(0.5) == 0
    assert f(2.0 ** 6 + 1) == 0
    r, v = f.log_samples(8)
    assert r[0] == 1 and math.isclose(r[-1], 2.0 ** 6) and np.allclose(v, r ** -0.5)


@pytest.mark.parametrize("N", [0, 1, 5, 10])
def test_norm_exact(N):
    f = build_phiN(N)
    assert math.isclose(f.l2_norm_sq(), 2 * (N + 1) * LN2, rel_tol=1e-15)
    # independent check: integrate 1/r shell by shell
    ref = 2 * sum(quad(lambda r: f(r) ** 2, 2.0 ** j, 2.0 ** (j + 1))[0] for j in range(N + 1))
    assert math.isclose(f.l2_norm_sq(), ref, rel_tol=1e-10)


@pytest.mark.parametrize("N", range(0, 21))
def test_norm_quadrature_cross_check(N):
    f = build_phiN(N)
    assert abs(f.l2_norm_sq_quadrature() / f.l2_norm_sq() - 1) <= 0.005


def test_riesz_at_zero():
    assert math.isclose(riesz_at_zero(build_phiN(0)), 2 * LN2)
    f = build_phiN(10)
    ref = 2 * sum(quad(lambda y: y ** -0.5 * f(y), 2.0 ** j, 2.0 ** (j + 1))[0] for j in range(11))
    assert math.isclose(riesz_at_zero(f), ref, rel_tol=1e-10)
    assert math.isclose(riesz_at_zero(f), 22 * LN2, rel_tol=1e-14)


def test_ratio_strictly_increasing():
    rep = scaling_report(range(1, 41))
    assert all(b > a for a, b in zip(rep.ratio, rep.ratio[1:]))
    assert np.allclose(rep.ratio, [2 * (N + 1) * LN2 for N in rep.N])


def test_dropping_top_shell():
    # removing the outermost shell lowers I(0) by exactly 2 ln 2
    for N in (3, 8):
        assert math.isclose(riesz_at_zero(build_phiN(N)) - riesz_at_zero(build_phiN(N - 1)), 2 * LN2)


def test_scaling_slopes():
    rep = scaling_report([4, 8, 16, 32, 64])
    assert abs(rep.slope_I0_sq - 2.0) <= 0.05
    assert abs(rep.slope_norm_sq - 1.0) <= 0.05
    assert rep.residual_I0_sq < 1e-20 and rep.residual_norm_sq < 1e-20
    for N, d in rep.doubling:
        assert abs(d - 2.0) <= 0.2
    assert dict(rep.doubling)[16] == pytest.approx(33 / 17)


def test_input_validation():
    with pytest.raises(ValueError):
        scaling_report([4, 8])
    with pytest.raises(ValueError):
        scaling_report([0, 4, 8])
    with pytest.raises(ValueError):
        build_phiN(-1)
    with pytest.raises(ValueError):
        build_phiN(2.5)
    with pytest.raises(ValueError):
        build_phiN(3, n=2)
