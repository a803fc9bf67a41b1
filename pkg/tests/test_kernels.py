import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from lpscatter.grid import FrequencyGrid, HypothesisViolation, Potential, SpatialGrid
from lpscatter.kernels import (
    KERNEL_CONSTANT,
    CoverageError,
    NyquistError,
    build_lp_window,
    build_perturbed_kernel,
    calibrate_constant,
    free_kernel,
    free_profile,
    kernel_frequency_grid,
    leading_kernel_KM,
    lp_phi,
    lp_psi,
    verify_kernel_estimate,
)
from lpscatter.scattering import NON_RESONANT, RESONANT, ScatteringData

G = SpatialGrid(-10.0, 10.0, 201)
BUILTINS = [Potential.square_barrier(1.0, 1.0), Potential.gaussian(1.0, 1.0), Potential.sech2_barrier(1.0)]


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-5, max_value=1e5))
def test_partition_of_unity(s):
    total = sum(float(lp_phi(s / 2.0 ** j)) for j in range(-20, 21))
    assert abs(total - 1.0) < 1e-12


def test_window_shape():
    s = np.linspace(-3, 3, 6001)
    phi = lp_phi(s)
    assert np.all(phi >= 0) and np.all(phi <= 1 + 1e-15)
    assert np.all(phi[(np.abs(s) < 0.5) | (np.abs(s) > 2)] == 0)
    assert np.array_equal(phi, lp_phi(-s))
    assert np.all(lp_psi(np.linspace(-1, 1, 11)) == 1)
    assert lp_phi(1.0) == 1.0
    w = build_lp_window(3)
    assert w.M == 8 and w.support == (4.0, 16.0)
    with pytest.raises(ValueError):
        build_lp_window(0.5)


def test_calibration_constant():
    assert abs(calibrate_constant(1.0) - 1 / (2 * math.pi)) < 1e-8
    assert KERNEL_CONSTANT == 1 / (2 * math.pi)


@pytest.mark.parametrize("M", [0.5, 1.0, 4.0])
def test_free_profile_matches_quadrature(M):
    fg = kernel_frequency_grid(M, G)
    for z in (0.0, 0.3, 1.7, 5.0, 18.0):
        ref = quad(lambda t: lp_phi(t / M) * math.cos(t * z), 0.5 * M, 2 * M, epsabs=1e-14, limit=200)[0] / math.pi
        assert abs(free_profile(M, np.array([z]), fg)[0] - ref) < 1e-10


def test_free_kernel_toeplitz_and_scaling():
    K1 = free_kernel(None, 1.0, G)
    assert np.abs(K1.K[1:, 1:] - K1.K[:-1, :-1]).max() == 0
    assert K1.symmetry_defect() == 0
    # phi(tau/2) kernel at offset z equals 2 times the M = 1 kernel at 2z
    K2 = free_kernel(None, 2.0, G)
    n = G.n_points
    assert np.abs(K2.K[0, : n // 2] - 2 * K1.K[0, 0:n:2][: n // 2]).max() < 1e-10


def test_free_kernel_decay():
    # the constant in |K_M(z)| <= C M <M z>^{-2} does not depend on M
    consts = []
    for M in (1.0, 4.0):
        K = free_kernel(None, M, G)
        z = np.abs(G.x - G.x[0])
        consts.append((np.abs(K.K[0]) * (1 + (M * z) ** 2) / M).max())
    assert np.all(np.isfinite(consts))
    assert consts[1] <= 1.01 * consts[0]


def test_zero_potential_reproduces_free_kernel():
    for M in (1.0, 4.0):
        K = build_perturbed_kernel(Potential.zero(), G, M)
        F = free_kernel(None, M, G)
        assert np.abs(K.K - F.K).max() < 1e-8


def test_realness_and_symmetry_high_energy():
    K = build_perturbed_kernel(Potential.square_barrier(1.0, 1.0), G, 4.0)
    assert K.realness_defect() <= 1e-6
    assert K.symmetry_defect() <= 1e-6


@pytest.mark.parametrize("p,M", [(p, M) for p in BUILTINS for M in (0.25, 1.0, 4.0)]
                         + [(BUILTINS[0], 16.0)])
def test_symmetry_builtins(p, M):
    g = SpatialGrid(-5.0, 5.0, 101)
    assert build_perturbed_kernel(p, g, M).symmetry_defect() <= 1e-6


def test_leading_kernel_of_free_data_is_free():
    M = 0.5
    fg = kernel_frequency_grid(M, G)
    one = np.ones(len(fg), dtype=complex)
    zero = np.zeros(len(fg), dtype=complex)
    sd = ScatteringData(fg.tau, one, zero, zero, verdict=NON_RESONANT)
    KM = leading_kernel_KM(sd, None, M, G)
    assert np.abs(KM.K - free_kernel(None, M, G, fg).K).max() < 1e-12
    with pytest.raises(ValueError):
        leading_kernel_KM(sd, None, 2.0, G)


def test_grid_guards():
    M = 1.0
    coarse = FrequencyGrid.band(0.5, 2.0, 0.2)
    with pytest.raises(NyquistError):
        free_kernel(None, M, G, coarse)
    narrow = FrequencyGrid.band(0.6, 2.0, 0.01)
    with pytest.raises(CoverageError):
        free_kernel(None, M, G, narrow)
    with pytest.raises(ValueError):
        free_kernel(build_lp_window(1), 1.0, G)


def test_estimate_modes_and_hypotheses():
    F1 = free_kernel(None, 1.0, G)
    F4 = free_kernel(None, 4.0, G)
    rep = verify_kernel_estimate(F4, F4, 4.0, 2.0, 0.5)
    assert rep.constant == 0 and rep.estimate_id == "high_frequency"
    with pytest.raises(ValueError):
        verify_kernel_estimate(F1, F4, 4.0, 2.0, 0.5)  # scale mismatch
    with pytest.raises(HypothesisViolation):
        verify_kernel_estimate(F4, F4, 4.0, 1.2, 0.5)  # sigma > gamma - 1
    M = 0.5
    fg = kernel_frequency_grid(M, G)
    one = np.ones(len(fg), dtype=complex)
    zero = np.zeros(len(fg), dtype=complex)
    KM = leading_kernel_KM(ScatteringData(fg.tau, one, zero, zero, verdict=RESONANT), None, M, G)
    with pytest.raises(HypothesisViolation):
        verify_kernel_estimate(KM, KM, M, 2.0, 0.5)
    with pytest.raises(ValueError):
        verify_kernel_estimate(free_kernel(None, M, G), free_kernel(None, M, G), M, 2.0, 0.5)


def test_zero_potential_high_energy_constant_vanishes():
    K = build_perturbed_kernel(Potential.zero(), G, 4.0)
    rep = verify_kernel_estimate(K, free_kernel(None, 4.0, G), 4.0, 2.0, 0.5)
    assert rep.constant < 1e-6
