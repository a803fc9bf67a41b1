import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpscatter.grid import FrequencyGrid, HypothesisViolation, Potential, SpatialGrid
from lpscatter.jost import (
    ESTIMATE_IDS,
    JostDivergenceError,
    gronwall_bound,
    holder_seminorm,
    jost_derivative,
    kernel_D,
    kernel_D_dtau,
    panel_masses,
    solve_jost,
    solve_jost_field,
    tail_integral,
    verify_jost_estimates,
)


def _ch_sh(q, s):
    """cosh(q s) and sinh(q s)/q, with the q -> 0 limit s."""
    ch = np.cosh(q * s)
    sh = np.where(abs(q) < 1e-12, s, np.sinh(q * s) / np.where(abs(q) < 1e-12, 1.0, q))
    return ch, sh


def barrier_m_plus(x, tau, V0=1.0, a=1.0):
    """m_+ for V0 on [-a, a] by plane-wave matching (independent of the solver)."""
    q = np.sqrt(complex(V0 - tau * tau))  # f'' = q^2 f inside
    ea = np.exp(1j * tau * a)

    def inside(s):  # f with f(a) = e^{i tau a}, f'(a) = i tau e^{i tau a}
        ch, sh = _ch_sh(q, s - a)
        return ea * (ch + 1j * tau * sh), ea * (q * q * sh + 1j * tau * ch)

    u, du = inside(-a)
    # left: f = C e^{i tau x} + D e^{-i tau x}
    C = (u + du / (1j * tau)) / 2 * np.exp(1j * tau * a)
    D = (u - du / (1j * tau)) / 2 * np.exp(-1j * tau * a)
    f = np.where(x > a, np.exp(1j * tau * x),
                 np.where(x >= -a, inside(x)[0], C * np.exp(1j * tau * x) + D * np.exp(-1j * tau * x)))
    return np.exp(-1j * tau * x) * f


def test_kernel_D_examples():
    assert kernel_D(2.5, 0.0) == 2.5
    assert kernel_D(0.0, 3.0) == 0.0
    assert abs(kernel_D(1.0, math.pi)) < 1e-15
    # derivative against a centred difference
    t, tau, e = 1.3, 0.7, 1e-5
    fd = (kernel_D(t, tau + e) - kernel_D(t, tau - e)) / (2 * e)
    assert abs(kernel_D_dtau(t, tau) - fd) < 1e-9
    assert kernel_D_dtau(2.0, 0.0) == 4j


def test_free_case_is_trivial(grid):
    jf = solve_jost_field(Potential.zero(), grid, np.array([-1.0, 0.0, 2.0]), derivative=True)
    assert np.all(jf.m_plus == 1) and np.all(jf.m_minus == 1)
    assert np.all(jf.dm_plus == 0)
    assert np.all(jost_derivative(Potential.zero(), grid, 1.5) == 0)


@pytest.mark.parametrize("tau", [0.3, 1.0, 2.0, 10.0])
def test_barrier_matches_plane_wave_matching(grid, barrier, tau):
    m = solve_jost(barrier, grid, tau, "+")
    assert np.abs(m - barrier_m_plus(grid.x, tau)).max() < 1e-6


def test_minus_side_is_mirror_of_plus_for_even_potential(grid, barrier):
    jf = solve_jost_field(barrier, grid, np.array([0.7, 3.0]))
    assert np.abs(jf.m_minus - jf.m_plus[::-1]).max() < 1e-12


def test_exactly_one_beyond_support(grid, barrier):
    jf = solve_jost_field(barrier, grid, np.array([0.5, 4.0]))
    assert np.all(jf.m_plus[grid.x > 1.0] == 1.0)
    assert np.all(jf.m_minus[grid.x < -1.0] == 1.0)


def test_conjugation_symmetry(grid, gauss):
    jf = solve_jost_field(gauss, grid, np.array([-2.5, -0.4, 0.4, 2.5]), derivative=True)
    assert np.abs(jf.m_plus[:, 0] - np.conj(jf.m_plus[:, 3])).max() < 1e-13
    assert np.abs(jf.m_minus[:, 1] - np.conj(jf.m_minus[:, 2])).max() < 1e-13


def test_high_energy_decay_rate(grid, barrier):
    d10 = np.abs(solve_jost(barrier, grid, 10.0) - 1).max()
    d20 = np.abs(solve_jost(barrier, grid, 20.0) - 1).max()
    assert d10 / d20 == pytest.approx(2.0, rel=0.2)


def test_envelope_holds(grid, gauss):
    tau = np.array([0.2, 1.0, 5.0])
    jf = solve_jost_field(gauss, grid, tau)
    mass = math.sqrt(math.pi)  # int |V|
    assert np.all(np.abs(jf.m_plus - 1) <= np.expm1(mass / tau)[None, :] + 1e-12)


def test_derivative_matches_finite_differences_near_support(grid, barrier):
    step = 1e-3
    dm = jost_derivative(barrier, grid, 2.0)
    fd = (solve_jost(barrier, grid, 2.0 + step) - solve_jost(barrier, grid, 2.0 - step)) / (2 * step)
    near = np.abs(grid.x) <= 5.0
    assert np.abs(dm - fd)[near].max() < 1e-4


def test_derivative_fd_error_is_second_order(grid, barrier):
    dm = jost_derivative(barrier, grid, 2.0)
    errs = []
    for step in (4e-3, 2e-3):
        fd = (solve_jost(barrier, grid, 2.0 + step) - solve_jost(barrier, grid, 2.0 - step)) / (2 * step)
        errs.append(np.abs(dm - fd).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_derivative_bound_refinement_stable(grid, barrier):
    w = 1 + grid.x ** 2
    c0 = (np.abs(jost_derivative(barrier, grid, 2.0)) / w).max()
    g2 = grid.refined()
    c1 = (np.abs(jost_derivative(barrier, g2, 2.0)) / (1 + g2.x ** 2)).max()
    assert np.isfinite(c0) and abs(c1 - c0) / c0 < 0.05


def test_residual_gate_raises():
    with pytest.raises(JostDivergenceError) as exc:
        solve_jost_field(Potential.gaussian(1.0, 1.0), SpatialGrid(-10, 10, 101), np.array([1.0]),
                         tol=1e-30, refine=1)
    assert exc.value.observed > exc.value.bound


def test_rejects_nonfinite_tau(grid, barrier):
    with pytest.raises(ValueError):
        solve_jost_field(barrier, grid, np.array([np.nan]))
    with pytest.raises(ValueError):
        solve_jost(barrier, grid, 1.0, side="up")


# -- Gronwall ---------------------------------------------------------------


def picard(a, b, x, iters=2000):
    beta = panel_masses(b, x)
    v = a.copy()
    for _ in range(iters):
        new = a + np.concatenate([np.cumsum((beta * v[1:])[::-1])[::-1], [0.0]])
        if np.array_equal(new, v):
            break
        v = new
    return v


def test_gronwall_trivial_and_closed_form():
    x = np.linspace(-5, 5, 201)
    a = 1 + 0.5 * np.sin(x) ** 2
    assert np.array_equal(gronwall_bound(a, np.zeros_like(x), x), a)
    b = np.exp(-x ** 2)
    G = gronwall_bound(np.full_like(x, 2.0), b, x)
    assert np.allclose(G, 2.0 * np.exp(tail_integral(b, x)), rtol=1e-12)
    # continuous closed form: B(x) = (sqrt(pi)/2) erfc(x) up to trapezoid error
    B = 0.5 * math.sqrt(math.pi) * np.array([math.erfc(v) for v in x])
    assert np.allclose(G, 2.0 * np.exp(B), rtol=1e-3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_gronwall_dominates_picard(seed):
    r = np.random.default_rng(seed)
    x = np.sort(r.uniform(-5, 5, 60))
    a = r.uniform(0, 2, x.size)
    b = r.uniform(0, 1.5, x.size)
    assert np.all(gronwall_bound(a, b, x) >= picard(a, b, x) - 1e-12)


def test_gronwall_rejects_negative_input():
    x = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        gronwall_bound(-np.ones(5), np.ones(5), x)
    with pytest.raises(ValueError):
        gronwall_bound(np.ones(4), np.ones(5), x)


# -- Hölder -----------------------------------------------------------------


def test_holder_examples():
    tau = np.linspace(0, 1, 101)
    assert holder_seminorm(np.full(101, 3.0 + 1j), 0.5, tau) == 0.0
    assert holder_seminorm(tau, 0.5, tau) == pytest.approx(1.0, abs=1e-12)
    vals = []
    for n in (50, 200):
        t = np.linspace(-1, 1, 2 * n + 1)
        vals.append(holder_seminorm(np.sqrt(np.abs(t)), 0.5, t))
    assert vals[0] <= vals[1] <= 1.0 + 1e-12
    assert vals[1] > 0.99
    with pytest.raises(ValueError):
        holder_seminorm(tau, 1.0, tau)


# -- estimate ladder ----------------------------------------------------------


def test_estimates_free_case_zero(small_grid):
    reps = verify_jost_estimates(Potential.zero(), small_grid, FrequencyGrid.symmetric(2.0, 20), 2.0, 0.5)
    assert [r.estimate_id for r in reps] == list(ESTIMATE_IDS)
    assert all(r.constant == 0 for r in reps)


def test_estimates_barrier_finite_and_stable(grid, barrier):
    reps = verify_jost_estimates(barrier, grid, FrequencyGrid.symmetric(4.0, 80), 2.0, 0.5)
    for r in reps:
        assert r.finite and r.drift < 0.10, r.to_dict()


def test_estimates_gaussian_gamma3(grid):
    reps = verify_jost_estimates(Potential.gaussian(1.0, 1.0, gamma=3.0), grid,
                                 FrequencyGrid.symmetric(4.0, 80), 3.0, 0.5, refine=False)
    assert {r.estimate_id: r for r in reps}["dm_decay"].finite


def test_estimates_reject_bad_sigma(small_grid, barrier):
    fg = FrequencyGrid.symmetric(1.0, 10)
    with pytest.raises(HypothesisViolation):
        verify_jost_estimates(barrier, small_grid, fg, 1.2, 0.5)
    with pytest.raises(HypothesisViolation):
        verify_jost_estimates(barrier, small_grid, fg, 2.0, 1.0)
