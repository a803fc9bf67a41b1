"""Littlewood-Paley windows and dense kernels of phi(sqrt(H0)/M), phi(sqrt(H)/M)
and the low-energy leading kernel K_M.

Perturbed kernel (x < y; the case x >= y swaps the roles of x and y):

    K(x, y) = c * int phi(tau/M) T(tau) f_+(y, tau) f_-(x, tau) d tau

c is fixed by the V = 0 anchor, where T f_+(y) f_-(x) = e^{-i tau (x - y)} and
K must equal the free kernel (1/2pi) int phi(tau/M) e^{i tau (x-y)} d tau.
Since phi is even this gives c = +1/(2pi); ``calibrate_constant`` recomputes
it numerically and the value is stored with every kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .grid import FrequencyGrid, HypothesisViolation, Potential, SpatialGrid, japanese, trapezoid_weights
from .jost import EstimateReport, JostField, solve_jost_field
from .scattering import NON_RESONANT, ScatteringData, coefficients_from_field

__all__ = [
    "lp_phi",
    "lp_psi",
    "LPWindow",
    "build_lp_window",
    "KernelMatrix",
    "NyquistError",
    "CoverageError",
    "kernel_tau_step",
    "kernel_frequency_grid",
    "calibrate_constant",
    "free_kernel",
    "free_profile",
    "perturbed_kernel",
    "build_perturbed_kernel",
    "leading_kernel_KM",
    "lattice_transform",
    "kernel_estimate_shape",
    "verify_kernel_estimate",
    "KERNEL_CONSTANT",
]

# Oscillation budget per tau step: phase h_tau * max|x +/- y| <= pi/4.
PHASE_PER_STEP = math.pi / 4
# phi-hat(z) is below ~1e-11 of its peak for |z| >= 400; used for aliasing.
WINDOW_DECAY_LENGTH = 400.0
MIN_STEPS_PER_BAND = 64
TAU_CHUNK = 512

KERNEL_CONSTANT = 1.0 / (2.0 * math.pi)


class NyquistError(ValueError):
    pass


class CoverageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# window


def _chi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def lp_psi(s):
    """Smooth even cutoff: 1 on [-1, 1], 0 outside [-2, 2]."""
    a = np.abs(np.asarray(s, dtype=float))
    num = _chi(2.0 - a)
    return num / (num + _chi(a - 1.0))


def lp_phi(s):
    """phi(s) = psi(s) - psi(2s), supported in 1/2 <= |s| <= 2."""
    return lp_psi(s) - lp_psi(2.0 * np.asarray(s, dtype=float))


@dataclass(frozen=True)
class LPWindow:
    """phi(tau / 2^j)."""

    j: int

    @property
    def M(self) -> float:
        return 2.0 ** self.j

    @property
    def support(self) -> tuple[float, float]:
        return (0.5 * self.M, 2.0 * self.M)

    def __call__(self, tau):
        return lp_phi(np.asarray(tau, dtype=float) / self.M)

    def samples(self, fg: FrequencyGrid) -> np.ndarray:
        return self(fg.tau)


def build_lp_window(j: int) -> LPWindow:
    if int(j) != j:
        raise ValueError("dyadic index j must be an integer")
    return LPWindow(int(j))


def _scale_of(w: LPWindow | None, M: float) -> float:
    if not M > 0:
        raise ValueError("scale M must be positive")
    if w is not None and not math.isclose(w.M, M, rel_tol=1e-12):
        raise ValueError(f"window scale 2^{w.j} does not match M={M}")
    return float(M)


# ---------------------------------------------------------------------------
# kernel container


@dataclass
class KernelMatrix:
    """Dense kernel K(x_i, y_j) on a spatial grid.

    ``apply`` folds in the trapezoid weights: (K f)(x_i) = sum_j K_ij w_j f_j.
    """

    M: float
    x: np.ndarray
    K: np.ndarray
    provenance: str
    constant: float = KERNEL_CONSTANT
    meta: dict = field(default_factory=dict)

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.x)

    def apply(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.shape[0] != self.x.size:
            raise ValueError("function is not sampled on the kernel's grid")
        w = self.weights
        return self.K @ (w[:, None] * f if f.ndim == 2 else w * f)

    def symmetry_defect(self) -> float:
        return float(np.abs(self.K - self.K.T).max())

    def realness_defect(self) -> float:
        return float(np.abs(np.imag(self.K)).max()) if np.iscomplexobj(self.K) else 0.0

    def real(self) -> "KernelMatrix":
        return KernelMatrix(self.M, self.x, np.real(self.K).copy(), self.provenance, self.constant, dict(self.meta))


# ---------------------------------------------------------------------------
# frequency grids


def kernel_tau_step(M: float, g: SpatialGrid, potential_radius: float = 0.0) -> float:
    """Largest admissible uniform tau step for kernels at scale M on g.

    Three requirements: the oscillation budget h * max|x +/- y| <= pi/4,
    no aliasing of the integrand's transform (period 2 pi / h must exceed the
    span of x +/- y, the potential's reach and the window's decay length
    400/M), and at least MIN_STEPS_PER_BAND steps across M/2..2M.
    """
    span = 2.0 * g.half_extent
    h_phase = PHASE_PER_STEP / span
    h_alias = 2.0 * math.pi / (span + 2.0 * potential_radius + WINDOW_DECAY_LENGTH / M)
    h_band = 1.5 * M / MIN_STEPS_PER_BAND
    return min(h_phase, h_alias, h_band)


def _potential_radius(p: Potential | None) -> float:
    if p is None:
        return 0.0
    s = p.support()
    return 0.0 if s is None else max(abs(s[0]), abs(s[1]))


def kernel_frequency_grid(M: float, g: SpatialGrid, p: Potential | None = None) -> FrequencyGrid:
    """Mirrored band grid on M/2 <= |tau| <= 2M."""
    return FrequencyGrid.band(0.5 * M, 2.0 * M, kernel_tau_step(M, g, _potential_radius(p)))


def _check_nyquist(step: float, g: SpatialGrid):
    span = 2.0 * g.half_extent
    if step * span > PHASE_PER_STEP * (1 + 1e-9):
        raise NyquistError(
            f"tau step {step:.4g} violates the oscillation budget: need h_tau <= {PHASE_PER_STEP / span:.4g}"
        )


def _check_coverage(tau: np.ndarray, M: float):
    lo, hi = 0.5 * M, 2.0 * M
    pos, neg = tau[tau > 0], -tau[tau < 0]
    for side in (pos, neg):
        if side.size == 0 or side.min() > lo * (1 + 1e-12) or side.max() < hi * (1 - 1e-12):
            raise CoverageError(f"frequency sample does not cover {lo:g} <= |tau| <= {hi:g}")


def _uniform_step(tau: np.ndarray) -> float:
    d = np.diff(tau)
    d = d[d < 1.5 * d.min()]
    return float(d.max())


# ---------------------------------------------------------------------------
# free kernel


def free_profile(M: float, z, fg: FrequencyGrid) -> np.ndarray:
    """(1/2pi) sum_tau w phi(tau/M) cos(tau z) for an array of offsets z."""
    z = np.asarray(z, dtype=float)
    wphi = fg.weights * lp_phi(fg.tau / M) * KERNEL_CONSTANT
    out = np.empty(z.size)
    flat = z.ravel()
    for s in range(0, fg.tau.size, TAU_CHUNK):
        sl = slice(s, s + TAU_CHUNK)
        part = np.cos(np.outer(flat, fg.tau[sl])) @ wphi[sl]
        out = part if s == 0 else out + part
    return out.reshape(z.shape)


def free_kernel(w: LPWindow | None, M: float, g: SpatialGrid, fg: FrequencyGrid | None = None) -> KernelMatrix:
    """Toeplitz kernel (1/2pi) int phi(tau/M) e^{i tau (x - y)} d tau."""
    M = _scale_of(w, M)
    fg = fg or kernel_frequency_grid(M, g)
    _check_nyquist(fg.step, g)
    _check_coverage(fg.tau, M)
    n = g.n_points
    prof = free_profile(M, np.arange(n) * g.h, fg)
    K = toeplitz(prof)
    return KernelMatrix(M, g.x, K, "free", KERNEL_CONSTANT, {"tau_step": fg.step, "n_tau": len(fg)})


def calibrate_constant(M: float = 1.0, g: SpatialGrid | None = None) -> float:
    """Prefactor c that makes the Jost representation reproduce the free
    kernel at V = 0 (least squares over the kernel entries)."""
    g = g or SpatialGrid(-10.0, 10.0, 201)
    fg = kernel_frequency_grid(M, g)
    free = free_kernel(None, M, g, fg).K
    jf = solve_jost_field(Potential.zero(), g, fg)
    T, _, _ = coefficients_from_field(jf)
    raw = _jost_sum(g.x, fg.tau, fg.weights * lp_phi(fg.tau / M), T, jf.m_plus, jf.m_minus)
    raw = np.real(raw)
    return float(np.vdot(raw, free).real / np.vdot(raw, raw).real)


# ---------------------------------------------------------------------------
# perturbed kernel


def _jost_sum(x, tau, wphi, T, m_plus, m_minus) -> np.ndarray:
    """U(x, y) = sum_tau wphi T f_-(x) f_+(y); the kernel is U on x <= y
    (strictly x < y; equal on the diagonal) and U^T below."""
    coef = wphi * T
    F_minus = np.exp(-1j * np.outer(x, tau)) * m_minus
    F_plus = np.exp(1j * np.outer(x, tau)) * m_plus
    return (F_minus * coef[None, :]) @ F_plus.T


def _assemble(U: np.ndarray) -> np.ndarray:
    upper = np.triu(np.ones(U.shape, dtype=bool), k=1)
    K = np.where(upper, U, U.T)
    return K


def perturbed_kernel(jf: JostField, sd: ScatteringData, w: LPWindow | None, M: float,
                     g: SpatialGrid | None = None) -> KernelMatrix:
    """Kernel of phi(sqrt(H)/M) from precomputed Jost and scattering data."""
    M = _scale_of(w, M)
    g = g or jf.grid
    if g.n_points != jf.x.size:
        raise ValueError("grid does not match the Jost field")
    tau = jf.tau
    _check_coverage(tau, M)
    _check_nyquist(_uniform_step(tau), g)
    if not np.array_equal(sd.tau, tau):
        raise ValueError("scattering data and Jost field use different tau samples")
    wphi = trapezoid_weights(tau) * lp_phi(tau / M)
    keep = wphi != 0
    U = np.zeros((g.n_points, g.n_points), dtype=complex)
    idx = np.flatnonzero(keep)
    for s in range(0, idx.size, TAU_CHUNK):
        k = idx[s:s + TAU_CHUNK]
        U += _jost_sum(g.x, tau[k], wphi[k], sd.T[k], jf.m_plus[:, k], jf.m_minus[:, k])
    K = KERNEL_CONSTANT * _assemble(U)
    return KernelMatrix(M, g.x, K, "perturbed", KERNEL_CONSTANT,
                        {"tau_step": _uniform_step(tau), "n_tau": int(tau.size)})


def build_perturbed_kernel(p: Potential, g: SpatialGrid, M: float, fg: FrequencyGrid | None = None,
                           chunk: int = TAU_CHUNK) -> KernelMatrix:
    """Same as perturbed_kernel, solving for the Jost data chunk by chunk so
    only ``chunk`` tau columns are held at a time."""
    fg = fg or kernel_frequency_grid(M, g, p)
    _check_coverage(fg.tau, M)
    _check_nyquist(fg.step, g)
    wphi = fg.weights * lp_phi(fg.tau / M)
    idx = np.flatnonzero(wphi != 0)
    U = np.zeros((g.n_points, g.n_points), dtype=complex)
    for s in range(0, idx.size, chunk):
        k = idx[s:s + chunk]
        jf = solve_jost_field(p, g, fg.tau[k], residual_samples=1)
        T, _, _ = coefficients_from_field(jf)
        U += _jost_sum(g.x, fg.tau[k], wphi[k], T, jf.m_plus, jf.m_minus)
    K = KERNEL_CONSTANT * _assemble(U)
    return KernelMatrix(M, g.x, K, "perturbed", KERNEL_CONSTANT,
                        {"tau_step": fg.step, "n_tau": len(fg), "potential": p.describe()})


# ---------------------------------------------------------------------------
# leading kernel K_M


def lattice_transform(M: float, tau: np.ndarray, wts: np.ndarray, values: np.ndarray, z: np.ndarray) -> np.ndarray:
    """c * sum_tau w phi(tau/M) values(tau) e^{-i tau z} for every z."""
    coef = KERNEL_CONSTANT * wts * lp_phi(tau / M) * values
    keep = coef != 0
    tau, coef = tau[keep], coef[keep]
    out = np.zeros(z.size, dtype=complex)
    for s in range(0, tau.size, TAU_CHUNK):
        sl = slice(s, s + TAU_CHUNK)
        out += np.exp(-1j * np.outer(z, tau[sl])) @ coef[sl]
    return out


def leading_kernel_KM(sd: ScatteringData, w: LPWindow | None, M: float, g: SpatialGrid) -> KernelMatrix:
    """K_M(x, y) = c int e^{-i tau (x - y)} phi(tau/M) b(x, y, tau) d tau, x <= y:

        b = T                                  x <= 0 < y
        b = R_+ e^{2 i tau x} + 1              0 < x <= y
        b = R_- e^{-2 i tau y} + 1             x <= y <= 0

    (x = 0 paired with y > 0 falls in the first row), symmetric for x > y.
    """
    M = _scale_of(w, M)
    if not (0 < M <= 1):
        raise ValueError("leading kernel is defined for 0 < M <= 1")
    tau = sd.tau
    _check_coverage(tau, M)
    _check_nyquist(_uniform_step(tau), g)
    wts = trapezoid_weights(tau)
    n, h, x = g.n_points, g.h, g.x
    d = np.arange(-(n - 1), n) * h              # x_i - x_j = (i - j) h
    s = 2 * g.x_min + np.arange(2 * n - 1) * h  # x_i + x_j
    G1 = lattice_transform(M, tau, wts, np.ones_like(tau, dtype=complex), d)
    GT = lattice_transform(M, tau, wts, sd.T, d)
    GRp = lattice_transform(M, tau, wts, sd.R_plus, -s)
    GRm = lattice_transform(M, tau, wts, sd.R_minus, s)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    dif = i - j + (n - 1)
    sm = i + j
    xi, yj = x[i], x[j]
    region_a = (xi <= 0) & (yj > 0)
    region_b = xi > 0
    K = np.where(region_a, GT[dif], G1[dif] + np.where(region_b, GRp[sm], GRm[sm]))
    K = np.where(i <= j, K, K.T)
    return KernelMatrix(M, x, K, "leading_KM", KERNEL_CONSTANT,
                        {"tau_step": _uniform_step(tau), "n_tau": int(tau.size), "verdict": sd.verdict})


# ---------------------------------------------------------------------------
# remainder estimates


def kernel_estimate_shape(x: np.ndarray, M: float, gamma: float, sigma: float) -> np.ndarray:
    """(sum_+/- <M(x +/- y)>^{-sigma}) (<x>^{sigma-gamma} + <y>^{sigma-gamma})."""
    X, Y = x[:, None], x[None, :]
    osc = japanese(M * (X - Y)) ** -sigma + japanese(M * (X + Y)) ** -sigma
    dec = japanese(X) ** (sigma - gamma) + japanese(Y) ** (sigma - gamma)
    return osc * dec


def verify_kernel_estimate(K_test: KernelMatrix, K_ref: KernelMatrix, M: float, gamma: float,
                           sigma: float) -> EstimateReport:
    """Empirical constant sup |K_test - K_ref| / shape.

    High-energy mode (M >= 1) compares against the free kernel; low-energy
    mode (M <= 1) against K_M and includes the extra factor M in the shape.
    """
    if not (0 < sigma < 1) or sigma > gamma - 1:
        raise HypothesisViolation(f"hypothesis violated: sigma in (0,1) and sigma <= gamma - 1 required (sigma={sigma}, gamma={gamma})")
    for km in (K_test, K_ref):
        if not math.isclose(km.M, M, rel_tol=1e-12):
            raise ValueError(f"kernel scale {km.M} does not match M={M}")
    if K_test.x.size != K_ref.x.size:
        raise ValueError("kernels live on different grids")
    if K_ref.provenance == "free":
        if M < 1:
            raise ValueError("high-energy comparison against the free kernel requires M >= 1")
        mode, factor = "high", 1.0
    elif K_ref.provenance == "leading_KM":
        if M > 1:
            raise ValueError("low-energy comparison against K_M requires M <= 1")
        if K_ref.meta.get("verdict") not in (None, NON_RESONANT):
            raise HypothesisViolation("hypothesis violated: 0 must not be a resonance for the low-energy estimate")
        mode, factor = "low", M
    else:
        raise ValueError(f"reference kernel must be free or leading_KM, got {K_ref.provenance}")
    diff = np.abs(K_test.K - K_ref.K)
    shape = factor * kernel_estimate_shape(K_test.x, M, gamma, sigma)
    r = diff / shape
    k = int(np.argmax(r))
    i, j = np.unravel_index(k, r.shape)
    return EstimateReport(
        "high_frequency" if mode == "high" else "low_frequency",
        float(r[i, j]),
        None,
        {"gamma": gamma, "sigma": sigma, "M": M, "mode": mode},
        {"x": float(K_test.x[i]), "y": float(K_test.x[j]), "max_abs_diff": float(diff.max())},
    )
