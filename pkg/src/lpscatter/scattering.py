"""Transmission/reflection coefficients from Jost data and the zero-energy
resonance test.

    T(tau)   = 2i tau / (2i tau - int V m_+)
    R_+(tau) = T/(2i tau) int e^{-2i tau t} V m_-
    R_-(tau) = T/(2i tau) int e^{+2i tau t} V m_+

R_+ belongs to a wave incident from the right, R_- to one from the left.
The origin is a resonance point iff T(0) != 0 (the free case is resonant).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import FrequencyGrid, Potential, SpatialGrid
from .jost import JostField, holder_norm, solve_jost_field

__all__ = [
    "ScatteringData",
    "ScatteringError",
    "ResonanceInconclusive",
    "coefficients_from_field",
    "compute_scattering",
    "transmission",
    "reflection",
    "check_scattering_identity",
    "detect_resonance",
    "unitarity_defect",
    "low_energy_holder",
    "RESONANCE_THRESHOLD",
    "SLOPE_STABILITY",
    "DEFAULT_RESONANCE_TAUS",
]

RESONANCE_THRESHOLD = 0.02
SLOPE_STABILITY = 0.1
DENOMINATOR_FLOOR = 1e-12
DEFAULT_RESONANCE_TAUS = (0.2, 0.1, 0.05, 0.025)

RESONANT = "resonant"
NON_RESONANT = "non_resonant"


class ScatteringError(ArithmeticError):
    """Denominator of T numerically zero."""


class ResonanceInconclusive(RuntimeError):
    """|T| is not monotone along the probe sequence, so no fit is attempted."""


@dataclass
class ScatteringData:
    tau: np.ndarray
    T: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray
    verdict: str | None = None
    alpha: complex | None = None
    alpha_plus: complex | None = None
    alpha_minus: complex | None = None
    fits: dict = field(default_factory=dict, repr=False)

    def at(self, tau0: float) -> tuple[complex, complex, complex]:
        k = int(np.argmin(np.abs(self.tau - tau0)))
        if abs(self.tau[k] - tau0) > 1e-12 * max(1.0, abs(tau0)):
            raise KeyError(f"tau={tau0} not sampled")
        return complex(self.T[k]), complex(self.R_plus[k]), complex(self.R_minus[k])

    def summary(self) -> dict:
        def c(z):
            return None if z is None else [float(np.real(z)), float(np.imag(z))]

        return {
            "verdict": self.verdict,
            "alpha": c(self.alpha),
            "alpha_plus": c(self.alpha_plus),
            "alpha_minus": c(self.alpha_minus),
            "unitarity_max_defect": unitarity_defect(self),
        }


def coefficients_from_field(jf: JostField, strict: bool = False):
    """(T, R_plus, R_minus) on jf.tau.

    At tau = 0 the quotients are replaced by their limits: T = 1, R = 0 when
    int V m_+ vanishes (free case), T = 0, R = -1 otherwise.
    """
    tau = jf.tau
    B = jf.moments["B_plus"]
    z = tau == 0
    two_i_tau = 2j * np.where(z, 1.0, tau)
    den = two_i_tau - B
    small = (np.abs(den) < DENOMINATOR_FLOOR) & ~z
    if small.any():
        raise ScatteringError(
            f"transmission denominator below {DENOMINATOR_FLOOR:g} at tau={tau[small][0]:.6g}"
        )
    T = 1.0 / (1.0 - B / two_i_tau)  # exactly 1 when B = 0
    R_minus = T * jf.moments["A_plus"] / two_i_tau
    R_plus = T * jf.moments["A_minus"] / two_i_tau
    if z.any():
        free = np.abs(B[z]) < DENOMINATOR_FLOOR
        T[z] = np.where(free, 1.0, 0.0)
        R_plus[z] = np.where(free, 0.0, -1.0)
        R_minus[z] = np.where(free, 0.0, -1.0)
        if strict:
            raise ValueError("tau = 0 is excluded")
    return T, R_plus, R_minus


def compute_scattering(
    p: Potential,
    g: SpatialGrid,
    tau,
    jf: JostField | None = None,
    classify: bool = True,
) -> ScatteringData:
    """T, R_+ and R_- on a frequency sample; with ``classify`` the resonance
    verdict and the slopes alpha, alpha_+/- are attached."""
    tau = np.asarray(tau.tau if isinstance(tau, FrequencyGrid) else tau, dtype=float).ravel()
    if jf is None:
        jf = solve_jost_field(p, g, tau)
    T, Rp, Rm = coefficients_from_field(jf)
    sd = ScatteringData(jf.tau.copy(), T, Rp, Rm)
    if classify:
        res = detect_resonance(p, g)
        sd.verdict = res.verdict
        sd.alpha, sd.alpha_plus, sd.alpha_minus = res.alpha, res.alpha_plus, res.alpha_minus
        sd.fits = res.fits
    return sd


def _single(p, g, tau):
    if tau == 0:
        raise ValueError("tau must be nonzero")
    if not np.isfinite(tau):
        raise ValueError("tau must be finite")
    jf = solve_jost_field(p, g, np.array([float(tau)]))
    return coefficients_from_field(jf)


def transmission(p: Potential, g: SpatialGrid, tau: float) -> complex:
    return complex(_single(p, g, tau)[0][0])


def reflection(p: Potential, g: SpatialGrid, tau: float, side: str = "+") -> complex:
    T, Rp, Rm = _single(p, g, tau)
    if side in ("+", "plus"):
        return complex(Rp[0])
    if side in ("-", "minus"):
        return complex(Rm[0])
    raise ValueError(f"side must be '+' or '-', got {side!r}")


def unitarity_defect(sd: ScatteringData, min_abs_tau: float = 0.0) -> float:
    """max over |tau| > min_abs_tau of ||T|^2 + |R_+/-|^2 - 1|."""
    keep = np.abs(sd.tau) > min_abs_tau
    if not keep.any():
        return 0.0
    t2 = np.abs(sd.T[keep]) ** 2
    d = np.maximum(np.abs(t2 + np.abs(sd.R_plus[keep]) ** 2 - 1), np.abs(t2 + np.abs(sd.R_minus[keep]) ** 2 - 1))
    return float(d.max())


def check_scattering_identity(jf: JostField, sd: ScatteringData, tau: float, g: SpatialGrid | None = None) -> float:
    """sup_x of the defect in T m_-/+ = R_+/- e^{+/-2i tau x} m_+/- + m_+/-(., -tau),
    maximized over both signs."""
    x = jf.x if g is None else g.x
    if x.size != jf.x.size:
        raise ValueError("grid does not match the Jost field")
    k, kn = jf.column(tau), jf.column(-tau)
    T, Rp, Rm = sd.at(tau)
    mp, mm = jf.m_plus[:, k], jf.m_minus[:, k]
    mp_neg, mm_neg = jf.m_plus[:, kn], jf.m_minus[:, kn]
    d_plus = T * mm - (Rp * np.exp(2j * tau * x) * mp + mp_neg)
    d_minus = T * mp - (Rm * np.exp(-2j * tau * x) * mm + mm_neg)
    return float(max(np.abs(d_plus).max(), np.abs(d_minus).max()))


@dataclass
class ResonanceResult:
    verdict: str
    alpha: complex | None
    alpha_plus: complex | None
    alpha_minus: complex | None
    T0: complex
    fits: dict

    def __iter__(self):
        # (verdict, alpha) unpacking
        return iter((self.verdict, self.alpha))


def _pair_fits(tau: np.ndarray, f: np.ndarray):
    """Slope and intercept of the line through each consecutive pair."""
    slopes = (f[:-1] - f[1:]) / (tau[:-1] - tau[1:])
    inter = f[1:] - slopes * tau[1:]
    return slopes, inter


def detect_resonance(
    p: Potential,
    g: SpatialGrid,
    tau_seq=DEFAULT_RESONANCE_TAUS,
    threshold: float = RESONANCE_THRESHOLD,
    stability: float = SLOPE_STABILITY,
) -> ResonanceResult:
    """Classify the origin by extrapolating T linearly to tau = 0.

    Non-resonant when the intercept of the line through the two smallest tau
    has modulus <= threshold and the slopes of the last two pair fits differ by
    at most ``stability`` times the last slope.
    """
    ts = np.asarray(tau_seq, dtype=float)
    if ts.size < 3:
        raise ValueError("need at least 3 tau values")
    if np.any(ts <= 0) or np.any(np.diff(ts) >= 0):
        raise ValueError("tau_seq must be positive and strictly decreasing")
    jf = solve_jost_field(p, g, ts, residual_samples=0)
    T, Rp, Rm = coefficients_from_field(jf)
    aT = np.abs(T)
    steps = np.diff(aT)
    tol = 1e-9 * max(1.0, aT.max())
    if not (np.all(steps <= tol) or np.all(steps >= -tol)):
        raise ResonanceInconclusive(f"|T| is not monotone along tau={ts.tolist()}: {aT.tolist()}")
    sT, iT = _pair_fits(ts, T)
    sP, _ = _pair_fits(ts, 1 + Rp)
    sM, _ = _pair_fits(ts, 1 + Rm)
    T0 = complex(iT[-1])
    a_last, a_prev = sT[-1], sT[-2]
    stable = abs(a_last) > 0 and abs(a_last - a_prev) <= stability * abs(a_last)
    non_res = abs(T0) <= threshold and stable
    fits = {
        "tau": ts.tolist(),
        "abs_T": aT.tolist(),
        "slopes": [complex(s) for s in sT],
        "intercepts": [complex(c) for c in iT],
        "slope_change": float(abs(a_last - a_prev) / abs(a_last)) if abs(a_last) > 0 else float("inf"),
    }
    if non_res:
        return ResonanceResult(NON_RESONANT, complex(a_last), complex(sP[-1]), complex(sM[-1]), T0, fits)
    return ResonanceResult(RESONANT, None, None, None, T0, fits)


def low_energy_holder(p: Potential, g: SpatialGrid, sigma: float, step: float = 0.01) -> dict:
    """C^{0,sigma} norms of T/tau and (R_+/- + 1)/tau on [-1, 1] minus {0}."""
    fg = FrequencyGrid.symmetric(1.0, int(round(1.0 / step)), include_zero=False)
    sd = compute_scattering(p, g, fg, classify=False)
    t = sd.tau
    return {
        "T/tau": float(holder_norm(sd.T / t, sigma, t)),
        "(R_plus+1)/tau": float(holder_norm((sd.R_plus + 1) / t, sigma, t)),
        "(R_minus+1)/tau": float(holder_norm((sd.R_minus + 1) / t, sigma, t)),
    }
