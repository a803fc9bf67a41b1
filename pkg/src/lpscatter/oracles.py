"""Independent closed forms used to validate the Volterra solver.

Transfer matrices for piecewise-constant potentials propagate (u, u') exactly
across each constant piece; no quadrature is involved.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["transfer_matrix_scattering", "square_barrier_scattering", "sech2_transmission_prob"]


def _piece_matrix(V0: float, L: float, tau: float) -> np.ndarray:
    """Fundamental matrix of u'' = (V0 - tau^2) u over a piece of length L."""
    q = np.sqrt(complex(tau * tau - V0))
    if abs(q) * L < 1e-8:
        return np.array([[1.0, L], [-(q * q) * L, 1.0]], dtype=complex)
    c, s = np.cos(q * L), np.sin(q * L)
    return np.array([[c, s / q], [-q * s, c]], dtype=complex)


def transfer_matrix_scattering(edges, values, tau: float) -> tuple[complex, complex, complex]:
    """(T, R_plus, R_minus) for V = values[k] on [edges[k], edges[k+1]], 0 elsewhere.

    R_minus is the reflection for a wave incident from the left
    (f_+ = e^{i tau x}/T + R_minus e^{-i tau x}/T on the far left), R_plus the
    one for incidence from the right.
    """
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    if tau == 0:
        raise ValueError("tau must be nonzero")
    if edges.size != values.size + 1 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be increasing with one more entry than values")
    # propagate right-to-left: state at x_right -> state at x_left
    Mtot = np.eye(2, dtype=complex)
    for k in range(values.size):
        # later pieces act after earlier ones
        Mtot = _piece_matrix(values[k], edges[k + 1] - edges[k], tau) @ Mtot
    # Mtot maps (u, u') at edges[0] to (u, u') at edges[-1]; invert for backward propagation
    back = np.linalg.inv(Mtot)
    a, b = edges[0], edges[-1]

    # f_+ = e^{i tau x} right of b
    ub = np.array([np.exp(1j * tau * b), 1j * tau * np.exp(1j * tau * b)])
    ua = back @ ub
    # ua = gamma e^{i tau a}(1, i tau) + delta e^{-i tau a}(1, -i tau)
    gam = (ua[0] + ua[1] / (1j * tau)) / 2 * np.exp(-1j * tau * a)
    dlt = (ua[0] - ua[1] / (1j * tau)) / 2 * np.exp(1j * tau * a)
    T = 1.0 / gam
    R_minus = dlt / gam

    # f_- = e^{-i tau x} left of a
    va = np.array([np.exp(-1j * tau * a), -1j * tau * np.exp(-1j * tau * a)])
    vb = Mtot @ va
    mu = (vb[0] - vb[1] / (1j * tau)) / 2 * np.exp(1j * tau * b)
    nu = (vb[0] + vb[1] / (1j * tau)) / 2 * np.exp(-1j * tau * b)
    R_plus = nu / mu
    return complex(T), complex(R_plus), complex(R_minus)


def square_barrier_scattering(V0: float, a: float, tau: float) -> tuple[complex, complex, complex]:
    return transfer_matrix_scattering([-a, a], [V0], tau)


def sech2_transmission_prob(V0: float, tau: float) -> float:
    """|T|^2 for V = V0 sech^2 x (Poschl-Teller barrier, unit width)."""
    k = abs(tau)
    sh = math.sinh(math.pi * k) ** 2
    d = 4.0 * V0 - 1.0
    if d > 0:
        extra = math.cosh(0.5 * math.pi * math.sqrt(d)) ** 2
    else:
        extra = math.cos(0.5 * math.pi * math.sqrt(-d)) ** 2
    return sh / (sh + extra)
