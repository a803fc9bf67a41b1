"""Shell functions phi_N(x) = sum_{j=0}^N |x|^{-1/2} 1{2^j <= |x| <= 2^{j+1}} in
one dimension and the Riesz potential I_{1/2} phi_N at the origin.

Both ||phi_N||_2^2 and I_{1/2}(phi_N)(0) = int |y|^{-1/2} phi_N(y) dy equal
2 (N + 1) ln 2 (one ln 2 per shell and side), so I(0)^2 / ||phi_N||^2 grows
linearly: the endpoint Sobolev bound cannot hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ShellFunction", "build_phiN", "riesz_at_zero", "scaling_report", "ScalingReport"]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ShellFunction:
    N: int
    n: int = 1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"N must be a nonnegative integer, got {self.N}")
        if self.n != 1:
            raise ValueError("only n = 1 is implemented")

    @property
    def shells(self) -> list[tuple[float, float]]:
        return [(2.0 ** j, 2.0 ** (j + 1)) for j in range(self.N + 1)]

    def __call__(self, x):
        r = np.abs(np.asarray(x, dtype=float))
        inside = (r >= 1.0) & (r <= 2.0 ** (self.N + 1))
        out = np.zeros_like(r)
        out[inside] = r[inside] ** -0.5
        return out

    def log_samples(self, per_shell: int = 64) -> tuple[np.ndarray, np.ndarray]:
        """Positive-side samples on a logarithmic radial grid."""
        r = np.geomspace(1.0, 2.0 ** (self.N + 1), per_shell * (self.N + 1) + 1)
        return r, self(r)

    def l2_norm_sq(self) -> float:
        """Exact: int_{2^j}^{2^{j+1}} r^{-1} dr = ln 2 per shell and side."""
        return 2.0 * (self.N + 1) * LN2

    def l2_norm_sq_quadrature(self, per_shell: int = 64) -> float:
        """Trapezoid cross-check in the variable u = ln r (integrand r f^2 = 1)."""
        r, f = self.log_samples(per_shell)
        u = np.log(r)
        return 2.0 * float(np.trapezoid(r * f ** 2, u))


def build_phiN(N: int, n: int = 1) -> ShellFunction:
    return ShellFunction(N, n)


def riesz_at_zero(sf: ShellFunction) -> float:
    """I_{1/2}(phi_N)(0) with Riesz constant 1, by exact shell antiderivatives:
    int_{2^j}^{2^{j+1}} r^{-1/2} r^{-1/2} dr = ln 2 per shell and side."""
    if sf.n != 1:
        raise ValueError("only n = 1 is implemented")
    return float(sum(2.0 * math.log(b / a) for a, b in sf.shells))


@dataclass
class ScalingReport:
    N: list
    I0: list
    norm_sq: list
    ratio: list
    slope_I0_sq: float
    slope_norm_sq: float
    residual_I0_sq: float
    residual_norm_sq: float
    slope_I0_sq_vs_N: float
    slope_norm_sq_vs_N: float
    doubling: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _fit(xv, yv):
    coef, res, *_ = np.polyfit(xv, yv, 1, full=True)
    return float(coef[0]), float(res[0]) if res.size else 0.0


def scaling_report(N_values) -> ScalingReport:
    """Log-log slopes of I(0)^2 and ||phi_N||^2.

    The primary fits use the shell count N + 1 (the exact formulas are
    quadratic and linear in it); slopes against N itself are reported too.
    ``doubling`` lists ratio(2N)/ratio(N) for every N whose double is present.
    """
    Ns = sorted({int(v) for v in N_values})
    if len(Ns) < 3:
        raise ValueError("need at least 3 distinct N values")
    if Ns[0] < 1:
        raise ValueError("N values must be >= 1 for a log-log fit")
    I0 = np.array([riesz_at_zero(build_phiN(N)) for N in Ns])
    nsq = np.array([build_phiN(N).l2_norm_sq() for N in Ns])
    ratio = I0 ** 2 / nsq
    lshell = np.log(np.array(Ns, dtype=float) + 1)
    lN = np.log(np.array(Ns, dtype=float))
    s1, r1 = _fit(lshell, np.log(I0 ** 2))
    s2, r2 = _fit(lshell, np.log(nsq))
    if not (np.isfinite(s1) and np.isfinite(s2)):
        raise ValueError("degenerate fit")
    t1, _ = _fit(lN, np.log(I0 ** 2))
    t2, _ = _fit(lN, np.log(nsq))
    pos = {N: k for k, N in enumerate(Ns)}
    doubling = [(N, float(ratio[pos[2 * N]] / ratio[pos[N]])) for N in Ns if 2 * N in pos]
    return ScalingReport(Ns, I0.tolist(), nsq.tolist(), ratio.tolist(), s1, s2, r1, r2, t1, t2, doubling)
