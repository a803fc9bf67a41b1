"""Spatial/frequency grids and short-range potential models.

All objects here are immutable after construction.  Quadrature is the
composite trapezoid rule; potentials with jumps expose their breakpoints so
that every panel integrates a smooth piece (one-sided limits at the ends).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np

__all__ = [
    "HypothesisViolation",
    "SpatialGrid",
    "FrequencyGrid",
    "Potential",
    "eval_potential",
    "weighted_l1_norm",
    "japanese",
    "trapezoid_weights",
]

class HypothesisViolation(ValueError):
    """A standing hypothesis of an estimate or theorem does not hold."""


# Relative magnitude below which a potential value is treated as zero when the
# numerical support of a smooth kind is computed.
SUPPORT_REL_TOL = 1e-20

BUILTIN_KINDS = ("zero", "square_barrier", "gaussian", "sech2_barrier")


def japanese(x):
    """<x> = sqrt(1 + x^2)."""
    return np.sqrt(1.0 + np.square(x))


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights for (possibly non-uniform) ascending nodes."""
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    if x.size < 2:
        return w
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float = -40.0
    x_max: float = 40.0
    n_points: int = 2049

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise ValueError(f"n_points must be an integer >= 3, got {self.n_points}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not (self.x_min < 0.0 < self.x_max):
            raise ValueError(
                f"grid must straddle the origin (x_min < 0 < x_max), got [{self.x_min}, {self.x_max}]"
            )

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    @property
    def nyquist(self) -> float:
        return math.pi / self.h

    @property
    def half_extent(self) -> float:
        return max(abs(self.x_min), abs(self.x_max))

    def refined(self) -> "SpatialGrid":
        """Same extent, spacing halved (every old node is kept)."""
        return SpatialGrid(self.x_min, self.x_max, 2 * self.n_points - 1)

    def index_of(self, x0: float) -> int:
        return int(np.argmin(np.abs(self.x - x0)))


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Sorted, symmetric sample of the spectral variable tau.

    ``weights`` are trapezoid weights on each connected piece (a band grid
    consists of two mirrored pieces).
    """

    tau: np.ndarray
    weights: np.ndarray
    step: float
    includes_zero: bool = False

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if tau.ndim != 1 or tau.size < 2:
            raise ValueError("frequency grid needs at least two samples")
        if np.any(np.diff(tau) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if not np.allclose(tau, -tau[::-1], rtol=0, atol=1e-12 * max(1.0, np.abs(tau).max())):
            raise ValueError("frequency grid must be symmetric about 0")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    def __len__(self):
        return self.tau.size

    @property
    def tau_max(self) -> float:
        return float(np.abs(self.tau).max())

    @classmethod
    def symmetric(cls, tau_max: float, n_half: int, include_zero: bool = True) -> "FrequencyGrid":
        """Uniform grid on [-tau_max, tau_max]; with include_zero=False the
        origin is dropped (limit flag unset)."""
        pos = np.linspace(0.0, tau_max, n_half + 1)
        step = pos[1] - pos[0]
        tau = np.concatenate([-pos[:0:-1], pos])
        w = trapezoid_weights(tau)
        if not include_zero:
            keep = tau != 0.0
            tau, w = tau[keep], w[keep]
        return cls(tau, w, step, include_zero)

    @classmethod
    def band(cls, lo: float, hi: float, step: float) -> "FrequencyGrid":
        """Mirrored pair of uniform grids on [lo, hi] and [-hi, -lo]."""
        if not (0 < lo < hi):
            raise ValueError("band requires 0 < lo < hi")
        n = max(2, int(math.ceil((hi - lo) / step)))
        pos = np.linspace(lo, hi, n + 1)
        wpos = trapezoid_weights(pos)
        tau = np.concatenate([-pos[::-1], pos])
        w = np.concatenate([wpos[::-1], wpos])
        return cls(tau, w, pos[1] - pos[0], False)

    def covers(self, lo: float, hi: float) -> bool:
        t = np.abs(self.tau)
        return bool(t.min() <= lo + 1e-12 and t.max() >= hi - 1e-12)


@dataclass(frozen=True, eq=False)
class Potential:
    """Real short-range potential V with decay exponent gamma.

    Built-in kinds are nonnegative (so H has no eigenvalues).  ``sampled``
    potentials are linearly interpolated and extended by zero.
    """

    kind: str
    V0: float = 0.0
    a: float = 1.0
    w: float = 1.0
    gamma: float = 2.0
    x_samples: np.ndarray | None = field(default=None, repr=False)
    v_samples: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in BUILTIN_KINDS + ("sampled",):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not self.gamma >= 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if self.kind in BUILTIN_KINDS and self.V0 < 0:
            raise ValueError("built-in potentials must be nonnegative (V0 >= 0)")
        if self.kind == "square_barrier" and not self.a > 0:
            raise ValueError("square_barrier needs a > 0")
        if self.kind == "gaussian" and not self.w > 0:
            raise ValueError("gaussian needs w > 0")
        if self.kind == "sampled":
            xs = np.asarray(self.x_samples, dtype=float)
            vs = np.asarray(self.v_samples, dtype=float)
            if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 2:
                raise ValueError("sampled potential needs matching 1-D x and V arrays")
            if np.any(np.diff(xs) <= 0):
                raise ValueError("sample abscissae must be strictly increasing")
            if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(vs))):
                raise ValueError("non-finite potential samples")
            object.__setattr__(self, "x_samples", xs)
            object.__setattr__(self, "v_samples", vs)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, gamma: float = 2.0) -> "Potential":
        return cls("zero", gamma=gamma)

    @classmethod
    def square_barrier(cls, V0: float = 1.0, a: float = 1.0, gamma: float = 2.0) -> "Potential":
        return cls("square_barrier", V0=V0, a=a, gamma=gamma)

    @classmethod
    def gaussian(cls, V0: float = 1.0, w: float = 1.0, gamma: float = 2.0) -> "Potential":
        return cls("gaussian", V0=V0, w=w, gamma=gamma)

    @classmethod
    def sech2_barrier(cls, V0: float = 1.0, gamma: float = 2.0) -> "Potential":
        return cls("sech2_barrier", V0=V0, gamma=gamma)

    @classmethod
    def sampled(cls, x, v, gamma: float = 2.0) -> "Potential":
        return cls("sampled", x_samples=np.asarray(x, float), v_samples=np.asarray(v, float), gamma=gamma)

    @classmethod
    def from_csv(cls, path: str | Path, gamma: float = 2.0) -> "Potential":
        """Two-column CSV (x, V); a non-numeric first row is taken as a header."""
        xs, vs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    xs.append(float(row[0]))
                    vs.append(float(row[1]))
                except ValueError:
                    if xs:
                        raise
        return cls.sampled(xs, vs, gamma=gamma)

    # -- evaluation ---------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "square_barrier":
            return np.where(np.abs(x) <= self.a, self.V0, 0.0)
        if self.kind == "gaussian":
            return self.V0 * np.exp(-np.square(x / self.w))
        if self.kind == "sech2_barrier":
            return self.V0 / np.square(np.cosh(np.clip(x, -350.0, 350.0)))
        xs, vs = self.x_samples, self.v_samples
        return np.interp(x, xs, vs, left=0.0, right=0.0)

    def limits(self, x) -> tuple[np.ndarray, np.ndarray]:
        """One-sided limits (V(x-0), V(x+0)); they differ only at jumps."""
        x = np.asarray(x, dtype=float)
        v = self(x)
        left, right = v.copy(), v.copy()
        if self.kind == "square_barrier":
            left = np.where(x == -self.a, 0.0, left)
            right = np.where(x == self.a, 0.0, right)
        elif self.kind == "sampled":
            x0, x1 = self.x_samples[0], self.x_samples[-1]
            left = np.where(x == x0, 0.0, left)
            right = np.where(x == x1, 0.0, right)
        return left, right

    @property
    def breakpoints(self) -> np.ndarray:
        if self.kind == "square_barrier":
            return np.array([-self.a, self.a])
        if self.kind == "sampled":
            return self.x_samples.copy()
        return np.empty(0)

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero" or self.V0 == 0 and self.kind in BUILTIN_KINDS:
            return True
        return self.kind == "sampled" and not np.any(self.v_samples)

    def support(self) -> tuple[float, float] | None:
        """Closed interval outside which V vanishes (numerically, for smooth
        kinds: |V| < SUPPORT_REL_TOL * max|V|).  None for V = 0."""
        if self.is_zero:
            return None
        if self.kind == "square_barrier":
            return (-self.a, self.a)
        if self.kind == "gaussian":
            r = self.w * math.sqrt(-math.log(SUPPORT_REL_TOL))
            return (-r, r)
        if self.kind == "sech2_barrier":
            # sech^2 x <= 4 exp(-2|x|)
            r = 0.5 * math.log(4.0 / SUPPORT_REL_TOL)
            return (-r, r)
        nz = np.flatnonzero(self.v_samples)
        lo = self.x_samples[max(nz[0] - 1, 0)]
        hi = self.x_samples[min(nz[-1] + 1, self.x_samples.size - 1)]
        return (float(lo), float(hi))

    def describe(self) -> dict:
        d = {"kind": self.kind, "gamma": self.gamma}
        if self.kind in ("square_barrier", "gaussian", "sech2_barrier"):
            d["V0"] = self.V0
        if self.kind == "square_barrier":
            d["a"] = self.a
        if self.kind == "gaussian":
            d["w"] = self.w
        if self.kind == "sampled":
            d["n_samples"] = int(self.x_samples.size)
        return d

    def with_gamma(self, gamma: float) -> "Potential":
        return Potential(self.kind, self.V0, self.a, self.w, gamma, self.x_samples, self.v_samples)


def eval_potential(p: Potential, x: float) -> float:
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    return float(p(x))


def _panel_nodes(p: Potential, g: SpatialGrid) -> np.ndarray:
    x = g.x
    bp = p.breakpoints
    bp = bp[(bp > x[0]) & (bp < x[-1])]
    return np.union1d(x, bp)


def panel_trapezoid(nodes: np.ndarray, f_left: np.ndarray, f_right: np.ndarray) -> float:
    """Panel-wise trapezoid: f_right[k] is the value at nodes[k] seen from the
    panel to its right, f_left[k] the value seen from the panel to its left."""
    dx = np.diff(nodes)
    return float(0.5 * np.sum(dx * (f_right[:-1] + f_left[1:])))


def weighted_l1_norm(p: Potential, gamma: float, g: SpatialGrid) -> float:
    """Trapezoid value of int <x>^gamma |V(x)| dx over the grid extent.

    Breakpoints of V inside the grid are added as nodes, so piecewise-smooth
    potentials are integrated panel by panel.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    nodes = _panel_nodes(p, g)
    vl, vr = p.limits(nodes)
    if not (np.all(np.isfinite(vl)) and np.all(np.isfinite(vr))):
        raise ValueError("potential has non-finite samples on the grid")
    wgt = japanese(nodes) ** gamma
    return panel_trapezoid(nodes, wgt * np.abs(vl), wgt * np.abs(vr))


def potential_node_weights(p: Potential, nodes: np.ndarray) -> np.ndarray:
    """Trapezoid weights with V folded in: W_k = (dx_{k-1} V(x_k-0) + dx_k V(x_k+0)) / 2."""
    vl, vr = p.limits(nodes)
    dx = np.diff(nodes)
    W = np.zeros_like(nodes)
    W[:-1] += 0.5 * dx * vr[:-1]
    W[1:] += 0.5 * dx * vl[1:]
    return W


def refine_nodes(nodes: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Split every panel into r equal pieces.  Returns the refined nodes and the
    indices of the original nodes inside them."""
    nodes = np.asarray(nodes, float)
    if r == 1:
        return nodes.copy(), np.arange(nodes.size)
    frac = np.arange(r) / r
    inner = nodes[:-1, None] + np.diff(nodes)[:, None] * frac[None, :]
    out = np.concatenate([inner.ravel(), nodes[-1:]])
    return out, np.arange(nodes.size) * r
