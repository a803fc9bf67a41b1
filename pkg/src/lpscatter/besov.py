"""Dyadic blocks of H0 and H, homogeneous Besov norms, the free/perturbed
equivalence ratio and cross-localization probes.

Free blocks are Fourier multipliers; they are applied either as a dense
Toeplitz quadrature kernel or through a zero-padded FFT (the two must agree).
Perturbed blocks use the Jost representation of the kernel.  Instead of
materializing the N x N matrix, the fast path splits the sum at y = x:

    (B f)(x) = c sum_tau w phi T [ f_-(x) sum_{y > x} f_+(y) f(y) dy
                                 + f_+(x) sum_{y <= x} f_-(y) f(y) dy ],

which is the dense matvec reordered (O(N N_tau) instead of O(N^2 N_tau)).
All blocks clip tau to the grid's Nyquist frequency pi/h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import fft, ifft, next_fast_len
from scipy.linalg import toeplitz

from .grid import FrequencyGrid, HypothesisViolation, Potential, SpatialGrid, trapezoid_weights
from .jost import solve_jost_field
from .kernels import (
    KERNEL_CONSTANT,
    WINDOW_DECAY_LENGTH,
    build_perturbed_kernel,
    free_profile,
    kernel_tau_step,
    lp_phi,
)
from .scattering import RESONANT, coefficients_from_field, detect_resonance

__all__ = [
    "HypothesisViolation",
    "BesovParams",
    "BesovReport",
    "BlockContext",
    "lp_block_apply",
    "lp_norm",
    "besov_norm",
    "besov_norms_batch",
    "EquivalenceReport",
    "equivalence_ratio",
    "default_suite",
    "make_probes",
    "CrossReport",
    "cross_localization_norm",
    "fit_decay_exponent",
]

EDGE_DECAY = 1e-10
NORM_FLOOR = 1e-12
BATCH_ELEMS = 4_000_000


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = 2.0
    j_min: int = -6
    j_max: int = 6

    def __post_init__(self):
        if not self.s >= 0:
            raise ValueError(f"s must be >= 0, got {self.s}")
        if not (1 < self.p < math.inf):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if int(self.j_min) != self.j_min or int(self.j_max) != self.j_max or self.j_min > self.j_max:
            raise ValueError("j_range must be a nonempty integer interval")

    @property
    def js(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def check_theorem(self, gamma: float | None = None) -> dict:
        """Raise HypothesisViolation unless s < 1/p (and gamma > 1 + 1/p when given)."""
        if not self.s < 1.0 / self.p:
            raise HypothesisViolation(f"hypothesis violated: s < 1/p required (s={self.s}, 1/p={1 / self.p:.4g})")
        if gamma is not None and not gamma > 1 + 1.0 / self.p:
            raise HypothesisViolation(f"hypothesis violated: gamma > 1 + 1/p required (gamma={gamma}, p={self.p})")
        return {"s<1/p": True, "gamma>1+1/p": gamma is not None}


def lp_norm(f, g: SpatialGrid | np.ndarray, p: float) -> np.ndarray | float:
    """Trapezoid L^p norm along axis 0."""
    w = trapezoid_weights(g.x if isinstance(g, SpatialGrid) else g)
    a = np.abs(np.asarray(f)) ** p
    val = np.tensordot(w, a, axes=(0, 0)) ** (1.0 / p)
    return float(val) if np.ndim(val) == 0 else val


class BlockContext:
    """Everything needed to apply phi(sqrt(H0)/2^j) or phi(sqrt(H)/2^j) on a
    grid.  Frequency grids are cached per j."""

    def __init__(self, g: SpatialGrid, potential: Potential | None = None):
        self.g = g
        self.potential = potential
        self._fg: dict[int, FrequencyGrid | None] = {}
        self._profiles: dict[int, np.ndarray] = {}

    @property
    def nyquist(self) -> float:
        return self.g.nyquist

    def tau_grid(self, j: int) -> FrequencyGrid | None:
        """Band grid for block j, clipped at the Nyquist frequency (None if the
        band lies entirely above it)."""
        if j not in self._fg:
            M = 2.0 ** j
            lo, hi = 0.5 * M, min(2.0 * M, self.nyquist * (1 - 1e-9))
            if lo >= hi:
                self._fg[j] = None
            else:
                radius = 0.0
                if self.potential is not None and self.potential.support() is not None:
                    radius = max(abs(v) for v in self.potential.support())
                self._fg[j] = FrequencyGrid.band(lo, hi, kernel_tau_step(M, self.g, radius))
        return self._fg[j]

    # -- free ----------------------------------------------------------------
    def _profile(self, j: int) -> np.ndarray:
        if j not in self._profiles:
            fg = self.tau_grid(j)
            n = self.g.n_points
            self._profiles[j] = free_profile(2.0 ** j, np.arange(n) * self.g.h, fg)
        return self._profiles[j]

    def free(self, F: np.ndarray, j: int, method: str = "dense") -> np.ndarray:
        F2 = F[:, None] if F.ndim == 1 else F
        if self.tau_grid(j) is None:
            out = np.zeros_like(F2, dtype=complex if np.iscomplexobj(F2) else float)
        elif method == "dense":
            K = toeplitz(self._profile(j))
            out = K @ (self.g.weights[:, None] * F2)
        elif method == "fft":
            out = self._free_fft(F2, j)
        else:
            raise ValueError(f"unknown free block method {method!r}")
        return out[:, 0] if F.ndim == 1 else out

    def _free_fft(self, F2: np.ndarray, j: int) -> np.ndarray:
        M = 2.0 ** j
        n, h = self.g.n_points, self.g.h
        pad = int(math.ceil((2 * self.g.half_extent + WINDOW_DECAY_LENGTH / M) / h))
        L = next_fast_len(n + pad)
        xi = 2 * math.pi * np.fft.fftfreq(L, d=h)
        mult = lp_phi(xi / M) * (np.abs(xi) < self.nyquist * (1 - 1e-9))
        spec = fft(F2, n=L, axis=0)
        out = ifft(spec * mult[:, None], axis=0)[:n]
        return out.real if not np.iscomplexobj(F2) else out

    # -- perturbed -----------------------------------------------------------
    def perturbed(self, F: np.ndarray, j: int, method: str = "fast") -> np.ndarray:
        if self.potential is None:
            raise ValueError("missing kernel: no potential attached to the block context")
        F2 = F[:, None] if F.ndim == 1 else F
        fg = self.tau_grid(j)
        if fg is None:
            out = np.zeros(F2.shape, dtype=float if not np.iscomplexobj(F2) else complex)
        elif method == "fast":
            out = self._perturbed_fast(F2, j, fg)
        elif method == "dense":
            K = build_perturbed_kernel(self.potential, self.g, 2.0 ** j, fg)
            out = K.apply(F2)
            out = out.real if not np.iscomplexobj(F2) else out
        else:
            raise ValueError(f"unknown perturbed block method {method!r}")
        return out[:, 0] if F.ndim == 1 else out

    def _perturbed_fast(self, F2: np.ndarray, j: int, fg: FrequencyGrid) -> np.ndarray:
        M = 2.0 ** j
        x = self.g.x
        n, nf = F2.shape
        wphi = fg.weights * lp_phi(fg.tau / M)
        # Real input: m(x, -tau) = conj m(x, tau) and T(-tau) = conj T(tau), so
        # the negative half of the band contributes the conjugate of the positive.
        real_input = not np.iscomplexobj(F2)
        idx = np.flatnonzero((wphi != 0) & ((fg.tau > 0) if real_input else True))
        Wf = self.g.weights[:, None] * F2
        out = np.zeros((n, nf), dtype=complex)
        chunk = max(8, min(512, BATCH_ELEMS // max(1, n * nf)))
        jchunk = max(chunk, 256)
        for s0 in range(0, idx.size, jchunk):
            ks = idx[s0:s0 + jchunk]
            jf = solve_jost_field(self.potential, self.g, fg.tau[ks], residual_samples=1)
            T, _, _ = coefficients_from_field(jf)
            coef = KERNEL_CONSTANT * wphi[ks] * T
            for s1 in range(0, ks.size, chunk):
                sl = slice(s1, s1 + chunk)
                tau = fg.tau[ks][sl]
                ph = np.exp(1j * np.outer(x, tau))
                Fp = ph * jf.m_plus[:, sl]
                Fm = ph.conj() * jf.m_minus[:, sl]
                Sp = np.cumsum(Fp[:, :, None] * Wf[:, None, :], axis=0)
                Sp = Sp[-1][None] - Sp                 # sum over y > x
                Sm = np.cumsum(Fm[:, :, None] * Wf[:, None, :], axis=0)  # y <= x
                out += np.einsum("t,xt,xtf->xf", coef[sl], Fm, Sp) + np.einsum("t,xt,xtf->xf", coef[sl], Fp, Sm)
        return 2.0 * out.real if real_input else out


def lp_block_apply(f, j: int, which: str, context: BlockContext, method: str | None = None) -> np.ndarray:
    """phi(sqrt(H0)/2^j) f (which='free') or phi(sqrt(H)/2^j) f (which='perturbed').
    f may be a single function or an (N, n_functions) batch."""
    if context is None:
        raise ValueError("missing kernel: a BlockContext is required")
    f = np.asarray(f)
    if f.shape[0] != context.g.n_points:
        raise ValueError("function is not sampled on the context grid")
    if which == "free":
        return context.free(f, j, method or "dense")
    if which == "perturbed":
        return context.perturbed(f, j, method or "fast")
    raise ValueError(f"which must be 'free' or 'perturbed', got {which!r}")


# ---------------------------------------------------------------------------
# Besov norms


@dataclass
class BesovReport:
    params: BesovParams
    which: str
    j: np.ndarray
    block_norms: np.ndarray
    norm: float
    tail: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "s": self.params.s, "p": self.params.p, "which": self.which,
            "j": self.j.tolist(), "block_norms": self.block_norms.tolist(),
            "norm": self.norm, "tail": self.tail,
        }


def _check_decay(F: np.ndarray):
    F2 = F[:, None] if F.ndim == 1 else F
    peak = np.abs(F2).max(axis=0)
    edge = np.maximum(np.abs(F2[0]), np.abs(F2[-1]))
    bad = edge > EDGE_DECAY * np.maximum(peak, 1.0)
    if bad.any():
        raise ValueError(
            f"function does not decay to {EDGE_DECAY:g} at the grid edges (edge value {edge[bad][0]:.3e}); enlarge the grid"
        )


def block_norm_table(F: np.ndarray, js, which: str, ctx: BlockContext, p: float) -> np.ndarray:
    """L^p norms of every block (rows: j, columns: functions)."""
    F2 = F[:, None] if F.ndim == 1 else F
    _check_decay(F2)
    out = np.empty((len(js), F2.shape[1]))
    for r, j in enumerate(js):
        out[r] = lp_norm(lp_block_apply(F2, int(j), which, ctx), ctx.g, p)
    return out


def aggregate(table: np.ndarray, js, s: float) -> tuple[np.ndarray, np.ndarray]:
    """(norms, tail share) from a block-norm table."""
    wts = 2.0 ** (np.asarray(js, dtype=float) * s)
    terms = (wts[:, None] * table) ** 2
    norms = np.sqrt(terms.sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        edge = np.maximum(terms[0], terms[-1])
        tail = np.where(norms > 0, np.sqrt(edge) / np.where(norms > 0, norms, 1.0), 0.0)
    return norms, tail


def besov_norms_batch(F, params: BesovParams, which: str, ctx: BlockContext) -> list[BesovReport]:
    F = np.asarray(F)
    table = block_norm_table(F, params.js, which, ctx, params.p)
    norms, tail = aggregate(table, params.js, params.s)
    return [BesovReport(params, which, params.js, table[:, k], float(norms[k]), float(tail[k]))
            for k in range(table.shape[1])]


def besov_norm(f, params: BesovParams, which: str, ctx: BlockContext) -> tuple[float, BesovReport]:
    """(sum_j 2^{2js} ||block_j f||_p^2)^{1/2} over params.j_range.

    The report's ``tail`` is the share of the norm carried by the two boundary
    scales, a proxy for what the truncated j-range drops."""
    f = np.asarray(f)
    if f.ndim != 1:
        raise ValueError("besov_norm takes a single function; use besov_norms_batch")
    rep = besov_norms_batch(f, params, which, ctx)[0]
    return rep.norm, rep


# ---------------------------------------------------------------------------
# equivalence ratio


def default_suite(g: SpatialGrid) -> dict[str, np.ndarray]:
    """Six real test functions: Gaussians, modulated Gaussians and compact
    bumps away from the origin."""
    x = g.x

    def bump(c, r):
        t = (x - c) / r
        out = np.zeros_like(x)
        inside = np.abs(t) < 1
        out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
        return out

    return {
        "gauss_w1": np.exp(-x ** 2 / 2),
        "gauss_w3": np.exp(-x ** 2 / 18),
        "mod_gauss_k2": np.cos(2 * x) * np.exp(-x ** 2 / 2),
        "mod_gauss_k6_shift": np.cos(6 * x) * np.exp(-(x - 2) ** 2 / 2),
        "bump_c3": bump(3.0, 2.0),
        "bump_c-5": bump(-5.0, 3.0),
    }


@dataclass
class EquivalenceReport:
    params: BesovParams
    names: list
    free_norms: np.ndarray
    perturbed_norms: np.ndarray
    ratios: np.ndarray
    constant: float
    free_table: np.ndarray = field(repr=False, default=None)
    perturbed_table: np.ndarray = field(repr=False, default=None)
    hypotheses: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "s": self.params.s, "p": self.params.p,
            "functions": list(self.names),
            "ratios": self.ratios.tolist(),
            "constant": self.constant,
            "hypotheses": dict(self.hypotheses),
        }

    def at_s(self, s: float) -> "EquivalenceReport":
        """Re-aggregate the stored block tables at another smoothness s."""
        params = BesovParams(s, self.params.p, self.params.j_min, self.params.j_max)
        return _ratio_report(params, self.names, self.free_table, self.perturbed_table, self.hypotheses)


def _ratio_report(params, names, ft, pt, hyp) -> EquivalenceReport:
    fn, _ = aggregate(ft, params.js, params.s)
    pn, _ = aggregate(pt, params.js, params.s)
    ok = (fn > NORM_FLOOR) & (pn > NORM_FLOOR)
    ratios = np.where(ok, pn / np.where(ok, fn, 1.0), np.nan)
    good = ratios[ok]
    constant = float(good.max() / good.min()) if good.size else float("nan")
    return EquivalenceReport(params, list(names), fn, pn, ratios, constant, ft, pt, dict(hyp))


def equivalence_ratio(f_suite, params: BesovParams, p: Potential, g: SpatialGrid,
                      ctx: BlockContext | None = None, check_s: bool = True) -> EquivalenceReport:
    """Per-function ratios ||f||_{B,H} / ||f||_{B,H0} and the suite constant
    max(ratio) / min(ratio).

    Raises HypothesisViolation for a resonant origin, s >= 1/p, or
    gamma <= 1 + 1/p.  The free Hamiltonian (V = 0) is accepted as the
    trivial case H = H0 even though its origin is resonant.
    """
    if isinstance(f_suite, dict):
        names, funcs = list(f_suite), list(f_suite.values())
    else:
        funcs = list(f_suite)
        names = [f"f{k}" for k in range(len(funcs))]
    F = np.stack([np.asarray(f, dtype=float) for f in funcs], axis=1)
    hyp = {}
    if check_s:
        params.check_theorem(p.gamma)
        hyp.update({"s<1/p": True, "gamma>1+1/p": True})
    if not p.is_zero:
        res = detect_resonance(p, g)
        if res.verdict == RESONANT:
            raise HypothesisViolation("hypothesis violated: 0 is a resonance point (T(0) != 0); equivalence requires non-resonant H")
        hyp["non_resonant"] = True
    ctx = ctx or BlockContext(g, p)
    ft = block_norm_table(F, params.js, "free", ctx, params.p)
    pt = ft.copy() if p.is_zero else block_norm_table(F, params.js, "perturbed", ctx, params.p)
    return _ratio_report(params, names, ft, pt, hyp)


# ---------------------------------------------------------------------------
# cross-localization


def make_probes(g: SpatialGrid, k: int, n_probes: int = 32, seed: int = 0) -> np.ndarray:
    """Half random band-limited functions around frequency 2^k, half translated
    modulated bumps; real, decaying at the grid edges, unit L^2 norm."""
    rng = np.random.default_rng(seed)
    x, n, h = g.x, g.n_points, g.h
    M = 2.0 ** k
    env_w = 0.25 * g.half_extent
    out = []
    n_rand = n_probes // 2
    xi = 2 * math.pi * np.fft.rfftfreq(n, d=h)
    band = lp_phi(xi / M)
    for _ in range(n_rand):
        noise = rng.standard_normal(n)
        f = np.fft.irfft(np.fft.rfft(noise) * band, n=n)
        f *= np.exp(-(x / env_w) ** 8)
        out.append(f)
    for _ in range(n_probes - n_rand):
        c = rng.uniform(-0.5, 0.5) * g.half_extent
        freq = M * rng.uniform(0.6, 1.8)
        width = rng.uniform(2.0, 6.0) / min(M, 1.0) ** 0.5
        width = min(width, 0.15 * g.half_extent)
        out.append(np.cos(freq * x + rng.uniform(0, 2 * math.pi)) * np.exp(-((x - c) / width) ** 2))
    P = np.stack(out, axis=1)
    return P / lp_norm(P, g, 2.0)[None, :]


@dataclass
class CrossReport:
    k: int
    j: int
    p_exp: float
    ratio: float
    ratio_swapped: float
    annihilated: bool
    lower_bound: bool = True

    def to_dict(self) -> dict:
        return {"k": self.k, "j": self.j, "|j-k|": abs(self.j - self.k), "p": self.p_exp,
                "ratio": self.ratio, "ratio_swapped": self.ratio_swapped,
                "annihilated": self.annihilated, "lower_bound": self.lower_bound}


def cross_localization_norm(p: Potential, k: int, j: int, p_exp: float, probes: np.ndarray,
                            g: SpatialGrid, ctx: BlockContext | None = None,
                            free_block_k: np.ndarray | None = None) -> CrossReport:
    """Probe lower bound for ||phi(sqrt(H)/2^j) phi(sqrt(H0)/2^k)||_{p->p}
    and for the swapped order phi(sqrt(H0)/2^k) phi(sqrt(H)/2^j)."""
    P = np.asarray(probes, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    base = lp_norm(P, g, p_exp)
    if np.any(base <= 0):
        raise ValueError("probes must be nonzero")
    ctx = ctx or BlockContext(g, p)
    Fk = free_block_k if free_block_k is not None else lp_block_apply(P, k, "free", ctx)
    which = "free" if p.is_zero else "perturbed"
    A = lp_block_apply(Fk, j, which, ctx)
    B = lp_block_apply(lp_block_apply(P, j, which, ctx), k, "free", ctx)
    r1 = lp_norm(A, g, p_exp) / base
    r2 = lp_norm(B, g, p_exp) / base
    ann = bool(max(r1.max(), r2.max()) < NORM_FLOOR)
    return CrossReport(k, j, p_exp, 0.0 if ann else float(r1.max()), 0.0 if ann else float(r2.max()), ann)


def fit_decay_exponent(distances, ratios, base: float = 2.0) -> float:
    """beta in ratio ~ C base^{-beta |j-k|} by least squares on log ratios."""
    d = np.asarray(distances, dtype=float)
    r = np.asarray(ratios, dtype=float)
    if d.size < 2 or np.ptp(d) == 0:
        raise ValueError("need at least two distinct |j-k| values")
    if np.any(r <= 0):
        raise ValueError("ratios must be positive to fit a decay exponent")
    slope = np.polyfit(d, np.log(r) / math.log(base), 1)[0]
    return float(-slope)
