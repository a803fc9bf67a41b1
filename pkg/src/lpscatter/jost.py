"""Jost modifiers m_+/- (x, tau) from the Volterra equation

    m_+(x, tau) = 1 + int_x^inf D(t - x, tau) V(t) m_+(t, tau) dt,
    D(t, tau)   = (exp(2 i t tau) - 1) / (2 i tau),      D(t, 0) = t,

and m_-(x, tau; V) = m_+(-x, tau; V(-.)).

Discretization: trapezoid rule on panels whose nodes include every jump of V.
Because D(0, tau) = 0 the self-coupling vanishes and the backward sweep is
explicit.  D separates as (e^{2i tau t} e^{-2i tau x} - 1)/(2i tau), so each
step only needs the running sums

    A = sum W_k e^{2i tau t_k} m_k,   B = sum W_k m_k,   C = sum W_k t_k m_k

over nodes already visited, and the sweep is vectorized over tau.  Panels are
subdivided so that the phase 2 tau h stays small, the sweep is repeated with
twice as many sub-panels, and the two results are Richardson-extrapolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    FrequencyGrid,
    HypothesisViolation,
    Potential,
    SpatialGrid,
    japanese,
    potential_node_weights,
    refine_nodes,
)

__all__ = [
    "JostDivergenceError",
    "JostField",
    "EstimateReport",
    "kernel_D",
    "kernel_D_dtau",
    "solve_jost_field",
    "solve_jost",
    "jost_derivative",
    "gronwall_bound",
    "holder_seminorm",
    "holder_norm",
    "verify_jost_estimates",
]

DEFAULT_TOL = 1e-8
PHASE_BUDGET = 0.5
RESIDUAL_ROWS = 256


class JostDivergenceError(RuntimeError):
    """The computed m violates its certified a-priori envelope or the
    discretized equation is not satisfied."""

    def __init__(self, message: str, bound: float | None = None, observed: float | None = None):
        super().__init__(message)
        self.bound = bound
        self.observed = observed


def kernel_D(t, tau):
    """D(t, tau) = (e^{2itau} - 1)/(2i tau), with the limit t at tau = 0."""
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    t, tau = np.broadcast_arrays(t, tau)
    z = tau == 0
    safe = np.where(z, 1.0, tau)
    # expm1 keeps full relative accuracy when t*tau is small
    out = np.expm1(2j * t * safe) / (2j * safe)
    out = np.where(z, t + 0j, out)
    return out[()] if out.ndim == 0 else out


def kernel_D_dtau(t, tau):
    """d/dtau D(t, tau) = (t e^{2it tau} - D)/tau, equal to i t^2 at tau = 0."""
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    t, tau = np.broadcast_arrays(t, tau)
    z = tau == 0
    safe = np.where(z, 1.0, tau)
    out = (t * np.exp(2j * t * safe) - kernel_D(t, safe)) / safe
    out = np.where(z, 1j * t * t, out)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# sweep


@dataclass
class _Sums:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    P: np.ndarray | None = None
    Q: np.ndarray | None = None
    A1: np.ndarray | None = None
    B1: np.ndarray | None = None
    C1: np.ndarray | None = None

    @classmethod
    def empty(cls, nt: int, derivative: bool) -> "_Sums":
        z = lambda: np.zeros(nt, dtype=complex)  # noqa: E731
        if derivative:
            return cls(z(), z(), z(), z(), z(), z(), z(), z())
        return cls(z(), z(), z())

    def combine(self, other: "_Sums", wa: float, wb: float) -> "_Sums":
        vals = {}
        for name in ("A", "B", "C", "P", "Q", "A1", "B1", "C1"):
            u, v = getattr(self, name), getattr(other, name)
            vals[name] = None if u is None else wa * u + wb * v
        return _Sums(**vals)


class _Tau:
    """Precomputed tau-dependent factors shared by all sweep steps."""

    def __init__(self, tau: np.ndarray):
        self.tau = tau
        self.zero = tau == 0
        self.any_zero = bool(self.zero.any())
        self.safe = np.where(self.zero, 1.0, tau)
        self.inv2i = np.where(self.zero, 0.0, 1.0 / (2j * self.safe))


def _evaluate(x: float | np.ndarray, s: _Sums, tf: _Tau, derivative: bool):
    """m (and dm/dtau) at x given the sums over all nodes strictly to the right
    of x.  Works for scalar x (sweep step) and for a column of x values."""
    x = np.asarray(x, dtype=float)
    col = x.ndim == 1
    xx = x[:, None] if col else x
    tau = tf.tau
    ec = np.exp(-2j * tau * xx)
    m = 1.0 + (ec * s.A - s.B) * tf.inv2i
    if tf.any_zero:
        z = tf.zero
        m0 = 1.0 + s.C[z] - xx * s.B[z]
        if col:
            m[:, z] = m0
        else:
            m[z] = m0
    if not derivative:
        return m, None
    dm = (ec * (s.P - xx * s.A) - (m - 1.0)) / tf.safe + (ec * s.A1 - s.B1) * tf.inv2i
    if tf.any_zero:
        z = tf.zero
        d0 = 1j * (s.Q[z] - 2 * xx * s.C[z] + xx * xx * s.B[z]) + (s.C1[z] - xx * s.B1[z])
        if col:
            dm[:, z] = d0
        else:
            dm[z] = d0
    return m, dm


def _sweep(t: np.ndarray, W: np.ndarray, tf: _Tau, out_pos: np.ndarray, derivative: bool,
           keep_cols: np.ndarray | None = None):
    """Backward sweep over ascending nodes t.  Returns (m at out_pos,
    dm at out_pos or None, final sums, internal m for keep_cols or None)."""
    nt = tf.tau.size
    s = _Sums.empty(nt, derivative)
    n = t.size
    row_of = np.full(n, -1)
    row_of[out_pos] = np.arange(out_pos.size)
    m_out = np.empty((out_pos.size, nt), dtype=complex)
    dm_out = np.empty((out_pos.size, nt), dtype=complex) if derivative else None
    kept = np.empty((n, keep_cols.size), dtype=complex) if keep_cols is not None else None
    tau = tf.tau
    for i in range(n - 1, -1, -1):
        ti = t[i]
        m, dm = _evaluate(ti, s, tf, derivative)
        r = row_of[i]
        if r >= 0:
            m_out[r] = m
            if derivative:
                dm_out[r] = dm
        if kept is not None:
            kept[i] = m[keep_cols]
        w = W[i]
        if w == 0.0:
            continue
        e = np.exp(2j * tau * ti)
        wm = w * m
        we = wm * e
        s.A += we
        s.B += wm
        s.C += ti * wm
        if derivative:
            s.P += ti * we
            s.Q += ti * ti * wm
            wd = w * dm
            s.A1 += wd * e
            s.B1 += wd
            s.C1 += ti * wd
    return m_out, dm_out, s, kept


def _discrete_residual(t: np.ndarray, W: np.ndarray, tau: np.ndarray, m_int: np.ndarray) -> np.ndarray:
    """max_i |m_i - 1 - sum_{k>i} W_k D(t_k - t_i) m_k| on a row subsample, per tau."""
    n = t.size
    rows = np.unique(np.linspace(0, n - 1, min(n, RESIDUAL_ROWS)).astype(int))
    res = np.zeros(tau.size)
    for c, tc in enumerate(tau):
        Dm = kernel_D(t[None, :] - t[rows, None], tc)
        Dm = np.where(np.arange(n)[None, :] > rows[:, None], Dm, 0.0)
        defect = m_int[rows, c] - 1.0 - Dm @ (W * m_int[:, c])
        res[c] = float(np.max(np.abs(defect)))
    return res


# ---------------------------------------------------------------------------
# field assembly


@dataclass
class JostField:
    """m_+/- on grid.x (rows) times tau (columns), plus the quadrature moments
    needed by the scattering coefficients.

    moments: "B_plus" = int V m_+, "A_plus" = int e^{2i tau t} V m_+,
    "B_minus" = int V m_-, "A_minus" = int e^{-2i tau t} V m_-.
    """

    grid: SpatialGrid
    tau: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    dm_plus: np.ndarray | None
    dm_minus: np.ndarray | None
    residual: np.ndarray
    error_estimate: np.ndarray
    moments: dict = field(repr=False, default_factory=dict)
    refinement: int = 1

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def rem_plus(self) -> np.ndarray:
        return self.m_plus - 1.0

    @property
    def rem_minus(self) -> np.ndarray:
        return self.m_minus - 1.0

    @property
    def f_plus(self) -> np.ndarray:
        return np.exp(1j * np.outer(self.x, self.tau)) * self.m_plus

    @property
    def f_minus(self) -> np.ndarray:
        return np.exp(-1j * np.outer(self.x, self.tau)) * self.m_minus

    def column(self, tau0: float) -> int:
        k = int(np.argmin(np.abs(self.tau - tau0)))
        if abs(self.tau[k] - tau0) > 1e-12 * max(1.0, abs(tau0)):
            raise KeyError(f"tau={tau0} not on the field's frequency sample")
        return k


def _base_nodes(p: Potential, x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    inside = x[(x >= lo) & (x <= hi)]
    bp = p.breakpoints
    bp = bp[(bp >= lo) & (bp <= hi)]
    return np.union1d(np.union1d(inside, bp), [lo, hi])


def _one_side(t_base, W_of, x_out, tf, r0, derivative, richardson, keep_cols):
    """m_+ for the problem whose (ascending) base nodes are t_base.  W_of(nodes)
    returns V-folded weights on refined nodes.  x_out ascending."""
    lo, hi = t_base[0], t_base[-1]
    inside = (x_out >= lo) & (x_out <= hi)
    left = x_out < lo
    base_pos = np.searchsorted(t_base, x_out[inside])
    nt = tf.tau.size

    def run(r):
        t, idx = refine_nodes(t_base, r)
        W = W_of(t)
        m_in, dm_in, s, kept = _sweep(t, W, tf, idx[base_pos], derivative, keep_cols)
        m = np.ones((x_out.size, nt), dtype=complex)
        dm = np.zeros((x_out.size, nt), dtype=complex) if derivative else None
        m[inside] = m_in
        if derivative:
            dm[inside] = dm_in
        if left.any():
            ml, dml = _evaluate(x_out[left], s, tf, derivative)
            m[left] = ml
            if derivative:
                dm[left] = dml
        return m, dm, s, (t, W, kept)

    m1, dm1, s1, int1 = run(r0)
    if not richardson:
        return m1, dm1, s1, np.zeros(nt), int1
    m2, dm2, s2, int2 = run(2 * r0)
    m = (4 * m2 - m1) / 3
    dm = (4 * dm2 - dm1) / 3 if derivative else None
    s = s2.combine(s1, 4 / 3, -1 / 3)
    err = np.max(np.abs(m2 - m1), axis=0) / 3 if x_out.size else np.zeros(nt)
    return m, dm, s, err, int2


def _refinement_factor(t_base: np.ndarray, tau_max: float, phase: float) -> int:
    if t_base.size < 2:
        return 1
    hmax = float(np.max(np.diff(t_base)))
    return max(1, int(math.ceil(hmax * 2.0 * tau_max / phase)))


def _envelope(p: Potential, x: np.ndarray, tau: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Certified bound |m_+(x,tau) - 1| <= exp(int_x^inf |V|/|tau|) - 1 (tau != 0)."""
    nodes = _base_nodes(p, x, lo, hi)
    Wabs = np.abs(potential_node_weights(p, nodes))
    tail = np.concatenate([np.cumsum(Wabs[::-1])[::-1], [0.0]])
    # mass strictly to the right of each node, plus the node's own half weight
    pos = np.searchsorted(nodes, x)
    mass = tail[np.minimum(pos, nodes.size)]
    with np.errstate(divide="ignore", over="ignore"):
        b = mass[:, None] / np.abs(tau)[None, :]
        return np.expm1(b)


def solve_jost_field(
    p: Potential,
    g: SpatialGrid,
    tau,
    derivative: bool = False,
    tol: float = DEFAULT_TOL,
    phase: float = PHASE_BUDGET,
    refine: int | None = None,
    richardson: bool = True,
    residual_samples: int = 3,
    check_envelope: bool = True,
) -> JostField:
    """Solve for m_+ and m_- on every node of g and every tau sample.

    tau may be a FrequencyGrid or any 1-D real array.  ``refine`` overrides the
    automatic sub-panel count.  Raises JostDivergenceError if the discretized
    equation residual exceeds ``tol`` or m leaves its certified envelope.
    """
    tau = np.asarray(tau.tau if isinstance(tau, FrequencyGrid) else tau, dtype=float).ravel()
    if not np.all(np.isfinite(tau)):
        raise ValueError("tau samples must be finite")
    x = g.x
    nx, nt = x.size, tau.size
    supp = p.support()
    if supp is None or nt == 0:
        one = np.ones((nx, nt), dtype=complex)
        zeros = np.zeros((nx, nt), dtype=complex)
        mom = {k: np.zeros(nt, dtype=complex) for k in ("A_plus", "B_plus", "A_minus", "B_minus")}
        return JostField(g, tau, one, one.copy(), zeros if derivative else None,
                         zeros.copy() if derivative else None, np.zeros(0), np.zeros(nt), mom)

    lo, hi = supp
    tf = _Tau(tau)
    t_base = _base_nodes(p, x, lo, hi)
    r0 = refine or _refinement_factor(t_base, float(np.abs(tau).max()), phase)
    keep = np.unique(np.linspace(0, nt - 1, min(nt, residual_samples)).astype(int)) if residual_samples else None

    # + side
    Wp = lambda nodes: potential_node_weights(p, nodes)  # noqa: E731
    mp, dmp, sp, errp, (tp, Wtp, keptp) = _one_side(t_base, Wp, x, tf, r0, derivative, richardson, keep)

    # - side: m_-(x; V) = m_+(-x; V(-.)); reflect nodes and weights
    t_ref = -t_base[::-1]
    Wm = lambda nodes: potential_node_weights(p, -nodes[::-1])[::-1]  # noqa: E731
    mm_r, dmm_r, sm, errm, (tm, Wtm, keptm) = _one_side(t_ref, Wm, -x[::-1], tf, r0, derivative, richardson, keep)
    mm = mm_r[::-1]
    dmm = dmm_r[::-1] if derivative else None

    residual = np.zeros(0)
    if keep is not None:
        rp = _discrete_residual(tp, Wtp, tau[keep], keptp)
        rm = _discrete_residual(tm, Wtm, tau[keep], keptm)
        residual = np.maximum(rp, rm)
        if np.any(~np.isfinite(residual)) or residual.max() > tol * max(1.0, float(np.abs(keptp).max())):
            raise JostDivergenceError(
                f"discretized Volterra residual {residual.max():.3e} exceeds tolerance {tol:.1e}",
                bound=tol, observed=float(residual.max()),
            )

    if not (np.all(np.isfinite(mp)) and np.all(np.isfinite(mm))):
        raise JostDivergenceError("non-finite Jost modifier")

    if check_envelope:
        nz = tau != 0
        env_p = _envelope(p, x, tau[nz], lo, hi)
        env_m = _envelope_minus(p, x, tau[nz], lo, hi)
        for name, m, env in (("m_plus", mp, env_p), ("m_minus", mm, env_m)):
            dev = np.abs(m[:, nz] - 1.0)
            slack = 1e-6 * env + 10 * tol
            bad = dev > env + slack
            if bad.any():
                i, j = np.argwhere(bad)[0]
                raise JostDivergenceError(
                    f"{name} leaves its Gronwall envelope at x={x[i]:.4g}, tau={tau[nz][j]:.4g}: "
                    f"|m-1|={dev[i, j]:.3e} > exp(int|V|/|tau|)-1={env[i, j]:.3e}",
                    bound=float(env[i, j]), observed=float(dev[i, j]),
                )

    moments = {"A_plus": sp.A, "B_plus": sp.B, "A_minus": sm.A, "B_minus": sm.B}
    return JostField(g, tau, mp, mm, dmp, dmm, residual, np.maximum(errp, errm), moments, r0)


def _envelope_minus(p, x, tau, lo, hi):
    # mirror image of the + envelope: mass of |V| to the left of x
    env_r = _envelope(_Mirror(p), -x[::-1], tau, -hi, -lo)
    return env_r[::-1]


class _Mirror:
    """V(-x) seen through the small interface _envelope needs."""

    def __init__(self, p: Potential):
        self.p = p

    @property
    def breakpoints(self):
        return -self.p.breakpoints[::-1]

    def limits(self, x):
        left, right = self.p.limits(-np.asarray(x))
        return right, left


def solve_jost(p: Potential, g: SpatialGrid, tau: float, side: str = "+", **kw) -> np.ndarray:
    """m_side(., tau) on g."""
    jf = solve_jost_field(p, g, np.array([float(tau)]), **kw)
    return _pick(jf.m_plus, jf.m_minus, side)[:, 0]


def jost_derivative(p: Potential, g: SpatialGrid, tau: float, side: str = "+", k: int = 1, **kw) -> np.ndarray:
    """d/dtau m_side(., tau) on g (k = 1 only)."""
    if k != 1:
        raise ValueError("only the first tau-derivative (k=1) is supported")
    jf = solve_jost_field(p, g, np.array([float(tau)]), derivative=True, **kw)
    return _pick(jf.dm_plus, jf.dm_minus, side)[:, 0]


def _pick(plus, minus, side):
    if side in ("+", "plus"):
        return plus
    if side in ("-", "minus"):
        return minus
    raise ValueError(f"side must be '+' or '-', got {side!r}")


# ---------------------------------------------------------------------------
# Gronwall envelope


def gronwall_bound(a, b, g: SpatialGrid | np.ndarray) -> np.ndarray:
    """Upper bound for v solving v(x) <= a(x) + int_x^inf b v on the nodes of g.

    Evaluates a(x) + int_x^inf a(t) b(t) exp(int_x^t b) dt with B(x) = int_x^inf b
    by backward cumulative trapezoid sums.  The outer integral is an upper
    Stieltjes sum against d exp(int_x^t b), which is exact for constant a
    (giving a e^{B}) and dominates the discrete inequality
    v_i <= a_i + sum_{k>i} beta_k v_k, beta_k = int_{t_{k-1}}^{t_k} b.
    """
    x = g.x if isinstance(g, SpatialGrid) else np.asarray(g, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != x.shape or b.shape != x.shape:
        raise ValueError("a and b must be sampled on the grid nodes")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("a and b must be finite")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("gronwall_bound requires a >= 0 and b >= 0")
    beta = panel_masses(b, x)
    a_hat = np.maximum(a[:-1], a[1:])
    G = np.zeros_like(a)
    for i in range(x.size - 2, -1, -1):
        G[i] = G[i + 1] + np.expm1(beta[i]) * (G[i + 1] + a_hat[i])
    return a + G


def panel_masses(b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Trapezoid integral of b over each panel [x_k, x_{k+1}]."""
    return 0.5 * np.diff(x) * (b[:-1] + b[1:])


def tail_integral(b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """B(x_i) = int_{x_i}^{x_max} b by backward cumulative trapezoid sums."""
    beta = panel_masses(b, x)
    return np.concatenate([np.cumsum(beta[::-1])[::-1], [0.0]])


# ---------------------------------------------------------------------------
# Hölder seminorms and the estimate ladder


def holder_seminorm(samples, sigma: float, tau, max_sep: float = 1.0) -> np.ndarray | float:
    """max over pairs 0 < |tau_a - tau_b| <= max_sep of |g_a - g_b| / |tau_a - tau_b|^sigma.

    ``samples`` has tau along its last axis; leading axes are kept.
    """
    g = np.asarray(samples)
    tau = np.asarray(tau.tau if isinstance(tau, FrequencyGrid) else tau, dtype=float)
    if not (0.0 < sigma < 1.0):
        raise ValueError("sigma must lie in (0, 1)")
    if g.shape[-1] < 2 or tau.size < 2:
        raise ValueError("holder_seminorm needs at least two samples")
    if g.shape[-1] != tau.size:
        raise ValueError("samples and tau grid lengths differ")
    order = np.argsort(tau)
    tau, g = tau[order], g[..., order]
    best = np.zeros(g.shape[:-1])
    for d in range(1, tau.size):
        dt = tau[d:] - tau[:-d]
        if dt.min() > max_sep * (1 + 1e-12):
            break
        ok = dt <= max_sep * (1 + 1e-12)
        q = np.abs(g[..., d:] - g[..., :-d])[..., ok] / dt[ok] ** sigma
        best = np.maximum(best, q.max(axis=-1))
    return float(best) if best.ndim == 0 else best


def holder_norm(samples, sigma: float, tau, max_sep: float = 1.0):
    """sup |g| + Hölder seminorm (the C^{0,sigma} norm)."""
    g = np.asarray(samples)
    return np.max(np.abs(g), axis=-1) + holder_seminorm(g, sigma, tau, max_sep)


@dataclass
class EstimateReport:
    estimate_id: str
    constant: float
    drift: float | None
    params: dict
    argmax: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.constant) and self.constant >= 0)

    def to_dict(self) -> dict:
        return {"id": self.estimate_id, "constant": self.constant, "drift": self.drift,
                "params": dict(self.params), "argmax": dict(self.argmax)}


ESTIMATE_IDS = ("m_decay", "m_decay_tau", "m_holder", "tau_m_holder", "dm_decay", "dm_decay_tau")


def _ratio_sup(lhs: np.ndarray, shape: np.ndarray, x: np.ndarray, tau: np.ndarray | None):
    r = lhs / shape
    k = int(np.argmax(r))
    if r.ndim == 2:
        i, j = np.unravel_index(k, r.shape)
        return float(r[i, j]), {"x": float(x[i]), "tau": float(tau[j])}
    return float(r[k]), {"x": float(x[k])}


def _estimate_constants(jf: JostField, gamma: float, sigma: float) -> dict:
    x, tau = jf.x, jf.tau
    xp, xm = np.maximum(x, 0.0), np.maximum(-x, 0.0)
    nz = tau != 0
    out = {}
    for side, m, dm, near, far in (
        ("+", jf.m_plus, jf.dm_plus, japanese(xm), japanese(xp)),
        ("-", jf.m_minus, jf.dm_minus, japanese(xp), japanese(xm)),
    ):
        rem = m - 1.0
        cands = {
            "m_decay": _ratio_sup(np.abs(rem), (near / far ** (gamma - 1))[:, None], x, tau),
            "m_decay_tau": _ratio_sup(np.abs(rem[:, nz]),
                              (near / far ** gamma)[:, None] / np.abs(tau[nz])[None, :], x, tau[nz]),
            "m_holder": _ratio_sup(holder_norm(rem, sigma, tau),
                              near ** (1 + sigma) / far ** (gamma - 1 - sigma), x, None),
            "tau_m_holder": _ratio_sup(holder_norm(tau[None, :] * rem, sigma, tau),
                              near ** (1 + sigma) / far ** (gamma - sigma), x, None),
            "dm_decay": _ratio_sup(np.abs(dm), (near ** 2 / far ** (gamma - 2))[:, None], x, tau),
            "dm_decay_tau": _ratio_sup(np.abs(dm[:, nz]),
                               (near ** 2 / far ** (gamma - 1))[:, None] / np.abs(tau[nz])[None, :], x, tau[nz]),
        }
        for key, (c, loc) in cands.items():
            loc = dict(loc, side=side)
            if key not in out or c > out[key][0]:
                out[key] = (c, loc)
    return out


def verify_jost_estimates(
    p: Potential,
    g: SpatialGrid,
    tau,
    gamma: float,
    sigma: float,
    k: int = 1,
    refine: bool = True,
) -> list[EstimateReport]:
    """Empirical constants sup |LHS| / shape for the Jost estimate ladder.

    With ``refine`` the computation is repeated on the grid with h/2 and the
    relative change of each constant is reported as drift.
    """
    if k != 1:
        raise ValueError("only k = 1 derivative estimates are implemented")
    if not (0.0 < sigma < 1.0):
        raise HypothesisViolation(f"hypothesis violated: sigma must lie in (0, 1), got {sigma}")
    if sigma > gamma - 1.0:
        raise HypothesisViolation(f"hypothesis violated: sigma <= gamma - 1 required, got sigma={sigma}, gamma={gamma}")
    tg = tau if isinstance(tau, FrequencyGrid) else None
    tau_arr = tg.tau if tg is not None else np.asarray(tau, dtype=float)

    def consts(grid):
        jf = solve_jost_field(p, grid, tau_arr, derivative=True)
        return _estimate_constants(jf, gamma, sigma)

    c0 = consts(g)
    c1 = consts(g.refined()) if refine else None
    params = {"gamma": gamma, "sigma": sigma, "k": k}
    reports = []
    for key in ESTIMATE_IDS:
        c, loc = c0[key]
        drift = None
        if c1 is not None:
            cf = c1[key][0]
            drift = 0.0 if max(c, cf) == 0 else abs(cf - c) / max(c, cf)
            c = cf
            loc = c1[key][1]
        reports.append(EstimateReport(key, c, drift, dict(params), loc))
    return reports
