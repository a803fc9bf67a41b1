"""The ten acceptance checks, shared by the test suite and ``verify-all``.

Every check returns a CheckResult with the measured quantities, the
thresholds they were held to and a pass flag.  Thresholds are never relaxed
here; a failing check reports why it failed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .besov import (
    BesovParams,
    BlockContext,
    HypothesisViolation,
    besov_norms_batch,
    cross_localization_norm,
    default_suite,
    equivalence_ratio,
    fit_decay_exponent,
    lp_block_apply,
    make_probes,
)
from .counterexample import scaling_report
from .grid import FrequencyGrid, Potential, SpatialGrid
from .jost import gronwall_bound, panel_masses, solve_jost_field, tail_integral, verify_jost_estimates
from .kernels import (
    build_perturbed_kernel,
    free_kernel,
    kernel_frequency_grid,
    leading_kernel_KM,
    verify_kernel_estimate,
)
from .oracles import square_barrier_scattering
from .scattering import (
    NON_RESONANT,
    RESONANT,
    check_scattering_identity,
    coefficients_from_field,
    compute_scattering,
    detect_resonance,
    unitarity_defect,
)

__all__ = ["CheckResult", "CHECKS", "TITLES", "run_check", "run_checks", "resonant_well", "picard_fixed_point"]

# Square well -V0 on [-1, 1] with sqrt(V0) = pi/2: the zero-energy solution
# cos(pi x / 2) has zero slope at the edges, so 0 is a resonance.
RESONANT_WELL_DEPTH = (math.pi / 2) ** 2


@dataclass
class CheckResult:
    id: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        why = "" if self.passed else " | " + "; ".join(self.failures)
        return f"[{status}] criterion {self.id}: {self.title} ({self.seconds:.1f}s){why}"

    def to_dict(self) -> dict:
        return {"id": self.id, "title": self.title, "passed": self.passed, "seconds": self.seconds,
                "failures": list(self.failures), "details": self.details}


class _Collector:
    def __init__(self):
        self.failures = []

    def le(self, name, value, bound):
        ok = bool(np.isfinite(value) and value <= bound)
        if not ok:
            self.failures.append(f"{name} = {value:.3e} exceeds {bound:g}")
        return ok

    def ge(self, name, value, bound):
        ok = bool(np.isfinite(value) and value >= bound)
        if not ok:
            self.failures.append(f"{name} = {value:.4g} below {bound:g}")
        return ok

    def true(self, name, cond, msg=""):
        if not cond:
            self.failures.append(f"{name}: {msg}" if msg else name)
        return bool(cond)


def _rel_change(a: float, b: float) -> float:
    m = max(abs(a), abs(b))
    return 0.0 if m == 0 else abs(a - b) / m


def resonant_well() -> Potential:
    e = 1e-9
    v = -RESONANT_WELL_DEPTH
    return Potential.sampled([-1 - e, -1.0, 1.0, 1 + e], [0.0, v, v, 0.0])


# ---------------------------------------------------------------------------


def check_free_collapse(g: SpatialGrid) -> tuple[dict, list]:
    c = _Collector()
    zero = Potential.zero()
    fg = FrequencyGrid.symmetric(20.0, 400)
    jf = solve_jost_field(zero, g, fg.tau)
    T, Rp, Rm = coefficients_from_field(jf)
    d = {"T_minus_1": float(np.abs(T - 1).max()),
         "R_plus": float(np.abs(Rp).max()), "R_minus": float(np.abs(Rm).max())}
    for k in d:
        c.le(k, d[k], 1e-10)
    for M in (1.0, 4.0):
        Kp = build_perturbed_kernel(zero, g, M)
        Kf = free_kernel(None, M, g)
        d[f"kernel_M{M:g}"] = float(np.abs(Kp.K - Kf.K).max())
        c.le(f"kernel_M{M:g}", d[f"kernel_M{M:g}"], 1e-8)
    ctx = BlockContext(g, zero)
    F = np.stack(list(default_suite(g).values()), axis=1)
    blk = max(float(np.abs(lp_block_apply(F, j, "perturbed", ctx) - lp_block_apply(F, j, "free", ctx)).max())
              for j in (-3, 0, 3))
    d["blocks"] = blk
    c.le("blocks", blk, 1e-8)
    params = BesovParams(0.2)
    fr = besov_norms_batch(F, params, "free", ctx)
    pr = besov_norms_batch(F, params, "perturbed", ctx)
    d["besov"] = max(abs(a.norm - b.norm) for a, b in zip(fr, pr))
    c.le("besov", d["besov"], 1e-8)
    return d, c.failures


def check_oracle(g: SpatialGrid) -> tuple[dict, list]:
    c = _Collector()
    taus = np.array([0.5, 1.0, 2.0, 5.0, 10.0])
    sq = Potential.square_barrier(1.0, 1.0)
    tau = np.concatenate([-taus[::-1], taus])
    jf = solve_jost_field(sq, g, tau)
    T, Rp, Rm = coefficients_from_field(jf)
    err = 0.0
    for k, t in enumerate(tau):
        To, Rpo, Rmo = square_barrier_scattering(1.0, 1.0, t)
        err = max(err, abs(T[k] - To), abs(Rp[k] - Rpo), abs(Rm[k] - Rmo))
    d = {"oracle_max_error": float(err)}
    c.le("oracle_max_error", err, 1e-5)
    band = np.round(np.arange(1, 401) * 0.05, 10)
    for p in (Potential.zero(), sq, Potential.gaussian(1.0, 1.0), Potential.sech2_barrier(1.0)):
        sd = compute_scattering(p, g, band, classify=False)
        key = f"unitarity_{p.kind}"
        d[key] = unitarity_defect(sd)
        c.le(key, d[key], 1e-4)
    return d, c.failures


def check_identity(g: SpatialGrid) -> tuple[dict, list]:
    c = _Collector()
    d = {}
    tau = np.array([-3.0, -1.0, 1.0, 3.0])
    for p in (Potential.square_barrier(1.0, 1.0), Potential.gaussian(1.0, 1.0)):
        jf = solve_jost_field(p, g, tau)
        sd = compute_scattering(p, g, tau, jf=jf, classify=False)
        for t in (1.0, 3.0):
            key = f"{p.kind}_tau{t:g}"
            d[key] = check_scattering_identity(jf, sd, t)
            c.le(key, d[key], 1e-5)
    return d, c.failures


def check_jost_estimates(g: SpatialGrid) -> tuple[dict, list]:
    c = _Collector()
    d = {}
    fg = FrequencyGrid.symmetric(5.0, 100)
    for p in (Potential.square_barrier(1.0, 1.0), Potential.gaussian(1.0, 1.0)):
        for r in verify_jost_estimates(p, g, fg, gamma=2.0, sigma=0.5, k=1):
            key = f"{p.kind}_{r.estimate_id}"
            d[key] = {"constant": r.constant, "drift": r.drift}
            c.true(f"{key} finite", r.finite)
            c.le(f"{key} drift", r.drift, 0.15)
    return d, c.failures


# Kernels live on a narrower window than the Besov runs: remainders are
# concentrated within a few units of the support.
KERNEL_GRID = SpatialGrid(-20.0, 20.0, 1025)


def _kernel_constants(p: Potential, g: SpatialGrid, sigma: float) -> dict:
    out = {}
    for M in (4.0, 16.0):
        Kp = build_perturbed_kernel(p, g, M)
        Kf = free_kernel(None, M, g)
        out[("high", M)] = (verify_kernel_estimate(Kp, Kf, M, p.gamma, sigma).constant, Kp.symmetry_defect())
    for M in (0.25, 0.125):
        fg = kernel_frequency_grid(M, g, p)
        Kp = build_perturbed_kernel(p, g, M, fg)
        sd = compute_scattering(p, g, fg)
        L = leading_kernel_KM(sd, None, M, g)
        out[("low", M)] = (verify_kernel_estimate(Kp, L, M, p.gamma, sigma).constant, Kp.symmetry_defect())
    return out


def check_kernels(g: SpatialGrid | None = None) -> tuple[dict, list]:
    c = _Collector()
    g = g or KERNEL_GRID
    p = Potential.square_barrier(1.0, 1.0)
    sigma = 0.5
    c0 = _kernel_constants(p, g, sigma)
    c1 = _kernel_constants(p, g.refined(), sigma)
    d = {"sigma": sigma, "grid": [g.x_min, g.x_max, g.n_points]}
    for key in c0:
        mode, M = key
        name = f"{mode}_M{M:g}"
        d[name] = {"constant": c1[key][0], "coarse_constant": c0[key][0],
                   "drift": _rel_change(c0[key][0], c1[key][0]),
                   "symmetry_defect": max(c0[key][1], c1[key][1])}
        c.true(f"{name} finite", math.isfinite(c1[key][0]))
        c.le(f"{name} symmetry_defect", d[name]["symmetry_defect"], 1e-6)
        c.le(f"{name} drift", d[name]["drift"], 0.15)
    # Low energy: the bound carries an explicit factor M, so the constants
    # at M = 1/4 and 1/8 must agree.  High energy: no M factor, and the
    # remainder may only shrink from M = 4 to M = 16 (slack 0.5).
    a, b = c1[("low", 0.25)][0], c1[("low", 0.125)][0]
    d["low_M_agreement"] = _rel_change(a, b)
    c.le("relative gap between low-energy constants at M=1/4 and M=1/8", d["low_M_agreement"], 0.30)
    a, b = c1[("high", 4.0)][0], c1[("high", 16.0)][0]
    d["high_M16_over_M4"] = b / a if a > 0 else float("inf")
    c.le("high-energy constant ratio M=16/M=4", d["high_M16_over_M4"], 1.5)
    return d, c.failures


def check_cross_localization(g: SpatialGrid, seed: int = 0) -> tuple[dict, list]:
    c = _Collector()
    k = 4
    js = (0, 1, 2, 3, 4)
    p = Potential.square_barrier(1.0, 1.0)
    probes = make_probes(g, k, 32, seed)
    ctx, ctx0 = BlockContext(g, p), BlockContext(g, Potential.zero())
    Fk = lp_block_apply(probes, k, "free", ctx)
    dist, ratios, free = [], [], []
    for j in js:
        r = cross_localization_norm(p, k, j, 2.0, probes, g, ctx, Fk)
        f = cross_localization_norm(Potential.zero(), k, j, 2.0, probes, g, ctx0, Fk)
        dist.append(abs(j - k))
        ratios.append(max(r.ratio, r.ratio_swapped))
        free.append(max(f.ratio, f.ratio_swapped))
    beta = fit_decay_exponent(dist, ratios)
    far = [i for i, dd in enumerate(dist) if dd >= 2]
    beta_far = fit_decay_exponent([dist[i] for i in far], [ratios[i] for i in far])
    d = {"k": k, "j": list(js), "distance": dist, "ratios": ratios, "free_ratios": free,
         "decay_exponent": beta, "decay_exponent_far": beta_far, "seed": seed}
    c.ge("decay_exponent", beta, 0.4)
    c.le("free_leakage", max(free[i] for i in far), 1e-8)
    return d, c.failures


def check_besov_equivalence(g: SpatialGrid) -> tuple[dict, list]:
    c = _Collector()
    p = Potential.square_barrier(1.0, 1.0)
    s_values = (0.0, 0.2, 0.4)
    res = detect_resonance(p, g)
    c.true("verdict", res.verdict == NON_RESONANT, f"square barrier classified {res.verdict}")
    consts = {}
    for grid in (g, g.refined()):
        base = equivalence_ratio(default_suite(grid), BesovParams(0.2), p, grid)
        consts[grid.n_points] = [base.at_s(s).constant for s in s_values]
    coarse, fine = consts[g.n_points], consts[g.refined().n_points]
    d = {"s": list(s_values), "constants": fine, "coarse_constants": coarse,
         "drift": [_rel_change(a, b) for a, b in zip(coarse, fine)]}
    for s, C, dr in zip(s_values, fine, d["drift"]):
        c.true(f"constant at s={s:g} finite", math.isfinite(C))
        c.le(f"drift at s={s:g}", dr, 0.20)
    c.true("monotone in s", all(b >= a for a, b in zip(fine, fine[1:])), f"constants {fine}")
    try:
        equivalence_ratio(default_suite(g), BesovParams(0.2), resonant_well(), g)
        refused, msg = False, ""
    except HypothesisViolation as exc:
        refused, msg = True, str(exc)
    d["resonant_refusal"] = msg
    c.true("resonant potential refused", refused)
    return d, c.failures


def check_counterexample() -> tuple[dict, list]:
    c = _Collector()
    rep = scaling_report([4, 8, 16, 32, 64])
    d = rep.to_dict()
    c.le("|slope I0^2 - 2|", abs(rep.slope_I0_sq - 2.0), 0.05)
    c.le("|slope norm^2 - 1|", abs(rep.slope_norm_sq - 1.0), 0.05)
    for N, q in rep.doubling:
        c.le(f"|doubling at N={N} - 2|/2", abs(q - 2.0) / 2.0, 0.10)
    return d, c.failures


def picard_fixed_point(a: np.ndarray, b: np.ndarray, x: np.ndarray, tol: float = 1e-14, max_iter: int = 100000):
    """Brute-force Picard iteration for v_i = a_i + sum_{k>i} beta_k v_k with
    beta_k the trapezoid mass of b on [x_{k-1}, x_k]."""
    beta = panel_masses(b, x)
    v = a.copy()
    for it in range(max_iter):
        contrib = beta * v[1:]
        tail = np.concatenate([np.cumsum(contrib[::-1])[::-1], [0.0]])
        new = a + tail
        if np.max(np.abs(new - v)) <= tol * max(1.0, np.max(np.abs(new))):
            return new, it + 1
        v = new
    raise RuntimeError("Picard iteration did not converge")


def check_gronwall(seed: int = 0) -> tuple[dict, list]:
    c = _Collector()
    rng = np.random.default_rng(seed)
    g = SpatialGrid(-10.0, 10.0, 401)
    x = g.x
    margins, interior = [], []
    for _ in range(10):
        a = np.abs(rng.normal(1.0, 0.5) + rng.normal(0, 0.3) * np.sin(rng.uniform(0.5, 3) * x + rng.uniform(0, 6)))
        amp, width, centre = rng.uniform(0.1, 1.5), rng.uniform(0.5, 3.0), rng.uniform(-5, 5)
        b = amp * np.exp(-((x - centre) / width) ** 2) + rng.uniform(0, 0.02)
        G = gronwall_bound(a, b, x)
        v, _ = picard_fixed_point(a, b, x)
        margins.append(float(np.min(G - v)))
        interior.append(float(np.min(G[:-2] - v[:-2])))  # G = v = a at the right end
    d = {"min_margin": min(margins), "margins": margins, "interior_min_margin": min(interior)}
    c.ge("min_margin", min(margins), 0.0)
    C = 1.7
    b = 0.8 * np.exp(-x ** 2)
    G = gronwall_bound(np.full_like(x, C), b, x)
    closed = C * np.exp(tail_integral(b, x))
    d["closed_form_rel_error"] = float(np.max(np.abs(G - closed) / closed))
    c.le("closed_form_rel_error", d["closed_form_rel_error"], 1e-8)
    return d, c.failures


def check_resonance(g: SpatialGrid) -> tuple[dict, list]:
    c = _Collector()
    d = {}
    for p, want in ((Potential.zero(), RESONANT), (Potential.square_barrier(1.0, 1.0), NON_RESONANT),
                    (Potential.gaussian(1.0, 1.0), NON_RESONANT)):
        r = detect_resonance(p, g)
        d[p.kind] = {"verdict": r.verdict, "T0": r.T0, "alpha": r.alpha, "slope_change": r.fits["slope_change"]}
        c.true(f"{p.kind} verdict", r.verdict == want, f"expected {want}, got {r.verdict}")
        if want == NON_RESONANT:
            c.le(f"{p.kind} slope_change", r.fits["slope_change"], 0.1)
    return d, c.failures


TITLES = {
    1: "free-case collapse",
    2: "oracle equivalence and unitarity",
    3: "scattering identity residual",
    4: "Jost estimate suite",
    5: "kernel symmetry and remainder constants",
    6: "cross-localization decay",
    7: "Besov equivalence",
    8: "counterexample scaling",
    9: "Gronwall certification",
    10: "resonance detection",
}

CHECKS = {
    1: lambda g, seed: check_free_collapse(g),
    2: lambda g, seed: check_oracle(g),
    3: lambda g, seed: check_identity(g),
    4: lambda g, seed: check_jost_estimates(g),
    5: lambda g, seed: check_kernels(),
    6: lambda g, seed: check_cross_localization(g, seed),
    7: lambda g, seed: check_besov_equivalence(g),
    8: lambda g, seed: check_counterexample(),
    9: lambda g, seed: check_gronwall(seed),
    10: lambda g, seed: check_resonance(g),
}


def run_check(cid: int, g: SpatialGrid | None = None, seed: int = 0) -> CheckResult:
    if cid not in CHECKS:
        raise ValueError(f"unknown check {cid}")
    g = g or SpatialGrid()
    t0 = time.perf_counter()
    try:
        details, failures = CHECKS[cid](g, seed)
    except Exception as exc:  # a crash is a failed check, reported with its cause
        details, failures = {"error": repr(exc)}, [f"raised {type(exc).__name__}: {exc}"]
    return CheckResult(cid, TITLES[cid], not failures, details, failures, time.perf_counter() - t0)


def run_checks(ids=None, g: SpatialGrid | None = None, seed: int = 0, log=None) -> list[CheckResult]:
    out = []
    for cid in ids or sorted(CHECKS):
        r = run_check(cid, g, seed)
        if log is not None:
            log(r.line())
        out.append(r)
    return out
