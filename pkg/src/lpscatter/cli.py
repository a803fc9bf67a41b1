"""Command-line entry point.

    lpscatter COMMAND [--config PATH] [--out DIR] [--seed N] [--tol X] [--grid-points N]

Exit status: 0 success, 1 failed acceptance checks, 2 invalid configuration,
3 violated hypothesis (resonant potential, s >= 1/p, ...).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import checks as acceptance
from .besov import (
    BesovParams,
    BlockContext,
    cross_localization_norm,
    default_suite,
    equivalence_ratio,
    fit_decay_exponent,
    lp_block_apply,
    make_probes,
)
from .config import COMMANDS, ConfigError, RunConfig, load_config
from .counterexample import scaling_report
from .grid import FrequencyGrid, HypothesisViolation
from .io import export_jost_csv, export_kernel, export_scattering, write_csv, write_json
from .jost import solve_jost_field, verify_jost_estimates
from .kernels import (
    KERNEL_CONSTANT,
    build_perturbed_kernel,
    free_kernel,
    kernel_frequency_grid,
    leading_kernel_KM,
    verify_kernel_estimate,
)
from .scattering import compute_scattering

__all__ = ["main", "run", "EXIT_OK", "EXIT_FAILED", "EXIT_CONFIG", "EXIT_HYPOTHESIS"]

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_HYPOTHESIS = 0, 1, 2, 3


def config_hash(cfg: RunConfig) -> str:
    # the output directory does not affect results, so it is left out
    blob = json.dumps({k: v for k, v in asdict(cfg).items() if k != "out"}, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _meta(cfg: RunConfig) -> dict:
    return {
        "command": cfg.command,
        "config_hash": config_hash(cfg),
        "calibration_constant": KERNEL_CONSTANT,
        "grid": {"x_min": cfg.x_min, "x_max": cfg.x_max, "n_points": cfg.n_points},
        "potential": cfg.potential().describe() if cfg.kind != "sampled" else {"kind": "sampled",
                                                                                 "csv": cfg.potential_csv},
        "seed": cfg.seed,
        "tol": cfg.tol,
    }


def _positive_band(cfg: RunConfig) -> np.ndarray:
    n = int(round((cfg.tau_max - cfg.tau_min) / cfg.tau_step))
    return cfg.tau_min + cfg.tau_step * np.arange(n + 1)


# ---------------------------------------------------------------------------
# commands; each returns (exit status, summary dict)


def cmd_scatter(cfg: RunConfig, out: Path):
    p, g = cfg.potential(), cfg.grid()
    sd = compute_scattering(p, g, _positive_band(cfg))
    meta = _meta(cfg)
    export_scattering(sd, out / "scattering.csv", out / "scattering.json", meta)
    return EXIT_OK, dict(meta, **sd.summary())


def cmd_jost(cfg: RunConfig, out: Path):
    p, g = cfg.potential(), cfg.grid()
    tau = _positive_band(cfg)
    tau = np.concatenate([-tau[::-1], tau])
    jf = solve_jost_field(p, g, tau, tol=cfg.tol)
    meta = _meta(cfg)
    export_jost_csv(jf, out / "jost_plus.csv", "+", meta)
    export_jost_csv(jf, out / "jost_minus.csv", "-", meta)
    fg = FrequencyGrid.symmetric(min(cfg.tau_max, 5.0), 100)
    reports = verify_jost_estimates(p, g, fg, cfg.gamma, cfg.sigma)
    summary = dict(meta, residual=jf.residual, error_estimate=jf.error_estimate,
                   estimates=[r.to_dict() for r in reports])
    write_json(out / "jost.json", summary)
    return EXIT_OK, summary


def cmd_kernel(cfg: RunConfig, out: Path):
    p, g = cfg.potential(), cfg.grid()
    meta = _meta(cfg)
    rows = []
    for M in cfg.M_values:
        fg = kernel_frequency_grid(M, g, p)
        K = build_perturbed_kernel(p, g, M, fg)
        if M >= 1:
            ref = free_kernel(None, M, g)
        else:
            ref = leading_kernel_KM(compute_scattering(p, g, fg), None, M, g)
        rep = verify_kernel_estimate(K, ref, M, cfg.gamma, cfg.sigma)
        export_kernel(K, out / f"kernel_M{M:g}.bin", out / f"kernel_M{M:g}.csv", meta=meta)
        rows.append({"M": M, "reference": ref.provenance, "constant": rep.constant,
                     "symmetry_defect": K.symmetry_defect(), "realness_defect": K.realness_defect(),
                     "argmax": rep.argmax})
    summary = dict(meta, kernels=rows)
    write_json(out / "kernels.json", summary)
    return EXIT_OK, summary


def cmd_besov(cfg: RunConfig, out: Path):
    p, g = cfg.potential(), cfg.grid()
    for s in cfg.s_values:
        BesovParams(s, cfg.p, cfg.j_min, cfg.j_max).check_theorem(p.gamma)
    suite = default_suite(g)
    base = equivalence_ratio(suite, BesovParams(cfg.s_values[0], cfg.p, cfg.j_min, cfg.j_max), p, g)
    reps = [base.at_s(s) for s in cfg.s_values]
    meta = _meta(cfg)
    rows = [[s, name, float(fr), float(pr), float(r)]
            for s, rep in zip(cfg.s_values, reps)
            for name, fr, pr, r in zip(rep.names, rep.free_norms, rep.perturbed_norms, rep.ratios)]
    write_csv(out / "besov.csv", ["s", "function", "free_norm", "perturbed_norm", "ratio"], rows, meta)
    summary = dict(meta, results=[r.to_dict() for r in reps])
    write_json(out / "besov.json", summary)
    return EXIT_OK, summary


def cmd_crossloc(cfg: RunConfig, out: Path):
    p, g = cfg.potential(), cfg.grid()
    probes = make_probes(g, cfg.k, cfg.n_probes, cfg.seed)
    ctx = BlockContext(g, p)
    Fk = lp_block_apply(probes, cfg.k, "free", ctx)
    reps = [cross_localization_norm(p, cfg.k, j, cfg.p, probes, g, ctx, Fk) for j in cfg.j_values]
    meta = _meta(cfg)
    rows = [[r.k, r.j, abs(r.j - r.k), r.ratio, r.ratio_swapped] for r in reps]
    write_csv(out / "crossloc.csv", ["k", "j", "distance", "ratio", "ratio_swapped"], rows, meta)
    far = [(abs(r.j - r.k), max(r.ratio, r.ratio_swapped)) for r in reps if abs(r.j - r.k) >= 2]
    beta = None
    if len({d for d, _ in far}) >= 2 and all(v > 0 for _, v in far):
        beta = fit_decay_exponent(*zip(*far))
    summary = dict(meta, reports=[r.to_dict() for r in reps], decay_exponent=beta)
    write_json(out / "crossloc.json", summary)
    return EXIT_OK, summary


def cmd_counterexample(cfg: RunConfig, out: Path):
    rep = scaling_report(cfg.N_values)
    meta = dict(_meta(cfg), n=1)
    rows = list(zip(rep.N, rep.I0, rep.norm_sq, rep.ratio))
    write_csv(out / "counterexample.csv", ["N", "I0", "norm_sq", "ratio"], rows, meta)
    summary = dict(meta, **rep.to_dict())
    write_json(out / "counterexample.json", summary)
    return EXIT_OK, summary


def cmd_verify_all(cfg: RunConfig, out: Path):
    results = acceptance.run_checks(cfg.checks, cfg.grid(), cfg.seed, log=print)
    ok = all(r.passed for r in results)
    summary = dict(_meta(cfg), passed=ok, checks=[r.to_dict() for r in results])
    write_json(out / "verify_all.json", summary)
    return (EXIT_OK if ok else EXIT_FAILED), summary


HANDLERS = {
    "scatter": cmd_scatter,
    "jost": cmd_jost,
    "kernel": cmd_kernel,
    "besov": cmd_besov,
    "crossloc": cmd_crossloc,
    "counterexample": cmd_counterexample,
    "verify-all": cmd_verify_all,
}


def run(cfg: RunConfig) -> int:
    """Execute one validated configuration and return the exit status."""
    try:
        cfg.validate()
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        status, _ = HANDLERS[cfg.command](cfg, out)
    except HypothesisViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpscatter", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="overrides run.command from the config")
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, help="probe seed (numpy default_rng)")
    ap.add_argument("--tol", type=float, help="Jost residual tolerance")
    ap.add_argument("--grid-points", type=int, dest="n_points", help="number of spatial grid points")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(command=args.command, out=args.out, seed=args.seed, tol=args.tol,
                                 n_points=args.n_points)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
