"""Schrödinger scattering in one dimension, Littlewood-Paley kernels of the
perturbed Hamiltonian, Besov norm equivalence and the endpoint Sobolev
counterexample."""

from .besov import (
    BesovParams,
    BlockContext,
    besov_norm,
    cross_localization_norm,
    default_suite,
    equivalence_ratio,
    lp_block_apply,
    make_probes,
)
from .config import ConfigError, RunConfig, load_config
from .counterexample import build_phiN, riesz_at_zero, scaling_report
from .grid import FrequencyGrid, HypothesisViolation, Potential, SpatialGrid, eval_potential
from .jost import (
    JostDivergenceError,
    gronwall_bound,
    jost_derivative,
    solve_jost,
    solve_jost_field,
    verify_jost_estimates,
)
from .kernels import (
    KERNEL_CONSTANT,
    build_lp_window,
    build_perturbed_kernel,
    free_kernel,
    leading_kernel_KM,
    perturbed_kernel,
    verify_kernel_estimate,
)
from .scattering import compute_scattering, detect_resonance, reflection, transmission

__version__ = "0.1.0"

__all__ = [
    "BesovParams", "BlockContext", "besov_norm", "cross_localization_norm", "default_suite",
    "equivalence_ratio", "lp_block_apply", "make_probes",
    "ConfigError", "RunConfig", "load_config",
    "build_phiN", "riesz_at_zero", "scaling_report",
    "FrequencyGrid", "HypothesisViolation", "Potential", "SpatialGrid", "eval_potential",
    "JostDivergenceError", "gronwall_bound", "jost_derivative", "solve_jost", "solve_jost_field",
    "verify_jost_estimates",
    "KERNEL_CONSTANT", "build_lp_window", "build_perturbed_kernel", "free_kernel", "leading_kernel_KM",
    "perturbed_kernel", "verify_kernel_estimate",
    "compute_scattering", "detect_resonance", "reflection", "transmission",
]
