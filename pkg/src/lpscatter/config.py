"""Run configuration read from an INI file.

Example::

    [run]
    command = scatter
    seed = 0

    [grid]
    x_min = -40
    x_max = 40
    n_points = 2049

    [potential]
    kind = square_barrier
    V0 = 1
    a = 1
    gamma = 2

Unknown sections or keys are rejected so that typos surface as validation
errors instead of silently falling back to defaults.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .grid import BUILTIN_KINDS, Potential, SpatialGrid

__all__ = ["ConfigError", "RunConfig", "COMMANDS", "load_config"]

COMMANDS = ("scatter", "jost", "kernel", "besov", "crossloc", "counterexample", "verify-all")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


@dataclass
class RunConfig:
    command: str = "scatter"
    out: str = "out"
    seed: int = 0
    tol: float = 1e-8
    # grid
    x_min: float = -40.0
    x_max: float = 40.0
    n_points: int = 2049
    # potential
    kind: str = "square_barrier"
    V0: float = 1.0
    a: float = 1.0
    w: float = 1.0
    gamma: float = 2.0
    potential_csv: str | None = None
    # scatter / jost
    tau_min: float = 0.05
    tau_max: float = 20.0
    tau_step: float = 0.05
    sigma: float = 0.5
    # kernels
    M_values: list = field(default_factory=lambda: [0.25, 4.0])
    # besov / crossloc
    s_values: list = field(default_factory=lambda: [0.0, 0.2, 0.4])
    p: float = 2.0
    j_min: int = -6
    j_max: int = 6
    k: int = 4
    j_values: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    n_probes: int = 32
    # counterexample
    N_values: list = field(default_factory=lambda: [4, 8, 16, 32, 64])
    # verify-all
    checks: list = field(default_factory=lambda: list(range(1, 11)))

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError("run.command", f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)) or not self.x_min < 0 < self.x_max:
            raise ConfigError("grid.x_min/x_max", "need finite x_min < 0 < x_max")
        if self.n_points < 3:
            raise ConfigError("grid.n_points", "must be >= 3")
        if self.kind not in BUILTIN_KINDS + ("sampled",):
            raise ConfigError("potential.kind", f"unknown kind {self.kind!r}")
        if self.kind == "sampled" and not self.potential_csv:
            raise ConfigError("potential.csv", "sampled potentials need a CSV path")
        if self.kind == "sampled" and not Path(self.potential_csv).is_file():
            raise ConfigError("potential.csv", f"file not found: {self.potential_csv}")
        if self.kind in BUILTIN_KINDS and self.V0 < 0:
            raise ConfigError("potential.V0", "built-in potentials must be nonnegative")
        if not self.gamma > 1:
            raise ConfigError("potential.gamma", "decay exponent must exceed 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("run.seed", "must be an unsigned 64-bit integer")
        if not self.tol > 0:
            raise ConfigError("run.tol", "must be positive")
        if not (0 < self.tau_min < self.tau_max) or not self.tau_step > 0:
            raise ConfigError("scatter.tau_min/tau_max/tau_step", "need 0 < tau_min < tau_max and tau_step > 0")
        if not 0 < self.sigma < 1:
            raise ConfigError("jost.sigma", "must lie in (0, 1)")
        if not all(m > 0 for m in self.M_values):
            raise ConfigError("kernel.M", "scales must be positive")
        if not 1 < self.p < math.inf:
            raise ConfigError("besov.p", "must lie in (1, inf)")
        if any(s < 0 for s in self.s_values):
            raise ConfigError("besov.s", "smoothness must be >= 0")
        if self.j_min > self.j_max:
            raise ConfigError("besov.j_min/j_max", "empty range")
        if self.n_probes < 1:
            raise ConfigError("crossloc.n_probes", "need at least one probe")
        if any(N < 0 for N in self.N_values):
            raise ConfigError("counterexample.N", "N must be >= 0")
        if any(c not in range(1, 11) for c in self.checks):
            raise ConfigError("verify.checks", "check ids run from 1 to 10")
        return self

    # -- derived objects -----------------------------------------------------
    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.x_min, self.x_max, self.n_points)

    def potential(self) -> Potential:
        if self.kind == "sampled":
            return Potential.from_csv(self.potential_csv, gamma=self.gamma)
        if self.kind == "zero":
            return Potential.zero(self.gamma)
        if self.kind == "square_barrier":
            return Potential.square_barrier(self.V0, self.a, self.gamma)
        if self.kind == "gaussian":
            return Potential.gaussian(self.V0, self.w, self.gamma)
        return Potential.sech2_barrier(self.V0, self.gamma)

    def hypotheses(self) -> dict:
        """Which decay hypothesis the configured gamma satisfies."""
        return {"gamma>1": self.gamma > 1, "gamma>1+1/p": self.gamma > 1 + 1 / self.p}

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


# (section, key) -> (attribute, parser)
_KEYS = {
    ("run", "command"): ("command", str),
    ("run", "out"): ("out", str),
    ("run", "seed"): ("seed", int),
    ("run", "tol"): ("tol", float),
    ("grid", "x_min"): ("x_min", float),
    ("grid", "x_max"): ("x_max", float),
    ("grid", "n_points"): ("n_points", int),
    ("potential", "kind"): ("kind", str),
    ("potential", "v0"): ("V0", float),
    ("potential", "a"): ("a", float),
    ("potential", "w"): ("w", float),
    ("potential", "gamma"): ("gamma", float),
    ("potential", "csv"): ("potential_csv", str),
    ("scatter", "tau_min"): ("tau_min", float),
    ("scatter", "tau_max"): ("tau_max", float),
    ("scatter", "tau_step"): ("tau_step", float),
    ("jost", "sigma"): ("sigma", float),
    ("kernel", "m"): ("M_values", _floats),
    ("besov", "s"): ("s_values", _floats),
    ("besov", "p"): ("p", float),
    ("besov", "j_min"): ("j_min", int),
    ("besov", "j_max"): ("j_max", int),
    ("crossloc", "k"): ("k", int),
    ("crossloc", "j"): ("j_values", _ints),
    ("crossloc", "n_probes"): ("n_probes", int),
    ("counterexample", "n"): ("N_values", _ints),
    ("verify", "checks"): ("checks", _ints),
}


def load_config(path: str | Path | None = None, text: str | None = None) -> RunConfig:
    """Parse an INI file (or string) into a validated RunConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError("config", f"file not found: {path}")
        cp.read(path)
    elif text is not None:
        cp.read_string(text)
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            spec = _KEYS.get((section.lower(), key.lower()))
            if spec is None:
                raise ConfigError(f"{section}.{key}", "unknown setting")
            attr, parse = spec
            try:
                values[attr] = parse(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}: {exc}") from None
    known = {f.name for f in fields(RunConfig)}
    assert set(values) <= known
    return RunConfig(**values).validate()
