"""
Run Configuration.

A run is described by a TOML document with the sections [run], [kernel],
[geometry], [schedules], [solver] and [output]. Unknown keys are errors;
every error names the offending line when it can be located.
"""

import logging
import math
import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..core.errors import ConfigError
from ..core.kernels.families import FAMILY_PARAMETERS
from ..core.minimize import SolverOptions
from ..core.regimes import LAW_REGISTRY

logger = logging.getLogger(__name__)

COMMANDS = (
    "verify-kernel", "fhom", "phi", "phi-nl", "capterm",
    "gns-suite", "regime-sweep", "recovery", "negligibility",
)

# schedules each command reads; all must be nonempty
COMMAND_SCHEDULES = {
    "verify-kernel": (),
    "fhom": ("R",),
    "phi": ("epsilon", "R", "z"),
    "phi-nl": ("R", "z"),
    "capterm": ("epsilon", "R", "z"),
    "gns-suite": ("epsilon",),
    "regime-sweep": (),
    "recovery": ("epsilon", "z"),
    "negligibility": ("epsilon",),
}

KERNEL_KEYS = {"family", "d", "m", "p", "T"}

SECTION_KEYS = {
    "run": {"command", "seed", "threads", "deterministic", "concurrent_solves"},
    "kernel": KERNEL_KEYS | set().union(*FAMILY_PARAMETERS.values()),
    "geometry": {"h", "lower", "upper", "S", "law", "delta", "r", "short_range",
                 "h_ratio", "corpus_size"},
    "schedules": {"epsilon", "R", "T", "z", "alpha"},
    "solver": {"tol", "max_iterations", "max_rounds", "mu_stages", "memory"},
    "output": {"directory", "dump_fields"},
}


@dataclass
class RunConfig:
    # Run
    command: str = "verify-kernel"
    seed: int = 0
    threads: Union[int, str] = "auto"
    deterministic: bool = False
    concurrent_solves: int = 1

    # Kernel: family parameters are passed to the built-in factory
    family: str = "indicator-ball"
    d: int = 3
    m: int = 1
    p: float = 2.0
    T: Optional[float] = None
    kernel_parameters: Dict[str, Any] = field(default_factory=dict)

    # Geometry
    h: float = 0.25
    lower: Optional[List[float]] = None
    upper: Optional[List[float]] = None
    S: Optional[List[List[float]]] = None
    law: str = "nonlocal"
    delta: Optional[float] = None
    r: Optional[float] = None
    short_range: float = 4.0
    h_ratio: float = 4.0
    corpus_size: int = 32

    # Schedules
    epsilon: List[float] = field(default_factory=list)
    R: List[float] = field(default_factory=list)
    T_schedule: List[float] = field(default_factory=list)
    z: List[List[float]] = field(default_factory=list)
    alpha: float = 1.0

    # Solver
    solver: SolverOptions = field(default_factory=SolverOptions)

    # Output
    directory: str = "results"
    dump_fields: bool = True

    def box(self) -> Tuple[List[float], List[float]]:
        """Box corners, defaulting to [-1, 1]^d."""
        lower = self.lower if self.lower is not None else [-1.0] * self.d
        upper = self.upper if self.upper is not None else [1.0] * self.d
        return lower, upper

    def echo(self) -> Dict[str, Any]:
        """Every effective value, as written to the run manifest."""
        lower, upper = self.box()
        return {
            "run": {"command": self.command, "seed": self.seed, "threads": self.threads,
                    "deterministic": self.deterministic,
                    "concurrent_solves": self.concurrent_solves},
            "kernel": {"family": self.family, "d": self.d, "m": self.m, "p": self.p,
                       "T": self.T, **self.kernel_parameters},
            "geometry": {"h": self.h, "lower": lower, "upper": upper, "S": self.S,
                         "law": self.law, "delta": self.delta, "r": self.r,
                         "short_range": self.short_range, "h_ratio": self.h_ratio,
                         "corpus_size": self.corpus_size},
            "schedules": {"epsilon": self.epsilon, "R": self.R, "T": self.T_schedule,
                          "z": self.z, "alpha": self.alpha},
            "solver": {"tol": self.solver.tol, "max_iterations": self.solver.max_iterations,
                       "max_rounds": self.solver.max_rounds, "mu_stages": self.solver.mu_stages,
                       "memory": self.solver.memory},
            "output": {"directory": self.directory, "dump_fields": self.dump_fields},
        }


def _locate(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """1-based line of `key =` inside [section] (or of the header when key is None)."""
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[([^\[\]]+)\]", stripped)
        if header:
            current = header.group(1).strip()
            if key is None and current == section:
                return number
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return number
    return None


class _Reader:
    """Typed access to one section, with line-referenced errors."""

    def __init__(self, text: str, data: Dict[str, Any], section: str):
        self.text = text
        self.section = section
        self.values = data.get(section, {})
        if not isinstance(self.values, dict):
            raise ConfigError(f"[{section}] must be a table", _locate(text, section))

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(f"[{self.section}] {key}: {message}", _locate(self.text, self.section, key))

    def has(self, key: str) -> bool:
        return key in self.values

    def check_keys(self, allowed: set) -> None:
        for key in self.values:
            if key not in allowed:
                raise self.error(key, f"unknown key (allowed: {', '.join(sorted(allowed))})")

    def raw(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def string(self, key: str, default: str) -> str:
        value = self.values.get(key, default)
        if not isinstance(value, str):
            raise self.error(key, f"expected a string, got {value!r}")
        return value

    def boolean(self, key: str, default: bool) -> bool:
        value = self.values.get(key, default)
        if not isinstance(value, bool):
            raise self.error(key, f"expected true or false, got {value!r}")
        return value

    def integer(self, key: str, default: int, minimum: Optional[int] = None) -> int:
        value = self.values.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(key, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise self.error(key, f"must be >= {minimum}: {value}")
        return value

    def real(self, key: str, default: Optional[float], positive: bool = False) -> Optional[float]:
        value = self.values.get(key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(key, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise self.error(key, f"must be finite: {value}")
        if positive and value <= 0.0:
            raise self.error(key, f"must be positive: {value}")
        return value

    def reals(self, key: str, positive: bool = False) -> List[float]:
        value = self.values.get(key, [])
        if not isinstance(value, list):
            raise self.error(key, f"expected a list of numbers, got {value!r}")
        out = []
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise self.error(key, f"malformed schedule entry {item!r}")
            if positive and item <= 0:
                raise self.error(key, f"schedule entries must be positive: {item}")
            out.append(float(item))
        return out

    def vectors(self, key: str, length: int) -> List[List[float]]:
        """List of m-vectors; bare numbers are accepted when length is 1."""
        value = self.values.get(key, [])
        if not isinstance(value, list):
            raise self.error(key, f"expected a list, got {value!r}")
        out = []
        for item in value:
            if isinstance(item, (int, float)) and not isinstance(item, bool) and length == 1:
                out.append([float(item)])
                continue
            if (not isinstance(item, list) or len(item) != length
                    or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in item)):
                raise self.error(key, f"malformed entry {item!r}: expected {length} numbers")
            out.append([float(c) for c in item])
        return out


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a TOML run configuration.

    Args:
        text: TOML document

    Returns:
        RunConfig with defaults filled in

    Raises:
        ConfigError: Syntax errors, unknown keys and range violations
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ConfigError(f"malformed document: {e}", int(match.group(1)) if match else None)

    for section in data:
        if section not in SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]", _locate(text, section))

    run = _Reader(text, data, "run")
    run.check_keys(SECTION_KEYS["run"])
    if not run.has("command"):
        raise ConfigError("[run] command is required", _locate(text, "run"))
    config = RunConfig()
    config.command = run.string("command", config.command)
    if config.command not in COMMANDS:
        raise run.error("command", f"unknown command '{config.command}' (known: {', '.join(COMMANDS)})")
    config.seed = run.integer("seed", 0)
    threads = run.raw("threads", "auto")
    if threads != "auto" and (isinstance(threads, bool) or not isinstance(threads, int) or threads < 1):
        raise run.error("threads", f"expected a positive integer or \"auto\", got {threads!r}")
    config.threads = threads
    config.deterministic = run.boolean("deterministic", False)
    config.concurrent_solves = run.integer("concurrent_solves", 1, minimum=1)

    kernel = _Reader(text, data, "kernel")
    config.family = kernel.string("family", config.family)
    if config.family not in FAMILY_PARAMETERS:
        raise kernel.error("family", f"unknown family '{config.family}' "
                                     f"(known: {', '.join(sorted(FAMILY_PARAMETERS))})")
    kernel.check_keys(KERNEL_KEYS | FAMILY_PARAMETERS[config.family])
    config.d = kernel.integer("d", config.d, minimum=2)
    config.m = kernel.integer("m", config.m, minimum=1)
    config.p = kernel.real("p", config.p)
    if not (1.0 < config.p < config.d):
        raise kernel.error("p", f"p must lie in (1, d) = (1, {config.d}): {config.p}")
    config.T = kernel.real("T", None, positive=True)
    config.kernel_parameters = {
        key: kernel.raw(key) for key in sorted(FAMILY_PARAMETERS[config.family]) if kernel.has(key)
    }

    geometry = _Reader(text, data, "geometry")
    geometry.check_keys(SECTION_KEYS["geometry"])
    config.h = geometry.real("h", config.h, positive=True)
    for corner in ("lower", "upper"):
        if geometry.has(corner):
            values = geometry.reals(corner)
            if len(values) != config.d:
                raise geometry.error(corner, f"expected {config.d} coordinates, got {len(values)}")
            setattr(config, corner, values)
    lower, upper = config.box()
    if any(b <= a for a, b in zip(lower, upper)):
        raise geometry.error("upper", f"box corners must satisfy lower < upper: {lower}, {upper}")
    if geometry.has("S"):
        rows = geometry.vectors("S", config.d)
        if len(rows) != config.m:
            raise geometry.error("S", f"expected an {config.m} x {config.d} matrix")
        config.S = rows
    config.law = geometry.string("law", config.law)
    if config.law not in LAW_REGISTRY:
        raise geometry.error("law", f"unknown scaling law '{config.law}' "
                                    f"(known: {', '.join(LAW_REGISTRY)})")
    config.delta = geometry.real("delta", None, positive=True)
    config.r = geometry.real("r", None, positive=True)
    if (config.delta is None) != (config.r is None):
        raise geometry.error("delta" if config.delta is None else "r",
                             "delta and r must be given together")
    if config.delta is not None and not config.r < 0.5 * config.delta:
        raise geometry.error("r", f"hole radius must be below delta/2: r={config.r}, delta={config.delta}")
    config.short_range = geometry.real("short_range", config.short_range, positive=True)
    config.h_ratio = geometry.real("h_ratio", config.h_ratio, positive=True)
    config.corpus_size = geometry.integer("corpus_size", config.corpus_size, minimum=1)

    schedules = _Reader(text, data, "schedules")
    schedules.check_keys(SECTION_KEYS["schedules"])
    config.epsilon = schedules.reals("epsilon", positive=True)
    config.R = schedules.reals("R", positive=True)
    config.T_schedule = schedules.reals("T", positive=True)
    config.z = schedules.vectors("z", config.m)
    config.alpha = schedules.real("alpha", config.alpha, positive=True)
    for name in COMMAND_SCHEDULES[config.command]:
        if not getattr(config, "T_schedule" if name == "T" else name):
            raise ConfigError(f"[schedules] {name} must be a nonempty list for '{config.command}'",
                              _locate(text, "schedules", name) or _locate(text, "schedules"))

    solver = _Reader(text, data, "solver")
    solver.check_keys(SECTION_KEYS["solver"])
    config.solver = SolverOptions(
        tol=solver.real("tol", SolverOptions.tol, positive=True),
        max_iterations=solver.integer("max_iterations", SolverOptions.max_iterations, minimum=1),
        max_rounds=solver.integer("max_rounds", SolverOptions.max_rounds, minimum=1),
        mu_stages=solver.integer("mu_stages", SolverOptions.mu_stages, minimum=0),
        memory=solver.integer("memory", SolverOptions.memory, minimum=1),
    )
    try:
        config.solver.validate()
    except ValueError as e:
        raise ConfigError(f"[solver] {e}", _locate(text, "solver"))

    output = _Reader(text, data, "output")
    output.check_keys(SECTION_KEYS["output"])
    config.directory = output.string("directory", config.directory)
    config.dump_fields = output.boolean("dump_fields", config.dump_fields)

    logger.debug(f"Configuration parsed: {config.echo()}")
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and parse a configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")
    return parse_config(text)
