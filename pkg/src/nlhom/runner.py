"""
Runner - Main entry point and run state machine.

Batch flow:
    CONFIGURED --> COMPUTING --> WRITING --> DONE
                       |             |
                       +--> FAILED <-+

Exit status: 0 when every checked property holds, 1 on a failed property,
2 on invalid input (config, kernel, grid, scaling law), 3 on solver or
energy failures. The manifest is written in every case.

Usage:
    python -m src.nlhom --config runs/phi.toml --output results/phi
"""

import argparse
import logging
import sys
import time
from enum import Enum
from pathlib import Path
from typing import List, Optional

from ..core.energy import ExecutionContext, resolve_threads
from ..core.errors import (
    ConfigError,
    EnergyError,
    GridError,
    InvariantViolation,
    KernelError,
    NlhomError,
    RegimeError,
    SolverError,
)
from .commands import COMMAND_TABLE, CommandResult
from .config import RunConfig, load_config
from .output_handler import OutputHandler

logger = logging.getLogger("nlhom")

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_INVALID = 2
EXIT_SOLVER = 3

MIN_RESOLUTION = 4.0          # eps / h below this is under-resolved


class RunState(Enum):
    CONFIGURED = "configured"
    COMPUTING = "computing"
    WRITING = "writing"
    DONE = "done"
    FAILED = "failed"


def exit_status(error: Exception) -> int:
    """Exit status for an exception raised during a run."""
    if isinstance(error, InvariantViolation):
        return EXIT_INVARIANT
    if isinstance(error, (ConfigError, KernelError, GridError, RegimeError)):
        return EXIT_INVALID
    if isinstance(error, (SolverError, EnergyError)):
        return EXIT_SOLVER
    return EXIT_INVALID


class Runner:
    """Runs one configured command and delivers its artifacts."""

    def __init__(self, config: RunConfig):
        self.config = config
        self._state = RunState.CONFIGURED
        self._output = OutputHandler(Path(config.directory), config.dump_fields)
        self._started = 0.0

    @property
    def state(self) -> RunState:
        return self._state

    @property
    def output(self) -> OutputHandler:
        return self._output

    def _set_state(self, new_state: RunState) -> None:
        old = self._state
        self._state = new_state
        logger.info(f"State: {old.value} -> {new_state.value}")

    def _execution(self) -> ExecutionContext:
        return ExecutionContext(
            threads=resolve_threads(self.config.threads),
            deterministic=self.config.deterministic,
            concurrent_solves=self.config.concurrent_solves,
        )

    def _warn_resolution(self) -> None:
        # capterm, negligibility and gns-suite derive h from eps
        if self.config.command not in ("phi", "recovery"):
            return
        for eps in self.config.epsilon:
            if eps / self.config.h < MIN_RESOLUTION:
                logger.warning(f"Under-resolved grid: eps/h = {eps / self.config.h:.3g} "
                               f"< {MIN_RESOLUTION:g} at eps={eps:g}")

    def _banner(self) -> None:
        c = self.config
        logger.info("=" * 50)
        logger.info(f"nlhom run: {c.command}")
        logger.info(f"  Kernel: {c.family} (d={c.d}, m={c.m}, p={c.p:g})")
        logger.info(f"  Grid: h={c.h:g}, box={c.box()}")
        logger.info(f"  Threads: {c.threads} (deterministic={c.deterministic})")
        logger.info(f"  Output: {self._output.directory}")
        logger.info("=" * 50)

    def _deliver(self, result: CommandResult) -> None:
        for name, frame in result.tables.items():
            self._output.deliver_table(name, frame)
        for name, u in result.fields.items():
            self._output.deliver_field(name, u)

    def _manifest(self, status: int, result: Optional[CommandResult],
                  error: Optional[Exception]) -> None:
        failed: List[str] = list(result.failed) if result is not None else []
        if isinstance(error, InvariantViolation) and error.name not in failed:
            failed.append(error.name)
        manifest = {
            "command": self.config.command,
            "config": self.config.echo(),
            "status": status,
            "state": self._state.value,
            "elapsed_seconds": round(time.monotonic() - self._started, 3),
            "invariants": dict(result.invariants) if result is not None else {},
            "failed_invariants": failed,
            "tolerances": dict(result.tolerances) if result is not None else {},
            "diagnostics": dict(result.diagnostics) if result is not None else {},
            "error": None if error is None else f"{type(error).__name__}: {error}",
        }
        self._output.write_manifest(manifest)

    def run(self) -> int:
        """
        Execute the command, write tables, fields and manifest.

        Returns:
            Exit status
        """
        self._started = time.monotonic()
        self._banner()
        self._warn_resolution()
        result: Optional[CommandResult] = None
        error: Optional[Exception] = None
        status = EXIT_OK
        try:
            self._set_state(RunState.COMPUTING)
            with self._execution() as execution:
                result = COMMAND_TABLE[self.config.command](self.config, execution)
            self._set_state(RunState.WRITING)
            self._deliver(result)
            if result.failed:
                status = EXIT_INVARIANT
                logger.error(f"Failed properties: {', '.join(result.failed)}")
            self._set_state(RunState.DONE)
        except NlhomError as e:
            error = e
            status = exit_status(e)
            logger.error(f"Run failed ({type(e).__name__}): {e}")
            self._set_state(RunState.FAILED)
        except (ArithmeticError, ValueError, RuntimeError) as e:
            error = e
            status = EXIT_SOLVER
            logger.exception(f"Numerical failure: {e}")
            self._set_state(RunState.FAILED)
        finally:
            self._manifest(status, result, error)
        logger.info(f"Finished with status {status}")
        return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlhom",
        description="Nonlocal homogenization and capacitary-density experiments",
    )
    parser.add_argument("--config", required=True, type=Path, help="TOML run configuration")
    parser.add_argument("--output", type=Path, help="Override [output] directory")
    parser.add_argument("--seed", type=int, help="Override [run] seed")
    parser.add_argument("--threads", type=int, help="Override [run] threads")
    parser.add_argument("--deterministic", action="store_true",
                        help="Chunked, order-fixed summation (bit-identical output)")
    parser.add_argument("--verbose", action="store_true", help="DEBUG logging")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
        datefmt="%H:%M:%S",
    )
    try:
        config = load_config(args.config)
        if args.threads is not None:
            config.threads = resolve_threads(args.threads)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_INVALID

    if args.output is not None:
        config.directory = str(args.output)
    if args.seed is not None:
        config.seed = args.seed
    if args.deterministic:
        config.deterministic = True
    return Runner(config).run()


if __name__ == "__main__":
    sys.exit(main())
