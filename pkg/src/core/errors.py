"""
Error hierarchy shared by the core library and the batch front-end.
"""


class NlhomError(Exception):
    """Base class for every error raised by this package."""


class KernelError(NlhomError, ValueError):
    """Invalid kernel family, parameters or truncation."""


class GridError(NlhomError, ValueError):
    """Grid geometry problem: non-tiling box, non-commensurate shift, empty cell set."""


class EnergyError(NlhomError, ValueError):
    """Energy evaluation on incompatible inputs."""


class SolverError(NlhomError, RuntimeError):
    """Minimization diverged or produced non-finite values."""


class RegimeError(NlhomError, ValueError):
    """Scaling law inconsistent with its declared limits, or a missing density table."""


class ConfigError(NlhomError, ValueError):
    """Invalid run configuration. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(NlhomError, AssertionError):
    """A checked property failed. `name` identifies the assertion in the run manifest."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        self.detail = detail
        super().__init__(f"{name}: {detail}" if detail else name)
