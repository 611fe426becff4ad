"""
nlhom - Batch front-end for the nonlocal homogenization library.

Parses a TOML run configuration, runs one experiment command and writes
CSV tables, field dumps and a JSON manifest.
"""

from .commands import COMMAND_TABLE, CommandResult, run_command
from .config import COMMANDS, RunConfig, load_config, parse_config
from .runner import Runner, RunState, main

__version__ = "0.3.0"

__all__ = [
    'COMMANDS',
    'COMMAND_TABLE',
    'CommandResult',
    'RunConfig',
    'RunState',
    'Runner',
    'load_config',
    'main',
    'parse_config',
    'run_command',
]
