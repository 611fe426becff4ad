"""
Output Handler - Delivers run artifacts to the output directory.

Artifacts:
- <table>.csv: one pandas DataFrame per table, written with 17 significant digits
- fields/<name>.nlhg: binary field dumps of returned minimizers
- manifest.json: config echo, package versions, tolerances and invariant verdicts
"""

import json
import logging
import math
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
import scipy

from ..core.fields import GridFunction, save_field

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST = "manifest.json"


def package_versions() -> Dict[str, str]:
    """Versions of the packages that determine numerical output."""
    try:
        own = metadata.version("nlhom")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"nlhom": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "pandas": pd.__version__}


def _jsonable(value: Any) -> Any:
    """Plain JSON values; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


class OutputHandler:
    """Writes tables, field dumps and the manifest of one run."""

    def __init__(self, directory: Path, dump_fields: bool = True):
        self._directory = Path(directory)
        self._dump_fields = dump_fields
        self._written = []

    @property
    def directory(self) -> Path:
        return self._directory

    @property
    def written(self) -> list:
        return list(self._written)

    def deliver_table(self, name: str, frame: pd.DataFrame) -> Path:
        """
        Write one CSV table.

        Args:
            name: Table name (file stem)
            frame: Rows carrying every parameter that produced them

        Returns:
            Path of the CSV file
        """
        self._directory.mkdir(parents=True, exist_ok=True)
        path = self._directory / f"{name}.csv"
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        self._written.append(path.name)
        logger.info(f"Table written: {path.name} ({len(frame)} rows)")
        return path

    def deliver_field(self, name: str, u: GridFunction) -> Optional[Path]:
        if not self._dump_fields:
            return None
        path = save_field(self._directory / "fields" / f"{name}.nlhg", u)
        self._written.append(f"fields/{path.name}")
        return path

    def write_manifest(self, manifest: Dict[str, Any]) -> Path:
        self._directory.mkdir(parents=True, exist_ok=True)
        path = self._directory / MANIFEST
        payload = dict(manifest)
        payload["versions"] = package_versions()
        payload["artifacts"] = sorted(self._written)
        path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        logger.info(f"Manifest written: {path}")
        return path
