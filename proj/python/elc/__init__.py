"""Energy-landscape controller synthesis for optical-lattice spin chains.

Thin Python layer over the native core: configs and controller databases are
plain dicts with the same layout as the CLI's JSON files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Optional, Union

from . import _elc
from ._elc import (
    DomainError,
    ExtractionError,
    SingularityError,
    ValidationError,
    bare_couplings,
    bias_sensitivities,
    correlations,
    double_well_gap_ratio,
    effective_coupling,
    fidelity_error,
    fidelity_trace,
    time_unit,
)

__version__ = _elc.__version__

Config = Union[dict, str, Path]


def _config_text(config: Optional[Config]) -> str:
    if config is None:
        return ""
    if isinstance(config, dict):
        return json.dumps(config)
    return Path(config).read_text()


def load_config(config: Optional[Config] = None) -> dict:
    """Validated config with every default filled in."""
    return json.loads(_elc.normalize_config(_config_text(config)))


def config_hash(config: Optional[Config] = None) -> str:
    return _elc.config_hash(_config_text(config))


def run_pipeline(
    config: Optional[Config] = None,
    *,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> dict:
    """Both synthesis stages plus sensitivity analysis; returns the controller database."""
    return json.loads(_elc.run_pipeline(_config_text(config), seed, threads, progress))


def emit_report(database: dict, outdir: Union[str, Path]) -> tuple[list[str], list[str]]:
    """Writes traces, scatter plots, table1.csv and summary.json; returns (files, warnings)."""
    return _elc.emit_report(json.dumps(database), Path(outdir))


def accepted(database: dict) -> list[dict]:
    return [r for r in database["records"] if r["accepted"]]


__all__ = [
    "DomainError",
    "ExtractionError",
    "SingularityError",
    "ValidationError",
    "accepted",
    "bare_couplings",
    "bias_sensitivities",
    "config_hash",
    "correlations",
    "double_well_gap_ratio",
    "effective_coupling",
    "emit_report",
    "fidelity_error",
    "fidelity_trace",
    "load_config",
    "run_pipeline",
    "time_unit",
]
