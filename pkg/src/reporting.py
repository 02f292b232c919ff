"""
Reporting Module
Writes result rows as CSV or JSON and the run manifest next to them
"""

import csv
import io
import json
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy
from pydantic import BaseModel, ConfigDict, Field

import sys
sys.path.append(str(Path(__file__).parent.parent))

import config


class RunManifest(BaseModel):
    """Provenance of one command run"""

    model_config = ConfigDict(frozen=True)

    tool_version: str = config.TOOL_VERSION
    command: str
    arguments: Dict
    settings: Dict = Field(default_factory=dict)
    seed: Optional[int] = None
    simulation: Optional[Dict] = None  # resolved SimConfig for simulate runs
    created_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    python: str = Field(default_factory=platform.python_version)
    numpy: str = np.__version__
    scipy: str = scipy.__version__


def current_settings() -> Dict:
    """Effective configuration values recorded in manifests"""
    return {
        "abs_tol": config.SERIES_ABS_TOL,
        "rel_tol": config.SERIES_REL_TOL,
        "max_terms": config.SERIES_MAX_TERMS,
        "min_exponent": config.SERIES_MIN_EXPONENT,
        "series_crossover": config.SERIES_CROSSOVER,
        "zero_cache": str(config.ZERO_CACHE_DIR) if config.ZERO_CACHE_DIR else None,
    }


def _cell(value) -> str:
    # repr keeps 17 significant digits for floats
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: List[Dict], fields: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_cell(row[field]) for field in fields])
    return buffer.getvalue()


def rows_to_json(rows: List[Dict]) -> str:
    return json.dumps(rows, indent=2) + "\n"


def render(rows: List[Dict], fields: Sequence[str], fmt: str = "csv") -> str:
    """
    Render rows in the requested format

    Args:
        rows: Result rows
        fields: Column order for CSV
        fmt: "csv" or "json"

    Returns:
        Text ready to write
    """
    if fmt == "json":
        return rows_to_json(rows)
    if fmt == "csv":
        return rows_to_csv(rows, fields)
    raise ValueError(f"unknown format '{fmt}'")


def manifest_path(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def write_output(text: str, output: Optional[Path], manifest: Optional[RunManifest] = None):
    """
    Write text to a file (plus its sidecar manifest) or to stdout

    Args:
        text: Rendered output
        output: Destination path, None for stdout
        manifest: Provenance written to <output>.manifest.json
    """
    if output is None:
        sys.stdout.write(text)
        return
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text)
    if manifest is not None:
        manifest_path(output).write_text(manifest.model_dump_json(indent=2) + "\n")
