"""
Report Writers

Turns analysis results into versioned JSON payloads and fixed-column CSV
tables. JSON keys are sorted and floats use their shortest round-tripping
form, so identical inputs give byte-identical files.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .config import (
    BANDS_COLUMNS,
    CSV_FLOAT_FORMAT,
    DECOMPOSE_COLUMNS,
    REFLECTIONLESS_COLUMNS,
    SCHEMA,
    SIGMA_AC_COLUMNS,
)
from .errors import ConfigParseError
from .floquet import BandStructure
from .geometry import DecompositionEntry
from .spectral import ReflectionlessDefect, SpectralReport, TreeSpectrumReport

logger = logging.getLogger(__name__)


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, complex numbers and tuples to JSON types."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [jsonable(float(value.real)), jsonable(float(value.imag))]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def to_json(payload: Dict[str, Any]) -> str:
    document = {"schema": SCHEMA, **payload}
    return json.dumps(jsonable(document), sort_keys=True, indent=2) + "\n"


def spectral_payload(report: SpectralReport) -> Dict[str, Any]:
    return {
        "kind": "sigma-ac",
        "t": report.t,
        "ladder": list(report.ladder),
        "thresholds": report.thresholds.to_dict(),
        "ac_fraction": report.ac_fraction(),
        "counts": report.counts(),
        "unconverged": report.unconverged(),
        "records": [
            {
                "E": record.energy,
                "class": record.classification,
                "ladder": [
                    {
                        "y": rung.y,
                        "m": rung.value,
                        "radius": rung.error_bound,
                        "converged": rung.converged,
                    }
                    for rung in record.rungs
                ],
            }
            for record in report.records
        ],
    }


def spectral_frame(report: SpectralReport) -> pd.DataFrame:
    rows = [
        {
            "E": record.energy,
            "y": rung.y,
            "re_m": rung.value.real,
            "im_m": rung.value.imag,
            "radius": rung.error_bound,
            "class": record.classification,
        }
        for record in report.records
        for rung in record.rungs
    ]
    return pd.DataFrame(rows, columns=SIGMA_AC_COLUMNS)


def bands_payload(bands: BandStructure) -> Dict[str, Any]:
    return {
        "kind": "bands",
        "period": [list(p) for p in bands.period],
        "e_range": list(bands.e_range),
        "resolution": bands.resolution,
        "bands": [list(b) for b in bands.bands],
        "unresolved": [list(c) for c in bands.unresolved],
    }


def bands_frame(bands: BandStructure) -> pd.DataFrame:
    rows = [{"band": i, "e_low": low, "e_high": high} for i, (low, high) in enumerate(bands.bands)]
    return pd.DataFrame(rows, columns=BANDS_COLUMNS)


def reflectionless_payload(defect: ReflectionlessDefect) -> Dict[str, Any]:
    return {
        "kind": "reflectionless",
        "t": defect.t,
        "y": defect.y,
        "max_defect": defect.max_defect(),
        "points": [
            {"E": e, "defect": d, "m_plus": p, "m_minus": m}
            for e, d, p, m in zip(
                defect.energies.tolist(),
                defect.defects.tolist(),
                defect.m_plus_values,
                defect.m_minus_values,
            )
        ],
    }


def reflectionless_frame(defect: ReflectionlessDefect) -> pd.DataFrame:
    frame = pd.DataFrame({"E": defect.energies, "defect": defect.defects})
    frame["y"] = defect.y
    return frame[REFLECTIONLESS_COLUMNS]


def decomposition_payload(entries: List[DecompositionEntry]) -> Dict[str, Any]:
    return {
        "kind": "decompose",
        "entries": [
            {
                "generation": entry.generation,
                "multiplicity": entry.multiplicity,
                "multiplicity_available": entry.multiplicity_available,
                "origin": entry.operator.origin,
                "atoms": len(entry.operator.measure),
            }
            for entry in entries
        ],
    }


def decomposition_frame(entries: List[DecompositionEntry]) -> pd.DataFrame:
    rows = [
        {
            "generation": entry.generation,
            "multiplicity": entry.multiplicity,
            "origin": entry.operator.origin,
            "atoms": len(entry.operator.measure),
        }
        for entry in entries
    ]
    return pd.DataFrame(rows, columns=DECOMPOSE_COLUMNS).astype({"multiplicity": "Int64"})


def tree_payload(report: TreeSpectrumReport) -> Dict[str, Any]:
    return {
        "kind": "tree-report",
        "energies": report.energies,
        "union": report.union,
        "union_ac_fraction": report.union_ac_fraction(),
        "generations": [
            {
                "generation": g.generation,
                "multiplicity": g.multiplicity,
                "origin": g.origin,
                "ac_fraction": g.report.ac_fraction(),
                "classes": g.report.classifications(),
            }
            for g in report.generations
        ],
    }


def tree_frame(report: TreeSpectrumReport) -> pd.DataFrame:
    data: Dict[str, Any] = {"E": report.energies}
    for g in report.generations:
        data[f"class_{g.generation}"] = g.report.classifications()
    data["union"] = report.union
    return pd.DataFrame(data)


def write_report(
    payload: Dict[str, Any],
    frame: Optional[pd.DataFrame],
    output: Optional[str],
    fmt: str,
) -> List[Path]:
    """
    Write JSON and/or CSV.

    Args:
        payload: JSON payload (schema tag added here)
        frame: CSV table, or None when the report has no tabular form
        output: base path; suffixes .json/.csv are set per format. None prints JSON to stdout.
        fmt: json, csv or both

    Returns:
        Written paths
    """
    written: List[Path] = []
    if output is None:
        if fmt in ("json", "both"):
            print(to_json(payload), end="")
        if fmt in ("csv", "both") and frame is not None:
            print(frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT), end="")
        return written

    base = Path(output)
    try:
        if fmt in ("json", "both"):
            path = base.with_suffix(".json")
            path.write_text(to_json(payload), encoding="utf-8")
            written.append(path)
        if fmt in ("csv", "both"):
            if frame is None:
                logger.warning("This report has no CSV form; skipping CSV output")
            else:
                path = base.with_suffix(".csv")
                frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
                written.append(path)
    except OSError as e:
        raise ConfigParseError(f"cannot write report to {base}: {e}", {"path": str(base)})
    for path in written:
        logger.info(f"Report written: {path}")
    return written
