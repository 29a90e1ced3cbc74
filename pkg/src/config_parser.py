"""
Run Configuration Parser

Reads run configuration files (JSON canonical, TOML accepted), validates the
geometry block and resolves the analysis parameters against CLI overrides.
"""

import json
import logging
import re
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from .config import (
    B_MAX_GAPS,
    DEFAULT_ATOM_COUNT,
    DEFAULT_E_MAX,
    DEFAULT_E_MIN,
    DEFAULT_FORMAT,
    DEFAULT_GRID_POINTS,
    DEFAULT_MAX_GENERATION,
    DEFAULT_SEED,
    DEFAULT_TOL,
    DEFAULT_Y_LADDER,
    EPS_HIGH,
    EPS_LOW,
    OUTPUT_FORMATS,
    SUPPORTED_CONFIG_EXTENSIONS,
)
from .errors import ConfigParseError, ParameterError
from .geometry import TreeGeometry, validate_geometry

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalysisParameters:
    """Command parameters; every field can come from the config file or a CLI flag."""

    e_min: float = DEFAULT_E_MIN
    e_max: float = DEFAULT_E_MAX
    grid: int = DEFAULT_GRID_POINTS
    y_ladder: Tuple[float, ...] = DEFAULT_Y_LADDER
    tol: float = DEFAULT_TOL
    eps_low: float = EPS_LOW
    eps_high: float = EPS_HIGH
    generations: int = DEFAULT_MAX_GENERATION
    ell: Optional[float] = None
    count: int = DEFAULT_ATOM_COUNT
    t: Optional[float] = None
    z: Optional[complex] = None
    y: float = 1e-6
    b_max: Optional[float] = None
    cells: int = 64
    threads: Optional[int] = None
    format: str = DEFAULT_FORMAT
    output: Optional[str] = None
    allow_negative: bool = False

    def validate(self) -> "AnalysisParameters":
        if not self.e_min < self.e_max:
            raise ParameterError(f"e_min must be below e_max, got {self.e_min} >= {self.e_max}")
        if self.e_min < 0 and not self.allow_negative:
            raise ParameterError("negative energies require allow_negative")
        if self.grid < 2:
            raise ParameterError(f"grid must have at least 2 points, got {self.grid}")
        ladder = self.y_ladder
        if not ladder or any(y <= 0 for y in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise ParameterError(f"y-ladder must be strictly decreasing and positive, got {ladder}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if not 0 < self.eps_low < self.eps_high:
            raise ParameterError("thresholds must satisfy 0 < eps_low < eps_high")
        if self.generations < 0:
            raise ParameterError(f"generations must be nonnegative, got {self.generations}")
        if self.ell is not None and not self.ell > 0:
            raise ParameterError(f"ell must be positive, got {self.ell}")
        if self.count < 1:
            raise ParameterError(f"count must be at least 1, got {self.count}")
        if not self.y > 0:
            raise ParameterError(f"y must be positive, got {self.y}")
        if self.z is not None and not self.z.imag > 0:
            raise ParameterError(f"z must have positive imaginary part, got {self.z}")
        if self.cells < 2:
            raise ParameterError(f"cells must be at least 2, got {self.cells}")
        if self.threads is not None and self.threads < 1:
            raise ParameterError(f"threads must be at least 1, got {self.threads}")
        if self.format not in OUTPUT_FORMATS:
            raise ParameterError(f"format must be one of {OUTPUT_FORMATS}, got {self.format}")
        return self

    def default_b_max(self, t: float, gamma: float) -> float:
        return t + B_MAX_GAPS * gamma if self.b_max is None else self.b_max


@dataclass(frozen=True)
class RunConfig:
    geometry: TreeGeometry
    analysis: AnalysisParameters
    seed: int = DEFAULT_SEED
    source: Optional[str] = None


class ConfigParser:
    """Parse run configuration files and command-line values."""

    def __init__(self):
        self.complex_pattern = re.compile(
            r"^\s*(?P<re>[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)?"
            r"\s*(?P<im>[+-]\s*(\d+\.?\d*|\.\d+)?([eE][+-]?\d+)?)?\s*[ij]?\s*$"
        )
        self.toml_position_pattern = re.compile(r"line (\d+), column (\d+)")
        self.field_types = {f.name: f.type for f in fields(AnalysisParameters)}

    def read_file(self, path: Path) -> Dict[str, Any]:
        """
        Read a JSON or TOML configuration file.

        Args:
            path: configuration file

        Returns:
            Parsed mapping
        """
        path = Path(path)
        if path.suffix.lower() not in SUPPORTED_CONFIG_EXTENSIONS:
            raise ConfigParseError(
                f"unsupported config type '{path.suffix}', expected one of {SUPPORTED_CONFIG_EXTENSIONS}",
                {"path": str(path)},
            )
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigParseError(f"cannot read {path}: {e}", {"path": str(path)})

        if path.suffix.lower() == ".json":
            try:
                data = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigParseError(
                    f"{path}:{e.lineno}:{e.colno}: {e.msg}",
                    {"path": str(path), "line": e.lineno, "column": e.colno},
                )
        else:
            try:
                data = tomllib.loads(text)
            except tomllib.TOMLDecodeError as e:
                context: Dict[str, Any] = {"path": str(path)}
                match = self.toml_position_pattern.search(str(e))
                if match:
                    context["line"], context["column"] = int(match.group(1)), int(match.group(2))
                raise ConfigParseError(f"{path}: {e}", context)

        if not isinstance(data, dict):
            raise ConfigParseError(f"{path}: top level must be an object", {"path": str(path)})
        logger.debug(f"Read configuration {path}")
        return data

    def parse_complex(self, text: str) -> complex:
        """Parse '1.0+0.001i', '2-3j', '0.5i' or a plain real number."""
        cleaned = str(text).strip().replace(" ", "")
        match = self.complex_pattern.match(cleaned)
        if not cleaned or not match or not (match.group("re") or match.group("im")):
            raise ConfigParseError(f"cannot parse complex number '{text}'", {"field": "z"})
        real = float(match.group("re")) if match.group("re") else 0.0
        if match.group("im"):
            if cleaned[-1] not in "ij":
                raise ConfigParseError(f"imaginary part of '{text}' lacks a unit i or j", {"field": "z"})
            imaginary = match.group("im")
            coefficient = imaginary if imaginary not in ("+", "-") else imaginary + "1"
            return complex(real, float(coefficient))
        if cleaned[-1] in "ij":
            # a lone number with an imaginary unit, e.g. '0.5i'
            return complex(0.0, real)
        return complex(real, 0.0)

    def parse_ladder(self, value: Any) -> Tuple[float, ...]:
        """Comma-separated string or sequence of numbers."""
        items = value.split(",") if isinstance(value, str) else value
        try:
            return tuple(float(item) for item in items if str(item).strip())
        except (TypeError, ValueError):
            raise ConfigParseError(f"cannot parse y-ladder {value!r}", {"field": "y_ladder"})

    def _coerce(self, name: str, value: Any) -> Any:
        if value is None:
            return None
        try:
            if name == "y_ladder":
                return self.parse_ladder(value)
            if name == "z":
                return value if isinstance(value, complex) else self.parse_complex(value)
            if name in ("grid", "generations", "count", "cells", "threads"):
                if isinstance(value, bool) or not float(value).is_integer():
                    raise ValueError(value)
                return int(value)
            if name in ("format", "output"):
                return str(value)
            if name == "allow_negative":
                return bool(value)
            return float(value)
        except (TypeError, ValueError):
            raise ConfigParseError(f"invalid value {value!r} for '{name}'", {"field": name})

    def resolve_analysis(
        self, block: Mapping[str, Any], overrides: Optional[Mapping[str, Any]] = None
    ) -> AnalysisParameters:
        """Analysis block with CLI overrides applied (None means 'not given')."""
        values: Dict[str, Any] = {}
        for key, value in block.items():
            name = key.replace("-", "_")
            if name == "max_generation":
                name = "generations"
            if name not in self.field_types:
                raise ConfigParseError(f"unknown analysis parameter '{key}'", {"field": key})
            values[name] = self._coerce(name, value)
        for name, value in (overrides or {}).items():
            if value is not None:
                values[name] = self._coerce(name, value)
        return replace(AnalysisParameters(), **values).validate()

    def load(self, path: Path, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
        """
        Load and validate a run configuration.

        A file is either a bare geometry block (it has "kind" or "edges") or an
        object with "geometry", optional "analysis" and optional "seed".
        """
        data = self.read_file(path)
        if "geometry" in data:
            geometry_block = data["geometry"]
            analysis_block = data.get("analysis", {})
        else:
            geometry_block = {k: v for k, v in data.items() if k not in ("analysis", "seed")}
            analysis_block = data.get("analysis", {})
        if not isinstance(analysis_block, Mapping):
            raise ConfigParseError("analysis block must be an object", {"field": "analysis"})

        seed = data.get("seed", DEFAULT_SEED)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigParseError(f"seed must be an integer, got {seed!r}", {"field": "seed"})
        if isinstance(geometry_block, Mapping) and geometry_block.get("kind") == "random":
            geometry_block = {"seed": seed, **geometry_block}

        geometry = validate_geometry(geometry_block)
        analysis = self.resolve_analysis(analysis_block, overrides)
        logger.info(f"Loaded {geometry.kind} geometry from {path}")
        return RunConfig(geometry, analysis, seed, str(path))
