"""
Tree Geometry

Radial tree profiles (edge lengths and branching numbers per generation),
their validation against the standing assumptions, expansion into atomic
measures and the generation-wise decomposition into halfline operators.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_ATOM_COUNT, DEFAULT_SEED, GEOMETRY_KINDS
from .errors import GeometryValidationError, ParameterError
from .measure import (
    AtomicMeasure,
    TailDescriptor,
    check_loc_bound,
    restrict,
    shift,
    weight_from_branching,
)

logger = logging.getLogger(__name__)

RANDOM_BLOCK = 1024


@dataclass(frozen=True)
class Edge:
    """One generation of the radial profile: edge length and the branching at its far end."""

    length: float
    branching: float

    @property
    def is_integral(self) -> bool:
        return float(self.branching).is_integer()

    @property
    def weight(self) -> float:
        return weight_from_branching(self.branching)

    def to_dict(self) -> Dict[str, float]:
        return {"length": self.length, "branching": self.branching}


@dataclass(frozen=True)
class TreeGeometry:
    """Validated radial tree geometry.

    `edges` holds the explicit list for explicit and eventually-periodic
    kinds; substitution and random kinds draw edges from `symbols`.
    """

    kind: str
    gamma: float
    min_branching: Optional[float]
    edges: Tuple[Edge, ...] = ()
    preperiod: int = 0
    period: int = 0
    symbols: Dict[str, Edge] = field(default_factory=dict)
    rules: Dict[str, str] = field(default_factory=dict)
    axiom: str = ""
    depth: int = 0
    seed: Optional[int] = None

    @property
    def has_periodic_tail(self) -> bool:
        return self.kind in ("explicit", "eventually-periodic")

    @property
    def is_integral(self) -> bool:
        """Every branching number is an integer (multiplicities are defined)."""
        pool = self.edges if self.edges else tuple(self.symbols.values())
        return all(edge.is_integral for edge in pool)

    def period_edges(self) -> Tuple[Edge, ...]:
        if not self.has_periodic_tail:
            raise ParameterError(f"geometry of kind '{self.kind}' has no periodic tail")
        return self.edges[self.preperiod:]

    def period_pairs(self) -> List[Tuple[float, float]]:
        """(length, branching) of one period in propagation order."""
        return [(edge.length, edge.branching) for edge in self.period_edges()]

    def symbol_word(self, count: int) -> str:
        """First `count` letters of the generating word (substitution and random kinds)."""
        if self.kind == "substitution":
            return _expand_substitution(self.axiom, self.rules, self.depth, count)
        if self.kind == "random":
            return _random_word(list(self.symbols), self.seed, count)
        raise ParameterError(f"geometry of kind '{self.kind}' has no generating word")

    def edge_sequence(self, count: int) -> List[Edge]:
        """Edges 1..count of the profile; deterministic for every kind."""
        if count < 0:
            raise ParameterError(f"edge count must be nonnegative, got {count}")
        if self.kind == "free":
            return []
        if self.has_periodic_tail:
            head = list(self.edges[: self.preperiod])
            cycle = self.edges[self.preperiod:]
            result = head[:count]
            while len(result) < count:
                result.append(cycle[(len(result) - self.preperiod) % len(cycle)])
            return result
        return [self.symbols[letter] for letter in self.symbol_word(count)]

    def to_dict(self) -> Dict[str, Any]:
        """Normalized geometry description; feeding it back to `validate_geometry` is lossless."""
        data: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "free":
            data["length"] = self.gamma
        elif self.has_periodic_tail:
            data["edges"] = [edge.to_dict() for edge in self.edges]
            if self.kind == "eventually-periodic":
                data["preperiod"] = self.preperiod
                data["period"] = self.period
        else:
            data["symbols"] = {name: edge.to_dict() for name, edge in self.symbols.items()}
            if self.kind == "substitution":
                data["rules"] = dict(self.rules)
                data["axiom"] = self.axiom
                data["depth"] = self.depth
            else:
                data["seed"] = self.seed
        return data


def _expand_substitution(axiom: str, rules: Mapping[str, str], depth: int, count: int) -> str:
    word = axiom
    for _ in range(depth):
        word = "".join(rules[letter] for letter in word)
    while len(word) < count:
        expanded = "".join(rules[letter] for letter in word)
        if len(expanded) <= len(word):
            raise ParameterError(
                f"substitution does not grow; cannot expand beyond {len(word)} letters"
            )
        word = expanded
    return word[:count] if count else word


def _random_word(letters: Sequence[str], seed: Optional[int], count: int) -> str:
    # Fixed-size blocks keep every prefix independent of the requested length.
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    chunks: List[str] = []
    drawn = 0
    while drawn < count:
        indices = rng.integers(0, len(letters), size=RANDOM_BLOCK)
        chunks.append("".join(letters[i] for i in indices))
        drawn += RANDOM_BLOCK
    return "".join(chunks)[:count]


def _parse_edge(raw: Any, where: str) -> Edge:
    if isinstance(raw, Mapping):
        length, branching = raw.get("length"), raw.get("branching")
    elif isinstance(raw, (list, tuple)) and len(raw) == 2:
        length, branching = raw
    else:
        raise GeometryValidationError(
            f"{where}: expected {{length, branching}} or a [length, branching] pair",
            assumption="edge-format",
            context={"field": where},
        )
    try:
        length = float(length)
        branching = float(branching)
    except (TypeError, ValueError):
        raise GeometryValidationError(
            f"{where}: length and branching must be numbers",
            assumption="edge-format",
            context={"field": where},
        )
    if not math.isfinite(length) or length <= 0:
        raise GeometryValidationError(
            f"{where}: edge length must be positive, got {length}",
            assumption="edge-length-bound",
            context={"field": where},
        )
    if not math.isfinite(branching) or branching <= 1:
        raise GeometryValidationError(
            f"{where}: branching number must exceed 1, got {branching}",
            assumption="branching-bound",
            context={"field": where},
        )
    return Edge(length, branching)


def _parse_edges(raw: Mapping[str, Any]) -> Tuple[Edge, ...]:
    edges = raw.get("edges")
    if not edges:
        raise GeometryValidationError("edge list must not be empty", assumption="nonempty-edges")
    return tuple(_parse_edge(item, f"edges[{i}]") for i, item in enumerate(edges))


def _parse_symbols(raw: Mapping[str, Any]) -> Dict[str, Edge]:
    symbols = raw.get("symbols")
    if not isinstance(symbols, Mapping) or not symbols:
        raise GeometryValidationError(
            "symbols must be a nonempty mapping name -> edge", assumption="nonempty-edges"
        )
    parsed = {}
    for name, item in symbols.items():
        if not isinstance(name, str) or len(name) != 1:
            raise GeometryValidationError(
                f"symbol names must be single characters, got {name!r}",
                assumption="symbol-format",
                context={"field": f"symbols.{name}"},
            )
        parsed[name] = _parse_edge(item, f"symbols.{name}")
    return parsed


def _integer_field(raw: Mapping[str, Any], key: str, default: Optional[int], minimum: int) -> int:
    value = raw.get(key, default)
    valid = (
        isinstance(value, (int, float))
        and not isinstance(value, bool)
        and float(value).is_integer()
        and value >= minimum
    )
    if not valid:
        raise GeometryValidationError(
            f"{key} must be an integer >= {minimum}, got {value!r}",
            assumption="structure-counts",
            context={"field": key},
        )
    return int(value)


def validate_geometry(raw: Mapping[str, Any]) -> TreeGeometry:
    """
    Validate a raw geometry description.

    Args:
        raw: parsed geometry block (see README for the schema)

    Returns:
        TreeGeometry with recorded gamma (smallest edge length) and smallest branching
    """
    if not isinstance(raw, Mapping):
        raise GeometryValidationError("geometry must be a mapping", assumption="geometry-format")
    kind = raw.get("kind", "explicit")
    if kind not in GEOMETRY_KINDS:
        raise GeometryValidationError(
            f"unknown geometry kind '{kind}', expected one of {GEOMETRY_KINDS}",
            assumption="geometry-kind",
            context={"field": "kind"},
        )

    if kind == "free":
        length = float(raw.get("length", 1.0))
        if length <= 0:
            raise GeometryValidationError(
                f"free geometry length scale must be positive, got {length}",
                assumption="edge-length-bound",
            )
        geometry = TreeGeometry(kind=kind, gamma=length, min_branching=None)

    elif kind in ("explicit", "eventually-periodic"):
        edges = _parse_edges(raw)
        if kind == "explicit":
            preperiod, period = 0, len(edges)
        else:
            preperiod = _integer_field(raw, "preperiod", 0, 0)
            period = _integer_field(raw, "period", None, 1)
            if preperiod + period != len(edges):
                raise GeometryValidationError(
                    f"preperiod + period = {preperiod + period} but {len(edges)} edges given",
                    assumption="structure-counts",
                    context={"field": "edges"},
                )
        geometry = TreeGeometry(
            kind=kind,
            gamma=min(edge.length for edge in edges),
            min_branching=min(edge.branching for edge in edges),
            edges=edges,
            preperiod=preperiod,
            period=period,
        )

    elif kind == "substitution":
        symbols = _parse_symbols(raw)
        rules = raw.get("rules")
        if not isinstance(rules, Mapping):
            raise GeometryValidationError("substitution rules must be a mapping", assumption="rules")
        for name in symbols:
            word = rules.get(name)
            if not isinstance(word, str) or not word or any(c not in symbols for c in word):
                raise GeometryValidationError(
                    f"rule for '{name}' must be a nonempty word over the symbols, got {word!r}",
                    assumption="rules",
                    context={"field": f"rules.{name}"},
                )
        axiom = raw.get("axiom", next(iter(symbols)))
        if not isinstance(axiom, str) or not axiom or any(c not in symbols for c in axiom):
            raise GeometryValidationError(
                f"axiom must be a nonempty word over the symbols, got {axiom!r}",
                assumption="rules",
                context={"field": "axiom"},
            )
        geometry = TreeGeometry(
            kind=kind,
            gamma=min(edge.length for edge in symbols.values()),
            min_branching=min(edge.branching for edge in symbols.values()),
            symbols=symbols,
            rules={name: rules[name] for name in symbols},
            axiom=axiom,
            depth=_integer_field(raw, "depth", 0, 0),
        )

    else:
        symbols = _parse_symbols(raw)
        geometry = TreeGeometry(
            kind=kind,
            gamma=min(edge.length for edge in symbols.values()),
            min_branching=min(edge.branching for edge in symbols.values()),
            symbols=symbols,
            seed=_integer_field(raw, "seed", DEFAULT_SEED, 0),
        )

    logger.debug(f"Validated {kind} geometry: gamma={geometry.gamma}, min branching={geometry.min_branching}")
    return geometry


def build_measure(geometry: TreeGeometry, count: int = DEFAULT_ATOM_COUNT) -> AtomicMeasure:
    """
    Expand a geometry into the atomic measure window with `count` atoms.

    Atoms sit at t_n = l_1 + ... + l_n with weights beta_n; the window extent
    is t_{count+1}. Geometries with a periodic tail record it, anchored at the
    midpoint of the first edge of the periodic part.
    """
    if geometry.kind == "free":
        return AtomicMeasure.free(separation=geometry.gamma)
    if count < 1:
        raise ParameterError(f"atom count must be at least 1, got {count}")

    edges = geometry.edge_sequence(count + 1)
    lengths = np.array([edge.length for edge in edges])
    cumulative = np.cumsum(lengths)
    positions = cumulative[:count]
    weights = np.array([edge.weight for edge in edges[:count]])

    tail = None
    if geometry.has_periodic_tail:
        head = float(lengths[: geometry.preperiod].sum())
        cycle = geometry.period_edges()
        tail = TailDescriptor(
            anchor=head + cycle[0].length / 2,
            period_length=float(sum(edge.length for edge in cycle)),
        )

    measure = AtomicMeasure.from_atoms(
        zip(positions.tolist(), weights.tolist()),
        separation=geometry.gamma,
        extent=float(cumulative[count]),
        start=0.0,
        tail=tail,
        left_tail=TailDescriptor(0.0),
    )
    check_loc_bound(measure)
    return measure


def symbol_sequence(geometry: TreeGeometry, count: int) -> List[Tuple[float, float]]:
    """The sequence ((t_{n+1} - t_n, b_n)) for n = 1..count."""
    edges = geometry.edge_sequence(count + 1)
    return [(edges[n + 1].length, edges[n].branching) for n in range(count)]


@dataclass(frozen=True, eq=False)
class HalflineOperator:
    """Halfline operator with Dirichlet condition at `origin` and vertex measure `measure`."""

    measure: AtomicMeasure
    origin: float
    label: int

    def __post_init__(self) -> None:
        if len(self.measure) and self.measure.positions[0] <= self.origin:
            raise ParameterError("all atoms must lie strictly right of the origin")

    def normalized(self) -> "HalflineOperator":
        """The same operator translated so that its origin is 0."""
        return HalflineOperator(shift(self.measure, self.origin), 0.0, self.label)


@dataclass(frozen=True, eq=False)
class DecompositionEntry:
    operator: HalflineOperator
    multiplicity: Optional[int]

    @property
    def generation(self) -> int:
        return self.operator.label

    @property
    def multiplicity_available(self) -> bool:
        return self.multiplicity is not None


def generation_multiplicity(branchings: Sequence[float], k: int) -> Optional[int]:
    """b_1 ... b_{k-1} (b_k - 1); 1 for k = 0; None when a branching is not an integer."""
    if k == 0:
        return 1
    used = branchings[:k]
    if not all(float(b).is_integer() for b in used):
        return None
    product = 1
    for b in used[:-1]:
        product *= int(b)
    return product * (int(used[-1]) - 1)


def decompose_tree(
    geometry: TreeGeometry,
    max_generation: int,
    count: int = DEFAULT_ATOM_COUNT,
) -> List[DecompositionEntry]:
    """
    Decompose the tree Laplacian into halfline operators, one per generation.

    Args:
        geometry: validated geometry
        max_generation: last generation k to emit
        count: atoms materialized for every generation's operator

    Returns:
        Entries k = 0..max_generation; the operator of generation k carries the
        atoms t_n with n > k and its Dirichlet origin at t_k
    """
    if max_generation < 0:
        raise ParameterError(f"max_generation must be nonnegative, got {max_generation}")
    if geometry.kind == "free":
        if max_generation > 0:
            logger.warning("Free geometry has no vertices; only generation 0 is emitted")
        measure = build_measure(geometry)
        return [DecompositionEntry(HalflineOperator(measure, 0.0, 0), 1)]

    full = build_measure(geometry, count + max_generation)
    branchings = [edge.branching for edge in geometry.edge_sequence(max_generation)]
    if not geometry.is_integral:
        logger.warning("Non-integer branching numbers: multiplicities are unavailable")

    entries = []
    for k in range(max_generation + 1):
        origin = float(full.positions[k - 1]) if k else 0.0
        measure = restrict(full, lower=origin) if k else full
        entries.append(
            DecompositionEntry(
                operator=HalflineOperator(measure, origin, k),
                multiplicity=generation_multiplicity(branchings, k),
            )
        )
    logger.info(f"Decomposed {geometry.kind} tree into {len(entries)} halfline operators")
    return entries
