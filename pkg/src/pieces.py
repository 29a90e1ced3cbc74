"""
Piece Algebra

Finite pieces of atomic measures, their concatenation, occurrence checks and
the finite / simple finite decomposition properties verified on a window.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import POSITION_TOL, TILING_NODE_BUDGET
from .errors import ParameterError
from .geometry import TreeGeometry
from .measure import AtomicMeasure

logger = logging.getLogger(__name__)

KEY_DECIMALS = 9


@dataclass(frozen=True)
class Piece:
    """Restriction of a measure to a half-open interval [start, start + length).

    Atoms are stored as (offset from start, weight).
    """

    length: float
    atoms: Tuple[Tuple[float, float], ...] = ()
    start: float = 0.0

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise ParameterError(f"piece length must be positive, got {self.length}")
        atoms = tuple((float(o), float(w)) for o, w in self.atoms)
        for offset, _ in atoms:
            if not 0 <= offset < self.length:
                raise ParameterError(f"atom offset {offset} outside [0, {self.length})")
        object.__setattr__(self, "atoms", tuple(sorted(atoms)))

    def normalized(self) -> "Piece":
        return Piece(self.length, self.atoms, 0.0)

    def positions(self) -> List[float]:
        return [self.start + offset for offset, _ in self.atoms]

    def to_dict(self) -> Dict[str, Any]:
        return {"length": self.length, "atoms": [list(a) for a in self.atoms]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Piece":
        return cls(float(data["length"]), tuple(tuple(a) for a in data.get("atoms", ())))


@dataclass(frozen=True)
class PieceAlphabet:
    pieces: Tuple[Piece, ...]

    def __post_init__(self) -> None:
        if not self.pieces:
            raise ParameterError("alphabet must contain at least one piece")
        if any(piece.start != 0 for piece in self.pieces):
            raise ParameterError("alphabet pieces must start at 0")

    def __len__(self) -> int:
        return len(self.pieces)

    def __getitem__(self, index: int) -> Piece:
        return self.pieces[index]

    @property
    def max_length(self) -> float:
        return max(piece.length for piece in self.pieces)

    def to_dict(self) -> Dict[str, Any]:
        return {"pieces": [piece.to_dict() for piece in self.pieces]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PieceAlphabet":
        return cls(tuple(Piece.from_dict(p) for p in data["pieces"]))


@dataclass(frozen=True)
class Decomposition:
    """Tiling of a window from `base_point` by alphabet pieces.

    `grid` holds the breakpoints x_0 = base_point, x_1, ..., x_n; `end` is the
    right end of the examined window, so [grid[-1], end) stayed uncovered.
    """

    base_point: float
    indices: Tuple[int, ...]
    grid: Tuple[float, ...]
    end: float

    @property
    def success(self) -> bool:
        return True

    @property
    def uncovered(self) -> float:
        return max(0.0, self.end - self.grid[-1])

    @classmethod
    def from_indices(
        cls, alphabet: PieceAlphabet, base_point: float, indices: Sequence[int], end: Optional[float] = None
    ) -> "Decomposition":
        grid = [float(base_point)]
        for index in indices:
            grid.append(grid[-1] + alphabet[index].length)
        return cls(float(base_point), tuple(indices), tuple(grid), grid[-1] if end is None else end)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base_point": self.base_point,
            "indices": list(self.indices),
            "grid": list(self.grid),
            "end": self.end,
        }


@dataclass(frozen=True)
class TilingFailure:
    position: float
    reason: str
    nodes: int

    @property
    def success(self) -> bool:
        return False

    def to_dict(self) -> Dict[str, Any]:
        return {"position": self.position, "reason": self.reason, "nodes": self.nodes}


def concatenate(pieces: Sequence[Piece]) -> Piece:
    """nu_1 | nu_2 | ... placed at the start of the first piece."""
    if not pieces:
        raise ParameterError("cannot concatenate an empty sequence of pieces")
    atoms: List[Tuple[float, float]] = []
    offset = 0.0
    for piece in pieces:
        atoms.extend((offset + o, w) for o, w in piece.atoms)
        offset += piece.length
    return Piece(offset, tuple(atoms), pieces[0].start)


def _window_atoms(measure: AtomicMeasure, x: float, length: float) -> Tuple[np.ndarray, np.ndarray]:
    positions = measure.positions
    i = int(np.searchsorted(positions, x - POSITION_TOL, side="left"))
    j = int(np.searchsorted(positions, x + length - POSITION_TOL, side="left"))
    return positions[i:j] - x, measure.weights[i:j]


def extract_piece(measure: AtomicMeasure, x: float, length: float) -> Piece:
    """The piece of `measure` on [x, x + length)."""
    if x + length > measure.extent + POSITION_TOL:
        raise ParameterError(f"[{x}, {x + length}) leaves the window ending at {measure.extent}")
    offsets, weights = _window_atoms(measure, x, length)
    offsets = np.clip(offsets, 0.0, None)
    return Piece(length, tuple(zip(offsets.tolist(), weights.tolist())), x)


def _atoms_match(offsets: np.ndarray, weights: np.ndarray, atoms: Sequence[Tuple[float, float]]) -> bool:
    if offsets.size != len(atoms):
        return False
    if not offsets.size:
        return True
    expected = np.array(atoms)
    return bool(
        np.all(np.abs(offsets - expected[:, 0]) <= POSITION_TOL) and np.array_equal(weights, expected[:, 1])
    )


def occurs(piece: Piece, measure: AtomicMeasure, x: float) -> bool:
    """Whether the restriction of `measure` to x + [0, length) is a translate of `piece`."""
    offsets, weights = _window_atoms(measure, x, piece.length)
    return _atoms_match(offsets, weights, piece.atoms)


def occurs_prefix(piece: Piece, measure: AtomicMeasure, x: float, length: float) -> bool:
    """Whether the restriction of `measure` to x + [0, length) is a translate of the first `length` of `piece`."""
    offsets, weights = _window_atoms(measure, x, length)
    head = [(offset, weight) for offset, weight in piece.atoms if offset < length - POSITION_TOL]
    return _atoms_match(offsets, weights, head)


def reconstruct(decomposition: Decomposition, alphabet: PieceAlphabet) -> Piece:
    """Concatenation of the decomposition's pieces placed at its base point."""
    joined = concatenate([alphabet[i] for i in decomposition.indices])
    return Piece(joined.length, joined.atoms, decomposition.base_point)


def check_fdp(
    measure: AtomicMeasure,
    alphabet: PieceAlphabet,
    x0: float,
    end: Optional[float] = None,
    budget: int = TILING_NODE_BUDGET,
) -> Union[Decomposition, TilingFailure]:
    """
    Tile [x0, end) left to right by alphabet pieces.

    Alternatives are explored depth-first in alphabet order, so the first
    complete tiling found is the lexicographically first. A remainder shorter
    than the longest piece that no piece fits is left uncovered only when it
    is the beginning of a longer piece; otherwise the position is a dead end.

    Args:
        measure: window to tile
        alphabet: candidate pieces
        x0: base point
        end: right end of the tiled region (default: window extent)
        budget: maximum number of accepted placements explored

    Returns:
        Decomposition on success, TilingFailure with the furthest failing
        position or a budget-exceeded reason otherwise
    """
    end = measure.extent if end is None else end
    if not math.isfinite(end):
        raise ParameterError("tiling needs a finite right end")
    if end <= x0:
        raise ParameterError(f"empty tiling region [{x0}, {end})")
    longest = alphabet.max_length

    stack: List[Tuple[float, int]] = [(float(x0), 0)]
    path: List[int] = []
    dead = set()
    nodes = 0
    furthest = float(x0)

    while stack:
        cursor, k = stack[-1]
        remaining = end - cursor
        advanced = False
        while k < len(alphabet):
            piece = alphabet[k]
            k += 1
            if piece.length > remaining + POSITION_TOL:
                continue
            following = cursor + piece.length
            if round(following / POSITION_TOL) in dead:
                continue
            if occurs(piece, measure, cursor):
                nodes += 1
                if nodes > budget:
                    logger.warning(f"Tiling budget of {budget} placements exceeded at {cursor}")
                    return TilingFailure(cursor, "budget-exceeded", nodes)
                stack[-1] = (cursor, k)
                stack.append((following, 0))
                path.append(k - 1)
                advanced = True
                break
        if advanced:
            continue

        if remaining < longest - POSITION_TOL and any(
            piece.length > remaining + POSITION_TOL and occurs_prefix(piece, measure, cursor, remaining)
            for piece in alphabet
        ):
            decomposition = Decomposition.from_indices(alphabet, x0, path, end)
            logger.debug(f"Tiled [{x0}, {end}) with {len(path)} pieces after {nodes} placements")
            return decomposition

        furthest = max(furthest, cursor)
        dead.add(round(cursor / POSITION_TOL))
        stack.pop()
        if path:
            path.pop()

    logger.info(f"No tiling of [{x0}, {end}); furthest failing position {furthest}")
    return TilingFailure(furthest, "no-match", nodes)


@dataclass(frozen=True)
class SFDPResult:
    """Outcome of the simple finite decomposition check on a finite window."""

    holds: bool
    ell: float
    pairs_checked: int
    witness: Optional[Tuple[int, int]] = None
    window_relative: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "ell": self.ell,
            "pairs_checked": self.pairs_checked,
            "witness": list(self.witness) if self.witness else None,
            "window_relative": self.window_relative,
        }


def _predecessor_block(decomposition: Decomposition, alphabet: PieceAlphabet, k: int, ell: float):
    block: List[int] = []
    total = 0.0
    for index in reversed(decomposition.indices[:k]):
        block.append(index)
        total += alphabet[index].length
        if total >= ell - POSITION_TOL:
            return tuple(reversed(block))
    return None


def _continuation(window: AtomicMeasure, x: float, ell: float):
    offsets, weights = _window_atoms(window, x, ell)
    return tuple(zip(np.round(offsets, KEY_DECIMALS).tolist(), weights.tolist()))


def check_sfdp(
    decomposition: Decomposition,
    alphabet: PieceAlphabet,
    ell: float,
    window: AtomicMeasure,
) -> SFDPResult:
    """
    Check the simple finite decomposition property on the window.

    Two grid points sharing a predecessor block of length >= ell and the same
    measure on the following ell must continue with the same piece.
    """
    if not ell > 0:
        raise ParameterError(f"ell must be positive, got {ell}")
    seen: Dict[Any, Tuple[int, int]] = {}
    checked = 0
    for k in range(1, len(decomposition.indices)):
        x = decomposition.grid[k]
        if x + ell > window.extent + POSITION_TOL:
            break
        block = _predecessor_block(decomposition, alphabet, k, ell)
        if block is None:
            continue
        key = (block, _continuation(window, x, ell))
        following = decomposition.indices[k]
        checked += 1
        if key in seen and seen[key][1] != following:
            witness = (seen[key][0], k)
            logger.info(f"s.f.d.p. fails on the window: grid points {witness} continue differently")
            return SFDPResult(False, ell, checked, witness)
        seen.setdefault(key, (k, following))
    return SFDPResult(True, ell, checked)


def certify_sfdp(alphabet: PieceAlphabet, ell: float) -> bool:
    """Generator-level certificate: distinct single-atom pieces with the atom at 0 and ell >= max length."""
    if not ell > 0:
        raise ParameterError(f"ell must be positive, got {ell}")
    signatures = set()
    for piece in alphabet.pieces:
        if len(piece.atoms) != 1 or piece.atoms[0][0] > POSITION_TOL:
            return False
        signatures.add((round(piece.length, KEY_DECIMALS), piece.atoms[0][1]))
    return len(signatures) == len(alphabet) and ell >= alphabet.max_length - POSITION_TOL


def alphabet_from_geometry(geometry: TreeGeometry) -> PieceAlphabet:
    """Single-atom pieces (gap after the atom, weight of the atom) the geometry can produce."""
    if geometry.kind == "free":
        raise ParameterError("a free geometry has no atoms to build pieces from")
    if geometry.has_periodic_tail:
        edges = geometry.edge_sequence(len(geometry.edges) + 1)
        pairs = [(edges[n + 1].length, edges[n].weight) for n in range(len(edges) - 1)]
    else:
        letters = list(geometry.symbols.values())
        pairs = [(after.length, before.weight) for before in letters for after in letters]
    pieces: List[Piece] = []
    for length, weight in pairs:
        piece = Piece(length, ((0.0, weight),))
        if piece not in pieces:
            pieces.append(piece)
    return PieceAlphabet(tuple(pieces))


def decomposition_from_dict(data: Mapping[str, Any]) -> Decomposition:
    return Decomposition(
        float(data["base_point"]),
        tuple(int(i) for i in data["indices"]),
        tuple(float(x) for x in data["grid"]),
        float(data["end"]),
    )
