"""
Atomic Measures

Encoding of radial tree geometries as atomic measures
mu = sum_n beta_n delta_{t_n} together with the measure operations used
throughout the toolkit: local norm, translation, restriction and mirroring.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .config import ATOM_TOL
from .errors import InternalInvariantError, ParameterError

logger = logging.getLogger(__name__)


def weight_from_branching(b: float) -> float:
    """Atom weight beta = (sqrt(b) + 1) / (sqrt(b) - 1) of a branching number b > 1."""
    if not b > 1:
        raise ParameterError(f"branching number must exceed 1, got {b}")
    root = math.sqrt(b)
    return (root + 1.0) / (root - 1.0)


def branching_from_weight(beta: float) -> float:
    """Inverse of `weight_from_branching`: b = ((beta + 1) / (beta - 1))**2."""
    if not beta > 1:
        raise ParameterError(f"atom weight must exceed 1, got {beta}")
    return ((beta + 1.0) / (beta - 1.0)) ** 2


def jump_factor(weight: float) -> float:
    """Value jump sqrt(b) encoded by an atom weight.

    Weights below -1 encode mirrored jumps (b < 1), see `reflect`.
    """
    if not abs(weight) > 1:
        raise ParameterError(f"atom weight must satisfy |weight| > 1, got {weight}")
    return (weight + 1.0) / (weight - 1.0)


@dataclass(frozen=True)
class TailDescriptor:
    """Continuation of a finite window beyond `anchor`.

    For a right tail the measure is periodic with period `period_length` on
    [anchor, inf); for a left tail on (-inf, anchor]. `period_length=None`
    means there are no atoms at all beyond the anchor.
    """

    anchor: float
    period_length: Optional[float] = None

    def __post_init__(self) -> None:
        if self.period_length is not None and not self.period_length > 0:
            raise ParameterError(f"tail period must be positive, got {self.period_length}")

    @property
    def is_free(self) -> bool:
        return self.period_length is None

    def shifted(self, x: float) -> "TailDescriptor":
        return replace(self, anchor=self.anchor - x)

    def mirrored(self) -> "TailDescriptor":
        return replace(self, anchor=-self.anchor)


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite window of an atomic measure.

    Attributes:
        positions: strictly increasing atom positions
        weights: atom weights, |weight| > 1
        separation: lower bound gamma on consecutive gaps
        loc_bound: upper bound C on the local norm
        extent: every atom of the full measure below `extent` is in the window
        start: every atom of the full measure above `start` is in the window
        tail: optional description of the measure beyond the window on the right
        left_tail: same on the left
    """

    positions: np.ndarray
    weights: np.ndarray
    separation: float
    loc_bound: float
    extent: float
    start: float
    tail: Optional[TailDescriptor] = None
    left_tail: Optional[TailDescriptor] = None

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        positions.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "weights", weights)

        if positions.ndim != 1 or positions.shape != weights.shape:
            raise ParameterError("positions and weights must be one-dimensional of equal length")
        if not self.separation > 0:
            raise ParameterError(f"separation must be positive, got {self.separation}")
        if positions.size:
            gaps = np.diff(positions)
            if gaps.size and gaps.min() < self.separation - ATOM_TOL * max(1.0, float(np.abs(positions).max())):
                raise ParameterError(
                    f"consecutive gaps must be at least {self.separation}, smallest is {gaps.min()}"
                )
            if np.any(np.abs(weights) <= 1):
                raise ParameterError("atom weights must satisfy |weight| > 1")
            if self.extent <= positions[-1] or self.start >= positions[0]:
                raise ParameterError("window bounds must enclose all atoms")
        if self.loc_bound + ATOM_TOL < norm_loc(self):
            raise ParameterError(f"loc_bound {self.loc_bound} is below the local norm")

    @classmethod
    def from_atoms(
        cls,
        atoms: Iterable[Tuple[float, float]],
        separation: Optional[float] = None,
        loc_bound: Optional[float] = None,
        extent: Optional[float] = None,
        start: Optional[float] = None,
        tail: Optional[TailDescriptor] = None,
        left_tail: Optional[TailDescriptor] = None,
    ) -> "AtomicMeasure":
        """Build a window from (position, weight) pairs.

        Missing bounds are derived: separation from the smallest gap, the
        window bounds one separation beyond the outermost atoms, loc_bound from
        the exact local norm.
        """
        pairs = sorted((float(p), float(w)) for p, w in atoms)
        positions = np.array([p for p, _ in pairs], dtype=float)
        weights = np.array([w for _, w in pairs], dtype=float)

        if separation is None:
            separation = float(np.diff(positions).min()) if positions.size > 1 else 1.0
        if positions.size:
            extent = positions[-1] + separation if extent is None else extent
            start = positions[0] - separation if start is None else start
        else:
            extent = math.inf if extent is None else extent
            start = -math.inf if start is None else start
        if loc_bound is None:
            loc_bound = _local_norm(positions, weights)

        return cls(
            positions=positions,
            weights=weights,
            separation=separation,
            loc_bound=loc_bound,
            extent=extent,
            start=start,
            tail=tail,
            left_tail=left_tail,
        )

    @classmethod
    def free(cls, separation: float = 1.0) -> "AtomicMeasure":
        """The zero measure: the free halfline/line without any vertices."""
        return cls.from_atoms(
            [],
            separation=separation,
            tail=TailDescriptor(0.0),
            left_tail=TailDescriptor(0.0),
        )

    def __len__(self) -> int:
        return int(self.positions.size)

    @property
    def atoms(self) -> Tuple[Tuple[float, float], ...]:
        return tuple(zip(self.positions.tolist(), self.weights.tolist()))

    @property
    def is_tree_measure(self) -> bool:
        """All weights > 1, i.e. the measure comes from branching numbers b > 1."""
        return bool(np.all(self.weights > 1))

    def branchings(self) -> np.ndarray:
        return np.array([jump_factor(w) ** 2 for w in self.weights.tolist()])

    def is_atom(self, x: float, tol: float = ATOM_TOL) -> bool:
        if not self.positions.size:
            return False
        i = int(np.searchsorted(self.positions, x))
        scale = tol * max(1.0, abs(x))
        for j in (i - 1, i):
            if 0 <= j < self.positions.size and abs(self.positions[j] - x) <= scale:
                return True
        return False

    def atoms_between(self, lower: float, upper: float) -> Tuple[int, int]:
        """Index range [i, j) of atoms strictly inside (lower, upper)."""
        i = int(np.searchsorted(self.positions, lower, side="right"))
        j = int(np.searchsorted(self.positions, upper, side="left"))
        return i, max(i, j)

    def same_atoms(self, other: "AtomicMeasure", tol: float = ATOM_TOL) -> bool:
        return (
            len(self) == len(other)
            and bool(np.allclose(self.positions, other.positions, rtol=0.0, atol=tol))
            and bool(np.array_equal(self.weights, other.weights))
        )


def _local_norm(positions: np.ndarray, weights: np.ndarray) -> float:
    if not positions.size:
        return 0.0
    cumulative = np.concatenate(([0.0], np.cumsum(np.abs(weights))))
    upper = positions + 1.0 + ATOM_TOL * np.maximum(1.0, np.abs(positions))
    right = np.searchsorted(positions, upper, side="right")
    left = np.arange(positions.size)
    return float((cumulative[right] - cumulative[left]).max())


def norm_loc(measure: AtomicMeasure) -> float:
    """Translation-bounded norm sup_x |mu|([x, x + 1]) over the window.

    The supremum over closed unit windows is attained at windows whose left
    end is an atom, so only those are evaluated.
    """
    return _local_norm(measure.positions, measure.weights)


def loc_bound_estimate(measure: AtomicMeasure) -> float:
    """A-priori bound sup|beta| * (floor(1/gamma) + 1) on the local norm."""
    if not len(measure):
        return 0.0
    return float(np.abs(measure.weights).max()) * (math.floor(1.0 / measure.separation) + 1)


def shift(measure: AtomicMeasure, x: float) -> AtomicMeasure:
    """Translate S_x mu = mu(. + x): every position decreases by x."""
    if x == 0:
        return measure
    return replace(
        measure,
        positions=measure.positions - x,
        extent=measure.extent - x,
        start=measure.start - x,
        tail=measure.tail.shifted(x) if measure.tail else None,
        left_tail=measure.left_tail.shifted(x) if measure.left_tail else None,
    )


def restrict(
    measure: AtomicMeasure,
    lower: float = -math.inf,
    upper: float = math.inf,
    closed_lower: bool = False,
    closed_upper: bool = False,
) -> AtomicMeasure:
    """Restriction 1_I mu to the interval I between `lower` and `upper`.

    The result has no atoms outside I, so finite bounds become free tails.
    """
    if lower > upper:
        raise ParameterError(f"empty interval ({lower}, {upper})")
    positions = measure.positions
    i = int(np.searchsorted(positions, lower, side="left" if closed_lower else "right"))
    j = int(np.searchsorted(positions, upper, side="right" if closed_upper else "left"))
    j = max(i, j)

    tail = measure.tail
    extent = measure.extent
    if math.isfinite(upper):
        anchor = upper + measure.separation / 2 if closed_upper else upper
        tail = TailDescriptor(anchor)
        extent = math.inf
    left_tail = measure.left_tail
    start = measure.start
    if math.isfinite(lower):
        anchor = lower - measure.separation / 2 if closed_lower else lower
        left_tail = TailDescriptor(anchor)
        start = -math.inf

    kept_positions = positions[i:j]
    kept_weights = measure.weights[i:j]
    return AtomicMeasure(
        positions=kept_positions,
        weights=kept_weights,
        separation=measure.separation,
        loc_bound=measure.loc_bound,
        extent=extent,
        start=start,
        tail=tail,
        left_tail=left_tail,
    )


def reflect(measure: AtomicMeasure) -> AtomicMeasure:
    """Mirror x -> -x.

    Mirroring exchanges the one-sided limits at every atom, which turns the
    jump sqrt(b) into 1/sqrt(b); in weight coordinates beta -> -beta.
    """
    return AtomicMeasure(
        positions=-measure.positions[::-1],
        weights=-measure.weights[::-1],
        separation=measure.separation,
        loc_bound=measure.loc_bound,
        extent=-measure.start,
        start=-measure.extent,
        tail=measure.left_tail.mirrored() if measure.left_tail else None,
        left_tail=measure.tail.mirrored() if measure.tail else None,
    )


def is_halfline_class(measure: AtomicMeasure, gamma: Optional[float] = None) -> bool:
    """Whether every atom lies in [gamma, inf) (the halfline measure class)."""
    gamma = measure.separation if gamma is None else gamma
    return bool(np.all(measure.positions >= gamma - ATOM_TOL))


def periodic_line(period: Sequence[Tuple[float, float]], cells: int) -> AtomicMeasure:
    """Two-sided periodic measure on the line.

    Args:
        period: (gap, branching) pairs; cell c carries atoms at
            c * L + g_1 + ... + g_j for j = 1..q
        cells: number of cells materialized on each side of the origin

    Returns:
        Window over [-cells * L, cells * L) with periodic tails anchored at
        the midpoint of the first gap.
    """
    if cells < 2:
        raise ParameterError(f"at least two cells per side are needed, got {cells}")
    if not period:
        raise ParameterError("period must not be empty")
    gaps = np.array([float(g) for g, _ in period])
    if np.any(gaps <= 0):
        raise ParameterError("period gaps must be positive")
    cell_weights = np.array([weight_from_branching(float(b)) for _, b in period])
    offsets = np.cumsum(gaps)
    length = float(offsets[-1])

    shifts = np.arange(-cells, cells) * length
    positions = (shifts[:, None] + offsets[None, :]).ravel()
    weights = np.tile(cell_weights, 2 * cells)
    anchor = float(gaps[0]) / 2
    tail = TailDescriptor(anchor, length)
    measure = AtomicMeasure.from_atoms(
        zip(positions.tolist(), weights.tolist()),
        separation=float(gaps.min()),
        extent=float(positions[-1] + gaps[0]),
        start=float(positions[0] - gaps[-1]),
        tail=tail,
        left_tail=tail,
    )
    logger.debug(f"Built periodic line with {len(measure)} atoms, period length {length}")
    return measure


def check_loc_bound(measure: AtomicMeasure) -> None:
    """Raise if the a-priori local bound fails to dominate the exact norm."""
    exact = norm_loc(measure)
    if loc_bound_estimate(measure) + ATOM_TOL < exact:
        raise InternalInvariantError(
            f"a-priori local bound {loc_bound_estimate(measure)} below exact norm {exact}"
        )
