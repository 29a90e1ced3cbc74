"""
Spectral Analysis

Boundary values of m_+ along E + iy ladders and the resulting pointwise
classification of the absolutely continuous spectrum, harmonic measures and
value-distribution comparisons, reflectionless defects and the per-generation
tree report.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .config import (
    DEFAULT_ATOM_COUNT,
    DEFAULT_TOL,
    DEFAULT_Y_LADDER,
    EPS_HIGH,
    EPS_LOW,
    LADDER_AC_EXPONENT,
    RESOLVED_FRACTION,
)
from .errors import ParameterError
from .floquet import decaying_fixed_point
from .geometry import TreeGeometry, decompose_tree
from .measure import AtomicMeasure, reflect
from .transfer import check_evaluation_point, transfer_matrix
from .weyl import MValue, check_spectral_parameter, m_plus

logger = logging.getLogger(__name__)

AC_LIKE = "ac-like"
SINGULAR_LIKE = "singular-like"
UNDECIDED = "undecided"

Interval = Tuple[float, float]


class TailUnavailable(Exception):
    """The window carries no tail usable for exact evaluation at this point."""


def tail_m_plus(measure: AtomicMeasure, t: float, z: complex) -> MValue:
    """
    Exact m_+(z, t) from the tail descriptor of the window.

    For a periodic tail the decaying Floquet solution over one period starting
    at the anchor (advanced past t by whole periods) is pulled back to t.

    Raises:
        TailUnavailable: no tail, or the window does not cover one full period
    """
    z = check_spectral_parameter(z)
    tail = measure.tail
    if tail is None:
        raise TailUnavailable("window has no right tail")
    check_evaluation_point(measure, t)

    if tail.is_free:
        anchor = tail.anchor
        value = 1j * np.sqrt(z)
        if t >= anchor:
            return MValue(complex(value), 0.0, t, True, "tail")
        m_anchor = complex(value)
        end = anchor
    else:
        length = tail.period_length
        anchor = tail.anchor
        if t > anchor:
            anchor += math.ceil((t - anchor) / length) * length
        end = anchor + length
        if end > measure.extent:
            raise TailUnavailable(f"window ends at {measure.extent}, one period needs {end}")
        m_anchor, _ = decaying_fixed_point(transfer_matrix(measure, anchor, end, z))

    if t == anchor:
        return MValue(m_anchor, 0.0, end, True, "tail")
    pull = transfer_matrix(measure, t, anchor, z)
    value = (-pull.a21 + pull.a11 * m_anchor) / (pull.a22 - pull.a12 * m_anchor)
    return MValue(complex(value), 0.0, end, True, "tail")


def boundary_m_plus(
    measure: AtomicMeasure,
    t: float,
    z: complex,
    tol: float = DEFAULT_TOL,
    b_max: Optional[float] = None,
) -> MValue:
    """m_+ from the exact tail when the window has one, Weyl disks otherwise."""
    if measure.tail is not None:
        try:
            return tail_m_plus(measure, t, z)
        except TailUnavailable as e:
            logger.warning(f"Falling back to Weyl disks: {e}")
    return m_plus(measure, t, z, tol=tol, b_max=b_max)


def boundary_m_minus(
    measure: AtomicMeasure,
    t: float,
    z: complex,
    tol: float = DEFAULT_TOL,
    b_min: Optional[float] = None,
) -> MValue:
    """m_-(z, t) = -u_-'/u_-, evaluated as m_+ of the mirrored measure at -t."""
    b_max = None if b_min is None else -b_min
    return boundary_m_plus(reflect(measure), -t, z, tol=tol, b_max=b_max)


@dataclass(frozen=True)
class Thresholds:
    eps_low: float = EPS_LOW
    eps_high: float = EPS_HIGH
    ac_exponent: float = LADDER_AC_EXPONENT
    resolved_fraction: float = RESOLVED_FRACTION

    def __post_init__(self) -> None:
        if not 0 < self.eps_low < self.eps_high:
            raise ParameterError(
                f"thresholds must satisfy 0 < eps_low < eps_high, got {self.eps_low}, {self.eps_high}"
            )
        if not 0 < self.ac_exponent < 1:
            raise ParameterError(f"ac_exponent must lie in (0, 1), got {self.ac_exponent}")

    def to_dict(self) -> Dict[str, float]:
        return {
            "eps_low": self.eps_low,
            "eps_high": self.eps_high,
            "ac_exponent": self.ac_exponent,
            "resolved_fraction": self.resolved_fraction,
        }


@dataclass(frozen=True)
class LadderRung:
    y: float
    value: complex
    error_bound: float
    converged: bool = True

    def resolved(self, fraction: float = RESOLVED_FRACTION) -> bool:
        return self.error_bound <= fraction * abs(self.value.imag)

    def usable(self, fraction: float = RESOLVED_FRACTION) -> bool:
        """Converged enclosure that pins down Im m."""
        return self.converged and self.resolved(fraction)


@dataclass(frozen=True)
class EnergyRecord:
    energy: float
    rungs: Tuple[LadderRung, ...]
    classification: str


def usable_rungs(rungs: Sequence[LadderRung], fraction: float = RESOLVED_FRACTION) -> List[LadderRung]:
    """Rungs from the top of the ladder down to the first one that is not usable."""
    usable = []
    for rung in rungs:
        if not rung.usable(fraction):
            break
        usable.append(rung)
    return usable


def ladder_exponent(previous: LadderRung, last: LadderRung) -> float:
    """Exponent p of the fit Im m ~ y**p through two rungs with positive Im m."""
    return math.log(last.value.imag / previous.value.imag) / math.log(last.y / previous.y)


def classify_ladder(rungs: Sequence[LadderRung], thresholds: Thresholds) -> str:
    """
    ac-like, singular-like or undecided from the two deepest usable rungs.

    The ladder is cut at the first rung whose enclosure did not converge or
    is wider than `resolved_fraction` * Im m. Through the last two remaining
    rungs Im m is fitted as y**p. ac-like needs |p| < ac_exponent and the
    last value in [eps_low, eps_high]. singular-like needs the last value
    below eps_low with p >= 0, or above eps_high with p <= 0.
    """
    usable = usable_rungs(rungs, thresholds.resolved_fraction)
    if len(usable) < 2:
        return UNDECIDED
    previous, last = usable[-2], usable[-1]
    if previous.value.imag <= 0 or last.value.imag <= 0:
        return UNDECIDED

    value = last.value.imag
    exponent = ladder_exponent(previous, last)
    if thresholds.eps_low <= value <= thresholds.eps_high and abs(exponent) < thresholds.ac_exponent:
        return AC_LIKE
    if value < thresholds.eps_low and exponent >= 0:
        return SINGULAR_LIKE
    if value > thresholds.eps_high and exponent <= 0:
        return SINGULAR_LIKE
    return UNDECIDED


def validate_ladder(ladder: Sequence[float]) -> Tuple[float, ...]:
    ladder = tuple(float(y) for y in ladder)
    if not ladder:
        raise ParameterError("y-ladder must not be empty")
    if any(y <= 0 for y in ladder):
        raise ParameterError(f"y-ladder entries must be positive, got {ladder}")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ParameterError(f"y-ladder must be strictly decreasing, got {ladder}")
    return ladder


def validate_energies(energies: Sequence[float], allow_negative: bool = False) -> np.ndarray:
    grid = np.asarray(energies, dtype=float)
    if grid.ndim != 1 or not grid.size:
        raise ParameterError("energy grid must be a nonempty one-dimensional sequence")
    if not allow_negative and np.any(grid < 0):
        raise ParameterError("negative energies require allow_negative=True")
    return grid


def energy_record(
    measure: AtomicMeasure,
    energy: float,
    ladder: Sequence[float],
    thresholds: Thresholds,
    t: float = 0.0,
    tol: float = DEFAULT_TOL,
    b_max: Optional[float] = None,
) -> EnergyRecord:
    """m_+(E + iy, t) down the ladder and its classification."""
    rungs = []
    for y in ladder:
        result = boundary_m_plus(measure, t, complex(energy, y), tol=tol, b_max=b_max)
        rungs.append(LadderRung(y, result.value, result.error_bound, result.converged))
    return EnergyRecord(float(energy), tuple(rungs), classify_ladder(rungs, thresholds))


@dataclass
class SpectralReport:
    energies: np.ndarray
    ladder: Tuple[float, ...]
    records: List[EnergyRecord]
    thresholds: Thresholds
    t: float = 0.0

    def classifications(self) -> List[str]:
        return [record.classification for record in self.records]

    def ac_mask(self) -> np.ndarray:
        return np.array([c == AC_LIKE for c in self.classifications()], dtype=bool)

    def ac_fraction(self) -> float:
        mask = self.ac_mask()
        return float(mask.mean()) if mask.size else 0.0

    def counts(self) -> Dict[str, int]:
        labels = self.classifications()
        return {label: labels.count(label) for label in (AC_LIKE, SINGULAR_LIKE, UNDECIDED)}

    def unconverged(self) -> int:
        return sum(not rung.converged for record in self.records for rung in record.rungs)

    def resolved_mask(self) -> np.ndarray:
        """Energies whose every rung is usable."""
        fraction = self.thresholds.resolved_fraction
        return np.array(
            [all(rung.usable(fraction) for rung in record.rungs) for record in self.records], dtype=bool
        )

    def truncated(self, depth: int) -> "SpectralReport":
        """The report the first `depth` rungs of the ladder give."""
        if not 1 <= depth <= len(self.ladder):
            raise ParameterError(f"depth must lie in [1, {len(self.ladder)}], got {depth}")
        records = [
            EnergyRecord(r.energy, r.rungs[:depth], classify_ladder(r.rungs[:depth], self.thresholds))
            for r in self.records
        ]
        return SpectralReport(self.energies, self.ladder[:depth], records, self.thresholds, self.t)

    def reclassify(self, thresholds: Thresholds) -> "SpectralReport":
        """The same ladder data classified under other thresholds."""
        records = [
            EnergyRecord(r.energy, r.rungs, classify_ladder(r.rungs, thresholds)) for r in self.records
        ]
        return SpectralReport(self.energies, self.ladder, records, thresholds, self.t)


def sigma_ac_estimate(
    measure: AtomicMeasure,
    energies: Sequence[float],
    ladder: Sequence[float] = DEFAULT_Y_LADDER,
    thresholds: Optional[Thresholds] = None,
    t: float = 0.0,
    tol: float = DEFAULT_TOL,
    b_max: Optional[float] = None,
    allow_negative: bool = False,
) -> SpectralReport:
    """
    Classify every energy of the grid from boundary values of m_+.

    Args:
        measure: halfline vertex measure
        energies: energy grid, nonnegative unless allow_negative
        ladder: strictly decreasing positive distances y to the real axis
        thresholds: classification thresholds
        t: base point of m_+
        tol: Weyl disk tolerance where no exact tail is available

    Returns:
        SpectralReport carrying every ladder value
    """
    grid = validate_energies(energies, allow_negative)
    ladder = validate_ladder(ladder)
    thresholds = thresholds or Thresholds()
    records = [energy_record(measure, e, ladder, thresholds, t, tol, b_max) for e in grid.tolist()]
    report = SpectralReport(grid, ladder, records, thresholds, t)
    logger.info(f"Classified {grid.size} energies: ac-like fraction {report.ac_fraction():.3f}")
    return report


def _merge_intervals(intervals: Sequence[Interval]) -> List[Interval]:
    merged: List[Interval] = []
    for low, high in sorted((float(a), float(b)) for a, b in intervals):
        if low > high:
            raise ParameterError(f"interval ({low}, {high}) has its bounds reversed")
        if merged and low <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], high))
        else:
            merged.append((low, high))
    return merged


def harmonic_measure(z: complex, intervals: Sequence[Interval]) -> float:
    """Harmonic measure of a finite union of intervals seen from z in the upper half plane."""
    z = check_spectral_parameter(z)
    x, y = z.real, z.imag
    total = 0.0
    for low, high in _merge_intervals(intervals):
        total += np.arctan((high - x) / y) - np.arctan((low - x) / y)
    return float(total / np.pi)


def mirror_intervals(intervals: Sequence[Interval]) -> List[Interval]:
    """-S for S a union of intervals."""
    return [(-float(high), -float(low)) for low, high in intervals]


def value_distribution_defect(
    f_values: Sequence[complex],
    g_values: Sequence[complex],
    grid: Sequence[float],
    intervals: Sequence[Interval],
) -> float:
    """|int_A w_F(t)(S) dt - int_A w_G(t)(S) dt| by trapezoid quadrature on a common grid."""
    grid = np.asarray(grid, dtype=float)
    if len(f_values) != grid.size or len(g_values) != grid.size:
        raise ParameterError("samples and grid must have equal length")
    f_integrand = np.array([harmonic_measure(v, intervals) for v in f_values])
    g_integrand = np.array([harmonic_measure(v, intervals) for v in g_values])
    return float(abs(trapezoid(f_integrand, grid) - trapezoid(g_integrand, grid)))


@dataclass
class ReflectionlessDefect:
    energies: np.ndarray
    y: float
    defects: np.ndarray
    t: float = 0.0
    m_plus_values: List[complex] = field(default_factory=list)
    m_minus_values: List[complex] = field(default_factory=list)

    def max_defect(self) -> float:
        return float(self.defects.max()) if self.defects.size else 0.0


def reflectionless_point(
    measure: AtomicMeasure, t: float, energy: float, y: float, tol: float = DEFAULT_TOL
) -> Tuple[complex, complex, float]:
    """(m_+, m_-, |m_+ + conj m_-|) at E + iy."""
    z = complex(energy, y)
    plus = boundary_m_plus(measure, t, z, tol=tol).value
    minus = boundary_m_minus(measure, t, z, tol=tol).value
    return plus, minus, float(abs(plus + minus.conjugate()))


def reflectionless_defect(
    measure: AtomicMeasure,
    t: float,
    energies: Sequence[float],
    y: float,
    tol: float = DEFAULT_TOL,
) -> ReflectionlessDefect:
    """Defect |m_+(E + iy, t) + conj m_-(E + iy, t)| over an energy grid."""
    if not y > 0:
        raise ParameterError(f"y must be positive, got {y}")
    grid = validate_energies(energies, allow_negative=True)
    points = [reflectionless_point(measure, t, e, y, tol) for e in grid.tolist()]
    return ReflectionlessDefect(
        energies=grid,
        y=float(y),
        defects=np.array([p[2] for p in points]),
        t=float(t),
        m_plus_values=[p[0] for p in points],
        m_minus_values=[p[1] for p in points],
    )


@dataclass
class GenerationReport:
    generation: int
    multiplicity: Optional[int]
    origin: float
    report: SpectralReport


@dataclass
class TreeSpectrumReport:
    generations: List[GenerationReport]
    union: List[str]

    @property
    def energies(self) -> np.ndarray:
        return self.generations[0].report.energies

    def union_ac_fraction(self) -> float:
        return float(np.mean([c == AC_LIKE for c in self.union])) if self.union else 0.0


def union_classification(labels: Sequence[str]) -> str:
    """ac-like if any generation is, singular-like if all are, undecided otherwise."""
    if any(label == AC_LIKE for label in labels):
        return AC_LIKE
    if labels and all(label == SINGULAR_LIKE for label in labels):
        return SINGULAR_LIKE
    return UNDECIDED


def union_of_reports(reports: Sequence[SpectralReport]) -> List[str]:
    columns = zip(*(report.classifications() for report in reports))
    return [union_classification(column) for column in columns]


def tree_spectrum_report(
    geometry: TreeGeometry,
    max_generation: int,
    energies: Sequence[float],
    ladder: Sequence[float] = DEFAULT_Y_LADDER,
    thresholds: Optional[Thresholds] = None,
    count: int = DEFAULT_ATOM_COUNT,
    tol: float = DEFAULT_TOL,
    allow_negative: bool = False,
) -> TreeSpectrumReport:
    """Sigma_ac estimates of every halfline operator of the decomposition and their union."""
    generations = []
    for entry in decompose_tree(geometry, max_generation, count):
        operator = entry.operator.normalized()
        report = sigma_ac_estimate(
            operator.measure, energies, ladder, thresholds, t=0.0, tol=tol, allow_negative=allow_negative
        )
        generations.append(
            GenerationReport(entry.generation, entry.multiplicity, entry.operator.origin, report)
        )
    return TreeSpectrumReport(generations, union_of_reports([g.report for g in generations]))
