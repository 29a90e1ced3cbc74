"""
Floquet Theory

One-period monodromy of periodic (gap, branching) profiles, the band
structure |tr M(E)| <= 2 and the exact m-function of a periodic tail as the
decaying fixed point of the monodromy's Moebius action.
"""

import cmath
import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .config import BAND_XTOL
from .errors import InternalInvariantError, ParameterError
from .transfer import TransferMatrix, free_propagator, vertex_jump

logger = logging.getLogger(__name__)

Period = Tuple[Tuple[float, float], ...]


def validate_period(period: Sequence[Tuple[float, float]]) -> Period:
    if not period:
        raise ParameterError("period must not be empty")
    checked = []
    for i, (gap, branching) in enumerate(period):
        gap, branching = float(gap), float(branching)
        if not gap > 0:
            raise ParameterError(f"period[{i}]: gap must be positive, got {gap}")
        if not branching > 1:
            raise ParameterError(f"period[{i}]: branching must exceed 1, got {branching}")
        checked.append((gap, branching))
    return tuple(checked)


def monodromy(period: Sequence[Tuple[float, float]], z: complex) -> TransferMatrix:
    """J(b_k) T(gap_k) ... J(b_1) T(gap_1)."""
    result = TransferMatrix.identity()
    for gap, branching in validate_period(period):
        result = vertex_jump(branching) @ (free_propagator(z, gap) @ result)
    return result


def discriminant(period: Sequence[Tuple[float, float]], energy: float) -> float:
    """Floquet discriminant tr M(E) for real E."""
    return float(monodromy(period, energy).trace().real)


@dataclass
class BandStructure:
    """Bands of a periodic profile within an energy range.

    `unresolved` lists grid cells whose midpoint disagrees with both
    endpoints about band membership: a band or gap narrower than the grid
    may hide there.
    """

    period: Period
    bands: List[Tuple[float, float]]
    e_range: Tuple[float, float]
    resolution: int
    unresolved: List[Tuple[float, float]] = field(default_factory=list)

    def discriminant(self, energy: float) -> float:
        return discriminant(self.period, energy)

    def total_length(self) -> float:
        return float(sum(high - low for low, high in self.bands))

    def contains(self, energy: float) -> bool:
        return any(low <= energy <= high for low, high in self.bands)


def floquet_bands(
    period: Sequence[Tuple[float, float]],
    e_range: Tuple[float, float],
    resolution: int,
) -> BandStructure:
    """
    Locate the bands {E : |tr M(E)| <= 2} inside `e_range`.

    Args:
        period: (gap, branching) pairs of one period
        e_range: (e_min, e_max) with 0 <= e_min < e_max
        resolution: number of grid points used for bracketing

    Returns:
        BandStructure with bisected band edges
    """
    period = validate_period(period)
    e_min, e_max = float(e_range[0]), float(e_range[1])
    if e_min < 0 or not e_min < e_max:
        raise ParameterError(f"energy range must satisfy 0 <= e_min < e_max, got {e_range}")
    if resolution < 2:
        raise ParameterError(f"resolution must be at least 2, got {resolution}")

    def excess(energy: float) -> float:
        return abs(discriminant(period, energy)) - 2.0

    grid = np.linspace(e_min, e_max, resolution)
    values = np.array([excess(e) for e in grid])
    inside = values <= 0

    edges: List[float] = []
    unresolved: List[Tuple[float, float]] = []
    for i in range(resolution - 1):
        low, high = float(grid[i]), float(grid[i + 1])
        if inside[i] != inside[i + 1]:
            edges.append(bisect(excess, low, high, xtol=BAND_XTOL))
        elif (excess((low + high) / 2) <= 0) != inside[i]:
            unresolved.append((low, high))

    bands: List[Tuple[float, float]] = []
    lower = e_min if inside[0] else None
    for edge in edges:
        if lower is None:
            lower = edge
        else:
            bands.append((lower, edge))
            lower = None
    if lower is not None:
        bands.append((lower, e_max))

    merged: List[Tuple[float, float]] = []
    for band in bands:
        if merged and band[0] - merged[-1][1] <= BAND_XTOL:
            merged[-1] = (merged[-1][0], band[1])
        else:
            merged.append(band)

    if unresolved:
        logger.warning(f"{len(unresolved)} grid cells may hide unbracketed band edges; refine the grid")
    logger.debug(f"Found {len(merged)} bands in [{e_min}, {e_max}]")
    return BandStructure(period, merged, (e_min, e_max), resolution, unresolved)


def decaying_fixed_point(matrix: TransferMatrix) -> Tuple[complex, complex]:
    """
    Fixed point m of the Moebius action of a unit-determinant matrix whose
    eigenvector (1, m) has the eigenvalue of smaller modulus.

    Returns:
        (m, rho) with M (1, m) = rho (1, m) and |rho| <= 1
    """
    a11, a12, a21, a22 = matrix.a11, matrix.a12, matrix.a21, matrix.a22
    half_trace = (a11 + a22) / 2
    root = cmath.sqrt(half_trace * half_trace - 1)
    candidates = [half_trace + root, half_trace - root]
    rho = min(candidates, key=abs)
    # Either row of M (1, m) = rho (1, m) determines m; use the better conditioned one.
    if abs(a12) >= abs(rho - a22):
        if a12 == 0:
            raise InternalInvariantError("monodromy has no decaying eigenvector of the form (1, m)")
        m = (rho - a11) / a12
    else:
        m = a21 / (rho - a22)
    return complex(m), complex(rho)


def m_periodic(period: Sequence[Tuple[float, float]], z: complex) -> complex:
    """Exact m_+ of the purely periodic halfline measure at the start of a period."""
    z = complex(z)
    if not z.imag > 0:
        raise ParameterError(f"spectral parameter must have Im z > 0, got {z}")
    m, rho = decaying_fixed_point(monodromy(period, z))
    if abs(abs(rho) - 1) == 0 or m.imag < -1e-9 * max(1.0, abs(m)):
        raise InternalInvariantError(f"no decaying Floquet solution at z={z} (rho={rho}, m={m})")
    return m
