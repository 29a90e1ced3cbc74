"""
Weyl Disks

Nested Weyl disks of the halfline problem truncated at a midgap point b and
the m-functions m_+ and m_- obtained as their limit points, each reported
with the final disk radius as error bound.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .config import B_MAX_GAPS, DEFAULT_TOL, DEGENERATE_WRONSKIAN
from .errors import InternalInvariantError, NumericalError, ParameterError
from .measure import AtomicMeasure, reflect
from .transfer import (
    BoundaryState,
    check_evaluation_point,
    fundamental_pair,
    propagate_pair,
    wronskian,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeylDisk:
    center: complex
    radius: float
    truncation: float

    def contains_point(self, point: complex, slack: float = 0.0) -> bool:
        return abs(point - self.center) <= self.radius + slack

    def contains_disk(self, other: "WeylDisk", rtol: float = 1e-8, atol: float = 0.0) -> bool:
        """Whether `other` lies inside this disk up to the relative/absolute slack."""
        return abs(other.center - self.center) + other.radius <= self.radius * (1 + rtol) + atol


@dataclass(frozen=True)
class MValue:
    """An m-function value with its enclosure radius."""

    value: complex
    error_bound: float
    truncation: float
    converged: bool = True
    method: str = "weyl"


def check_spectral_parameter(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise ParameterError(f"spectral parameter must have Im z > 0, got {z}")
    return z


def disk_from_pair(u_n: BoundaryState, u_d: BoundaryState, b: float) -> WeylDisk:
    """Disk of all m with u_N + m u_D satisfying a real boundary condition at b.

    Only Wronskian ratios enter, so the pair may carry a common scale factor.

    Raises:
        InternalInvariantError: W(u_D, conj u_D) vanishes relative to |u_D|^2
        NumericalError: the centre or radius is not finite
    """
    denominator = wronskian(u_d, u_d.conjugate())
    scale = u_d.magnitude() ** 2
    if abs(denominator) <= DEGENERATE_WRONSKIAN * scale:
        raise InternalInvariantError(
            f"degenerate Weyl disk at b={b}: W(u_D, conj u_D) = {denominator}"
        )
    center = -wronskian(u_n, u_d.conjugate()) / denominator
    radius = abs(wronskian(u_n, u_d)) / abs(denominator)
    if not (cmath.isfinite(center) and math.isfinite(radius)):
        raise NumericalError(f"Weyl disk at b={b} is not finite", {"truncation": b})
    return WeylDisk(complex(center), float(radius), float(b))


def weyl_disk(measure: AtomicMeasure, t: float, b: float, z: complex) -> WeylDisk:
    """
    Weyl disk of the problem on [t, b].

    Args:
        measure: vertex measure
        t: base point, not an atom
        b: truncation point, not an atom, b > t
        z: spectral parameter with Im z > 0

    Returns:
        WeylDisk with center, radius and truncation b
    """
    z = check_spectral_parameter(z)
    u_n, u_d = fundamental_pair(measure, t, b, z).states()
    return disk_from_pair(u_n, u_d, b)


def robin_m_point(measure: AtomicMeasure, t: float, b: float, z: complex, beta: float) -> complex:
    """m of the solution satisfying u(b) cos(beta) + u'(b) sin(beta) = 0; lies on the disk boundary."""
    z = check_spectral_parameter(z)
    sin_beta = math.sin(beta)
    if abs(sin_beta) < 1e-15:
        raise ParameterError("Robin angle is a multiple of pi; cot(beta) is undefined")
    h = math.cos(beta) / sin_beta
    u_n, u_d = fundamental_pair(measure, t, b, z).states()
    denominator = u_d.u * h + u_d.du
    if abs(denominator) < DEGENERATE_WRONSKIAN:
        raise ParameterError(f"Robin angle {beta} is tangential to the Dirichlet solution")
    return complex(-(u_n.u * h + u_n.du) / denominator)


def _free_beyond(measure: AtomicMeasure) -> bool:
    return measure.tail is not None and measure.tail.is_free


def truncation_points(measure: AtomicMeasure, t: float, b_max: float) -> Iterator[float]:
    """Midgap truncation points right of t, doubling the enclosed atom count each step."""
    positions = measure.positions
    first = int(np.searchsorted(positions, t, side="right"))
    available = positions.size - first
    gamma = measure.separation
    limit = b_max if _free_beyond(measure) else min(b_max, measure.extent)

    last = t
    n = 1
    while available and n <= 2 * available:
        used = min(n, available)
        i = first + used - 1
        following = positions[i + 1] if i + 1 < positions.size else min(measure.extent, positions[i] + 2 * gamma)
        point = float((positions[i] + following) / 2)
        if point > limit:
            return
        yield point
        last = point
        if used == available:
            break
        n *= 2

    # Atom-free continuation past the last known atom.
    step = gamma
    emitted = False
    while _free_beyond(measure) or not available:
        point = last + step
        if point > limit:
            break
        yield point
        emitted = True
        step *= 2
    if not available and not emitted and limit > t and math.isfinite(limit):
        yield (t + limit) / 2


def disk_sequence(
    measure: AtomicMeasure, t: float, z: complex, b_max: Optional[float] = None
) -> Iterator[WeylDisk]:
    """Successive Weyl disks along `truncation_points`."""
    z = check_spectral_parameter(z)
    check_evaluation_point(measure, t)
    b_max = t + B_MAX_GAPS * measure.separation if b_max is None else b_max
    pair: Tuple[BoundaryState, BoundaryState] = (BoundaryState.neumann(), BoundaryState.dirichlet())
    current = t
    for b in truncation_points(measure, t, b_max):
        pair = propagate_pair(measure, current, b, z, pair)
        current = b
        yield disk_from_pair(pair[0], pair[1], b)


def _limit_point(disks: Iterator[WeylDisk], tol: float, side: str) -> MValue:
    disk = None
    for disk in disks:
        logger.debug(f"{side}: b={disk.truncation:.6g} radius={disk.radius:.3e}")
        if disk.radius < tol:
            break
    if disk is None:
        raise ParameterError(f"no admissible truncation point for {side}; window too short")
    converged = disk.radius < tol
    if not converged:
        logger.warning(
            f"{side} did not converge: radius {disk.radius:.3e} >= tol {tol:.1e} at b={disk.truncation:.6g}"
        )
    return MValue(disk.center, disk.radius, disk.truncation, converged)


def m_plus(
    measure: AtomicMeasure,
    t: float,
    z: complex,
    tol: float = DEFAULT_TOL,
    b_max: Optional[float] = None,
) -> MValue:
    """
    Right m-function m_+(z, t) as limit point of the Weyl disks.

    Args:
        measure: vertex measure
        t: base point, not an atom
        z: spectral parameter with Im z > 0
        tol: target disk radius
        b_max: largest truncation point (default t + B_MAX_GAPS * gamma)

    Returns:
        MValue; `converged` is False when the radius is still >= tol at b_max
    """
    if not tol > 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    return _limit_point(disk_sequence(measure, t, z, b_max), tol, "m_plus")


def _left_disks(measure: AtomicMeasure, t: float, z: complex, b_min: float) -> Iterator[WeylDisk]:
    mirrored = reflect(measure)
    pair: Tuple[BoundaryState, BoundaryState] = (BoundaryState.neumann(), BoundaryState.dirichlet())
    current = t
    for mirrored_b in truncation_points(mirrored, -t, -b_min):
        b = -mirrored_b
        pair = propagate_pair(measure, current, b, z, pair)
        current = b
        u_n, u_d = pair
        yield disk_from_pair(
            BoundaryState(u_n.u, -u_n.du),
            BoundaryState(-u_d.u, u_d.du),
            b,
        )


def m_minus(
    measure: AtomicMeasure,
    t: float,
    z: complex,
    tol: float = DEFAULT_TOL,
    b_min: Optional[float] = None,
) -> MValue:
    """Left m-function m_-(z, t) = -u_-'/u_- with leftward truncations down to b_min."""
    z = check_spectral_parameter(z)
    check_evaluation_point(measure, t)
    if not tol > 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    b_min = t - B_MAX_GAPS * measure.separation if b_min is None else b_min
    return _limit_point(_left_disks(measure, t, z, b_min), tol, "m_minus")
