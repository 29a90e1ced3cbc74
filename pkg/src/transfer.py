"""
Transfer Matrices

Solution flow of -u'' = z u between vertices and through the jump
conditions u(t+) = sqrt(b) u(t-), u'(t+) = u'(t-) / sqrt(b). Values at
atoms are right-sided limits.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Tuple, Union

import numpy as np

from .config import ATOM_TOL, RESCALE_THRESHOLD, SERIES_THRESHOLD
from .errors import NumericalError, ParameterError
from .measure import AtomicMeasure, jump_factor

logger = logging.getLogger(__name__)

# Longest free stretch propagated in one step, in units of 1/Im sqrt(z).
MAX_GROWTH_EXPONENT = 30.0


@dataclass(frozen=True)
class BoundaryState:
    """Value and derivative of a solution at a point."""

    u: complex
    du: complex

    @classmethod
    def neumann(cls) -> "BoundaryState":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def dirichlet(cls) -> "BoundaryState":
        return cls(0j, 1.0 + 0j)

    def conjugate(self) -> "BoundaryState":
        return BoundaryState(self.u.conjugate(), self.du.conjugate())

    def scaled(self, factor: float) -> "BoundaryState":
        return BoundaryState(self.u * factor, self.du * factor)

    def magnitude(self) -> float:
        return max(abs(self.u), abs(self.du))


@dataclass(frozen=True)
class TransferMatrix:
    a11: complex
    a12: complex
    a21: complex
    a22: complex

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)

    def __matmul__(
        self, other: Union["TransferMatrix", BoundaryState]
    ) -> Union["TransferMatrix", BoundaryState]:
        if isinstance(other, BoundaryState):
            return BoundaryState(
                self.a11 * other.u + self.a12 * other.du,
                self.a21 * other.u + self.a22 * other.du,
            )
        return TransferMatrix(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def det(self) -> complex:
        return self.a11 * self.a22 - self.a12 * self.a21

    def trace(self) -> complex:
        return self.a11 + self.a22

    def inverse(self) -> "TransferMatrix":
        """Inverse of a unit-determinant matrix."""
        return TransferMatrix(self.a22, -self.a12, -self.a21, self.a11)

    def entries(self) -> Tuple[complex, complex, complex, complex]:
        return self.a11, self.a12, self.a21, self.a22

    def magnitude(self) -> float:
        return max(abs(a) for a in self.entries())

    def scaled(self, factor: float) -> "TransferMatrix":
        return TransferMatrix(*(a * factor for a in self.entries()))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=complex)


def _cos_sinc(z: complex, length: float) -> Tuple[complex, complex]:
    """c = cos(sqrt(z) l) and s = sin(sqrt(z) l) / sqrt(z) as entire functions of z."""
    w = z * length * length
    if abs(w) < SERIES_THRESHOLD:
        c = 1 - w / 2 + w * w / 24 - w ** 3 / 720
        s = length * (1 - w / 6 + w * w / 120 - w ** 3 / 5040)
        return complex(c), complex(s)
    k = cmath.sqrt(z)
    return cmath.cos(k * length), cmath.sin(k * length) / k


def free_propagator(z: complex, length: float) -> TransferMatrix:
    """Flow of -u'' = z u across an atom-free interval of the given length."""
    if not length > 0:
        raise ParameterError(f"interval length must be positive, got {length}")
    c, s = _cos_sinc(complex(z), float(length))
    return TransferMatrix(c, s, -z * s, c)


def vertex_jump(b: float) -> TransferMatrix:
    """Jump diag(sqrt(b), 1/sqrt(b)) at a vertex with branching number b > 1."""
    if not b > 1:
        raise ParameterError(f"branching number must exceed 1, got {b}")
    root = float(np.sqrt(b))
    return TransferMatrix(root, 0.0, 0.0, 1.0 / root)


def weight_jump(weight: float) -> TransferMatrix:
    """Jump encoded by an atom weight; negative weights give mirrored jumps."""
    root = jump_factor(weight)
    return TransferMatrix(root, 0.0, 0.0, 1.0 / root)


def check_evaluation_point(measure: AtomicMeasure, x: float) -> None:
    if measure.is_atom(x, ATOM_TOL):
        raise ParameterError(f"evaluation point {x} coincides with an atom", {"point": x})


def _steps(measure: AtomicMeasure, start: float, stop: float) -> Iterator[Tuple[str, float]]:
    """("free", length) and ("jump", weight) steps over (start, stop), left to right."""
    if not start < stop:
        raise ParameterError(f"propagation requires start < stop, got {start} >= {stop}")
    check_evaluation_point(measure, start)
    check_evaluation_point(measure, stop)
    i, j = measure.atoms_between(start, stop)
    cursor = start
    for position, weight in zip(measure.positions[i:j].tolist(), measure.weights[i:j].tolist()):
        yield "free", position - cursor
        yield "jump", weight
        cursor = position
    yield "free", stop - cursor


def _step_matrix(kind: str, value: float, z: complex) -> TransferMatrix:
    return free_propagator(z, value) if kind == "free" else weight_jump(value)


def flow_matrices(
    measure: AtomicMeasure, start: float, stop: float, z: complex
) -> Iterator[TransferMatrix]:
    """
    Step matrices carrying solution data from `start` to `stop`, in order of
    application. The flow runs leftwards when stop < start. Free stretches
    longer than MAX_GROWTH_EXPONENT / |Im sqrt(z)| are split so that no single
    step overflows.
    """
    growth = abs(cmath.sqrt(z).imag)
    cap = MAX_GROWTH_EXPONENT / growth if growth > 0 else float("inf")
    steps = list(_steps(measure, min(start, stop), max(start, stop)))
    leftwards = stop < start
    if leftwards:
        steps.reverse()

    for kind, value in steps:
        pieces = 1
        if kind == "free" and value > cap:
            pieces = int(np.ceil(value / cap))
            value = value / pieces
        matrix = _step_matrix(kind, value, z)
        if leftwards:
            matrix = matrix.inverse()
        for _ in range(pieces):
            yield matrix


def _require_finite(values: Iterable[complex], what: str, z: complex) -> None:
    if not all(cmath.isfinite(v) for v in values):
        raise NumericalError(
            f"{what} left the floating-point range at z={z}",
            {"re_z": z.real, "im_z": z.imag},
        )


def scaled_transfer_matrix(
    measure: AtomicMeasure, start: float, stop: float, z: complex
) -> Tuple[TransferMatrix, float]:
    """
    Transfer matrix from `start` to `stop` as a pair (M, log_scale).

    The running product is renormalized whenever an entry exceeds
    RESCALE_THRESHOLD; the true matrix is exp(log_scale) * M, so
    det M = exp(-2 log_scale).

    Raises:
        NumericalError: the product is not finite
    """
    z = complex(z)
    result = TransferMatrix.identity()
    log_scale = 0.0
    for matrix in flow_matrices(measure, start, stop, z):
        result = matrix @ result
        size = result.magnitude()
        if size > RESCALE_THRESHOLD:
            result = result.scaled(1.0 / size)
            log_scale += math.log(size)
    _require_finite(result.entries(), "transfer matrix", z)
    return result, log_scale


def transfer_matrix(measure: AtomicMeasure, start: float, stop: float, z: complex) -> TransferMatrix:
    """
    Matrix mapping solution data at `start` to data at `stop`.

    Raises:
        NumericalError: an entry exceeds the floating-point range; use
            `scaled_transfer_matrix` for such windows
    """
    result, log_scale = scaled_transfer_matrix(measure, start, stop, z)
    if log_scale == 0.0:
        return result
    try:
        factor = math.exp(log_scale)
    except OverflowError:
        factor = math.inf
    result = result.scaled(factor)
    _require_finite(result.entries(), "transfer matrix", complex(z))
    return result


def propagate(
    measure: AtomicMeasure, start: float, stop: float, z: complex, state: BoundaryState
) -> BoundaryState:
    """
    Propagate solution data from `start` to `stop`.

    Args:
        measure: vertex measure
        start: starting point, not an atom
        stop: end point, not an atom; the flow runs leftwards when stop < start
        z: spectral parameter
        state: data (u, u') at `start`

    Returns:
        Data (u, u') at `stop`

    Raises:
        NumericalError: the data overflow
    """
    z = complex(z)
    for matrix in flow_matrices(measure, start, stop, z):
        state = matrix @ state
    _require_finite((state.u, state.du), f"solution data at {stop}", z)
    return state


def wronskian(s1: BoundaryState, s2: BoundaryState) -> complex:
    """W(u, v) = u' v - u v'."""
    return s1.du * s2.u - s1.u * s2.du


@dataclass(frozen=True)
class ScaledPair:
    """Two solutions whose true data are exp(log_scale) times the stored states."""

    first: BoundaryState
    second: BoundaryState
    log_scale: float = 0.0

    @classmethod
    def fundamental(cls) -> "ScaledPair":
        return cls(BoundaryState.neumann(), BoundaryState.dirichlet())

    def states(self) -> Tuple[BoundaryState, BoundaryState]:
        return self.first, self.second

    def wronskian(self) -> complex:
        """W(first, second) of the stored states: exp(-2 log_scale) times the true value."""
        return wronskian(self.first, self.second)

    def wronskian_defect(self, expected: complex) -> float:
        """|W - expected| relative to the products entering W, in true scale."""
        shrink = math.exp(-2.0 * self.log_scale)
        size = max(self.first.magnitude() * self.second.magnitude(), shrink)
        return abs(self.wronskian() - expected * shrink) / size


def propagate_scaled(
    measure: AtomicMeasure, start: float, stop: float, z: complex, pair: ScaledPair
) -> ScaledPair:
    """
    Propagate two solutions together, leftwards when stop < start.

    The pair is divided by a common factor whenever it grows past
    RESCALE_THRESHOLD and the factor is added to `log_scale` as its logarithm.
    Ratios of Wronskians of the pair are unaffected by the rescaling.

    Raises:
        NumericalError: the pair is not finite
    """
    if start == stop:
        return pair
    z = complex(z)
    first, second, log_scale = pair.first, pair.second, pair.log_scale
    for matrix in flow_matrices(measure, start, stop, z):
        first = matrix @ first
        second = matrix @ second
        size = max(first.magnitude(), second.magnitude())
        if size > RESCALE_THRESHOLD:
            first = first.scaled(1.0 / size)
            second = second.scaled(1.0 / size)
            log_scale += math.log(size)
    _require_finite((first.u, first.du, second.u, second.du), f"solution pair at {stop}", z)
    if log_scale != pair.log_scale:
        logger.debug(f"Pair rescaled from {start:.6g} to {stop:.6g}: log scale {log_scale:.1f}")
    return ScaledPair(first, second, log_scale)


def propagate_pair(
    measure: AtomicMeasure,
    start: float,
    stop: float,
    z: complex,
    pair: Tuple[BoundaryState, BoundaryState],
) -> Tuple[BoundaryState, BoundaryState]:
    """`propagate_scaled` without the scale; for consumers of Wronskian ratios."""
    return propagate_scaled(measure, start, stop, z, ScaledPair(*pair)).states()


def fundamental_pair(measure: AtomicMeasure, t: float, b: float, z: complex) -> ScaledPair:
    """Data at b of the solutions with Neumann (1, 0) and Dirichlet (0, 1) data at t."""
    return propagate_scaled(measure, t, b, z, ScaledPair.fundamental())
