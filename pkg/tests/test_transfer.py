"""
Test Transfer Matrices

Checks the solution flow against closed forms, an independent ODE
integration, and the structural identities det T = 1 and constancy of the
Wronskian.
"""

import cmath
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from src.config import RESCALE_THRESHOLD
from src.errors import NumericalError, ParameterError
from src.geometry import build_measure, validate_geometry
from src.measure import AtomicMeasure, jump_factor
from src.transfer import (
    BoundaryState,
    ScaledPair,
    TransferMatrix,
    free_propagator,
    fundamental_pair,
    propagate,
    propagate_pair,
    propagate_scaled,
    scaled_transfer_matrix,
    transfer_matrix,
    vertex_jump,
    wronskian,
)


def random_measure(seed: int, count: int) -> AtomicMeasure:
    rng = np.random.default_rng(seed)
    positions = np.cumsum(rng.uniform(0.5, 1.5, size=count))
    weights = rng.uniform(1.5, 6.0, size=count)
    return AtomicMeasure.from_atoms(zip(positions.tolist(), weights.tolist()))


def states_close(a: BoundaryState, b: BoundaryState, rel: float = 1e-9) -> bool:
    scale = max(a.magnitude(), b.magnitude(), 1.0)
    return abs(a.u - b.u) <= rel * scale and abs(a.du - b.du) <= rel * scale


class TestFreePropagator:
    """Free flow across atom-free intervals."""

    def test_zero_energy_is_shear(self):
        matrix = free_propagator(0.0, 2.0)
        assert matrix.a11 == pytest.approx(1.0)
        assert matrix.a12 == pytest.approx(2.0)
        assert matrix.a21 == pytest.approx(0.0)
        assert matrix.a22 == pytest.approx(1.0)

    def test_half_period(self):
        matrix = free_propagator(math.pi ** 2, 1.0)
        np.testing.assert_allclose(matrix.as_array(), [[-1, 0], [0, -1]], atol=1e-12)

    def test_closed_form(self):
        z, length = 2.0 + 3.0j, 0.7
        k = cmath.sqrt(z)
        matrix = free_propagator(z, length)
        assert matrix.a11 == pytest.approx(cmath.cos(k * length), rel=1e-13)
        assert matrix.a12 == pytest.approx(cmath.sin(k * length) / k, rel=1e-13)
        assert matrix.a21 == pytest.approx(-k * cmath.sin(k * length), rel=1e-13)

    def test_unit_determinant(self):
        for z in (2.0 + 3.0j, -5.0 + 0.1j, 1e-9 + 1e-9j, 400.0 + 1.0j):
            assert abs(free_propagator(z, 0.7).det() - 1) < 1e-12

    def test_entire_near_zero(self):
        # the series branch and the closed form agree across the threshold
        for z in (1e-8, 1e-8j, -1e-8 + 1e-8j):
            series = free_propagator(z, 1.0)
            assert series.a11 == pytest.approx(1 - z / 2, abs=1e-15)
            assert series.a12 == pytest.approx(1 - z / 6, abs=1e-15)
        below = free_propagator(0.99e-4, 1.0)
        above = free_propagator(1.01e-4, 1.0)
        assert abs(below.a12 - above.a12) < 1e-5

    def test_nonpositive_length_rejected(self):
        with pytest.raises(ParameterError):
            free_propagator(1.0, 0.0)


class TestVertexJump:
    """Jump conditions at vertices."""

    def test_diagonal(self):
        matrix = vertex_jump(4.0)
        assert matrix.as_array().tolist() == [[2.0, 0.0], [0.0, 0.5]]

    def test_applied_to_state(self):
        state = vertex_jump(2.0) @ BoundaryState(1.0, 1.0)
        assert state.u == pytest.approx(math.sqrt(2))
        assert state.du == pytest.approx(1 / math.sqrt(2))

    def test_weight_encodes_jump(self):
        assert jump_factor(3.0) == pytest.approx(2.0)
        assert jump_factor(-3.0) == pytest.approx(0.5)

    def test_branching_one_rejected(self):
        with pytest.raises(ParameterError):
            vertex_jump(1.0)


class TestPropagation:
    """Flow through measure windows."""

    def setup_method(self):
        self.measure = random_measure(seed=1, count=5)
        self.z = 3.0 + 0.0j

    def test_atom_free_interval(self):
        measure = AtomicMeasure.from_atoms([(10.0, 3.0)])
        state = BoundaryState(0.3 + 0.1j, -1.2)
        expected = free_propagator(self.z, 1.5) @ state
        assert states_close(propagate(measure, 2.0, 3.5, self.z, state), expected, rel=1e-14)

    def test_single_atom_composition(self):
        measure = AtomicMeasure.from_atoms([(1.0, 3.0)])
        z = 1.0 + 0.5j
        expected = free_propagator(z, 1.0) @ (vertex_jump(4.0) @ free_propagator(z, 0.5))
        actual = transfer_matrix(measure, 0.5, 2.0, z)
        np.testing.assert_allclose(actual.as_array(), expected.as_array(), rtol=1e-13)

    def test_unit_determinant(self):
        matrix = transfer_matrix(random_measure(seed=2, count=100), 0.1, 80.0, 1.0 + 0.01j)
        scale = max(abs(matrix.a11 * matrix.a22), abs(matrix.a12 * matrix.a21), 1.0)
        assert abs(matrix.det() - 1) < 1e-9 * scale

    def test_flow_property(self):
        z = 2.0 + 0.3j
        a, b, c = 0.2, 2.05, 4.4
        direct = transfer_matrix(self.measure, a, c, z)
        split = transfer_matrix(self.measure, b, c, z) @ transfer_matrix(self.measure, a, b, z)
        np.testing.assert_allclose(direct.as_array(), split.as_array(), rtol=1e-12, atol=1e-12)

    def test_matches_ode_integration(self):
        positions = self.measure.positions.tolist()
        weights = self.measure.weights.tolist()
        z = self.z.real
        state = np.array([0.7, -0.4])
        cursor = 0.0
        for position, weight in zip(positions, weights):
            solution = solve_ivp(
                lambda x, y: [y[1], -z * y[0]], (cursor, position), state, rtol=1e-11, atol=1e-13
            )
            root = jump_factor(weight)
            state = np.array([solution.y[0, -1] * root, solution.y[1, -1] / root])
            cursor = position
        end = positions[-1] + 0.3
        solution = solve_ivp(lambda x, y: [y[1], -z * y[0]], (cursor, end), state, rtol=1e-11, atol=1e-13)

        result = propagate(self.measure, 0.0, end, self.z, BoundaryState(0.7, -0.4))
        assert result.u.real == pytest.approx(solution.y[0, -1], rel=1e-6, abs=1e-8)
        assert result.du.real == pytest.approx(solution.y[1, -1], rel=1e-6, abs=1e-8)

    def test_endpoint_on_atom_rejected(self):
        with pytest.raises(ParameterError):
            propagate(self.measure, 0.0, float(self.measure.positions[1]), self.z, BoundaryState.neumann())

    def test_entire_in_z(self):
        measure = random_measure(seed=3, count=4)
        stop = float(measure.positions[-1]) + 0.25
        at_zero = transfer_matrix(measure, 0.0, stop, 0.0)
        for z in (1e-10, 1e-10j):
            nearby = transfer_matrix(measure, 0.0, stop, z)
            np.testing.assert_allclose(nearby.as_array(), at_zero.as_array(), atol=1e-5)


class TestFundamentalPair:
    """Neumann/Dirichlet solutions and their Wronskian."""

    def test_free_zero_energy(self):
        u_n, u_d = fundamental_pair(AtomicMeasure.free(), 0.0, 2.5, 0.0).states()
        assert (u_n.u, u_n.du) == pytest.approx((1.0, 0.0))
        assert (u_d.u, u_d.du) == pytest.approx((2.5, 1.0))

    def test_free_half_period(self):
        u_n, u_d = fundamental_pair(AtomicMeasure.free(), 0.0, 1.0, math.pi ** 2).states()
        assert abs(u_n.u + 1) < 1e-12 and abs(u_n.du) < 1e-12
        assert abs(u_d.u) < 1e-12 and abs(u_d.du + 1) < 1e-12

    def test_wronskian_convention(self):
        neumann, dirichlet = BoundaryState.neumann(), BoundaryState.dirichlet()
        assert wronskian(neumann, dirichlet) == -1
        assert wronskian(dirichlet, neumann) == 1
        assert wronskian(neumann, neumann) == 0

    def test_wronskian_conserved(self):
        measure = random_measure(seed=4, count=100)
        for z in (0.5 + 0.0j, 2.0 + 1.0j, 30.0 + 0.01j):
            pair = fundamental_pair(measure, 0.1, float(measure.positions[-1]) + 0.2, z)
            assert pair.wronskian_defect(-1.0) < 1e-10

    def test_propagate_pair_matches_propagate(self):
        measure = random_measure(seed=5, count=10)
        z = 1.0 + 0.2j
        stop = float(measure.positions[-1]) + 0.1
        pair = propagate_pair(measure, 0.1, stop, z, (BoundaryState.neumann(), BoundaryState.dirichlet()))
        expected = [propagate(measure, 0.1, stop, z, s) for s in (BoundaryState.neumann(), BoundaryState.dirichlet())]
        assert states_close(pair[0], expected[0]) and states_close(pair[1], expected[1])

    def test_leftward_propagation_inverts(self):
        measure = random_measure(seed=6, count=8)
        z = 2.0 + 0.5j
        start, stop = 0.1, float(measure.positions[-1]) + 0.1
        initial = (BoundaryState(1.0, 0.3j), BoundaryState(-0.2, 1.0))
        forward = propagate_pair(measure, start, stop, z, initial)
        back = propagate_pair(measure, stop, start, z, forward)
        assert states_close(back[0], initial[0], rel=1e-8) and states_close(back[1], initial[1], rel=1e-8)

    def test_rescaling_keeps_pair_finite(self):
        free = AtomicMeasure.free()
        first, second = propagate_pair(
            free, 0.0, 1000.0, 10.0j, (BoundaryState.neumann(), BoundaryState.dirichlet())
        )
        for state in (first, second):
            assert math.isfinite(abs(state.u)) and math.isfinite(abs(state.du))
            assert state.magnitude() <= RESCALE_THRESHOLD * 1e30

    def test_log_scale_tracks_growth(self):
        z = 10.0j
        pair = propagate_scaled(AtomicMeasure.free(), 0.0, 1000.0, z, ScaledPair.fundamental())
        growth = 1000.0 * cmath.sqrt(z).imag
        assert pair.log_scale > 0
        assert pair.log_scale + math.log(pair.first.magnitude()) == pytest.approx(growth, abs=1.0)
        assert pair.wronskian_defect(-1.0) < 1e-10

    def test_identity_matrix(self):
        state = BoundaryState(0.5, 2.0)
        assert TransferMatrix.identity() @ state == state


def det_defect(matrix: TransferMatrix, log_scale: float) -> float:
    """|det - 1| of exp(log_scale) * matrix relative to the products entering det."""
    shrink = math.exp(-2.0 * log_scale)
    size = max(abs(matrix.a11 * matrix.a22), abs(matrix.a12 * matrix.a21), shrink)
    return abs(matrix.det() - shrink) / size


class TestLongWindows:
    """Propagation across windows of ten thousand atoms."""

    COUNT = 10_000

    def setup_method(self):
        self.random = random_measure(seed=4, count=self.COUNT)
        self.fibonacci = build_measure(
            validate_geometry(
                {
                    "kind": "substitution",
                    "symbols": {"A": [1.0, 2], "B": [2.0, 2]},
                    "rules": {"A": "AB", "B": "A"},
                }
            ),
            count=self.COUNT,
        )
        self.equilateral = build_measure(validate_geometry({"edges": [[1.0, 4]]}), count=self.COUNT)

    def windows(self):
        yield self.random, 0.1, float(self.random.positions[-1]) + 0.2, (0.5, 3.0, 2.0 + 0.01j, 2.0 + 1.0j)
        yield self.fibonacci, 0.5, float(self.fibonacci.positions[-1]) + 0.5, (2.0, 2.0 + 0.01j, 1.0 + 0.5j)
        yield self.equilateral, 0.5, float(self.equilateral.positions[-1]) + 0.5, (2.0 + 0.01j, 8.0 + 0.1j)

    def test_window_sizes(self):
        for measure, start, stop, _ in self.windows():
            i, j = measure.atoms_between(start, stop)
            assert j - i >= self.COUNT

    @pytest.mark.slow
    def test_wronskian_conserved(self):
        for measure, start, stop, grid in self.windows():
            for z in grid:
                pair = fundamental_pair(measure, start, stop, z)
                for state in pair.states():
                    assert cmath.isfinite(state.u) and cmath.isfinite(state.du)
                assert pair.wronskian_defect(-1.0) < 1e-10

    @pytest.mark.slow
    def test_scaled_determinant(self):
        for measure, start, stop, grid in self.windows():
            for z in grid:
                matrix, log_scale = scaled_transfer_matrix(measure, start, stop, z)
                assert all(cmath.isfinite(a) for a in matrix.entries())
                assert det_defect(matrix, log_scale) < 1e-10

    def test_random_window_needs_rescaling(self):
        pair = fundamental_pair(self.random, 0.1, float(self.random.positions[-1]) + 0.2, 0.5)
        assert pair.log_scale > 100.0

    def test_unscaled_overflow_raises(self):
        stop = float(self.random.positions[-1]) + 0.2
        with pytest.raises(NumericalError) as error:
            transfer_matrix(self.random, 0.1, stop, 0.5)
        assert error.value.exit_status == 3
        with pytest.raises(NumericalError):
            propagate(self.random, 0.1, stop, 0.5, BoundaryState.neumann())

    def test_scaled_matches_plain_on_short_window(self):
        z = 1.0 + 0.2j
        plain = transfer_matrix(self.random, 0.1, 60.0, z)
        scaled, log_scale = scaled_transfer_matrix(self.random, 0.1, 60.0, z)
        rebuilt = scaled.scaled(math.exp(log_scale))
        np.testing.assert_allclose(rebuilt.as_array(), plain.as_array(), rtol=1e-12)
