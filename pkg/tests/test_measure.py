"""
Test Atomic Measures

Unit tests for the measure encoding, local norm and measure operations.
"""

import math

import numpy as np
import pytest

from src.errors import InternalInvariantError, ParameterError
from src.measure import (
    AtomicMeasure,
    TailDescriptor,
    branching_from_weight,
    check_loc_bound,
    is_halfline_class,
    loc_bound_estimate,
    norm_loc,
    periodic_line,
    reflect,
    restrict,
    shift,
    weight_from_branching,
)


class TestWeights:
    """Branching number <-> atom weight conversion."""

    def test_known_values(self):
        assert weight_from_branching(4) == pytest.approx(3.0)
        assert weight_from_branching(9) == pytest.approx(2.0)
        assert weight_from_branching(2) == pytest.approx(3 + 2 * math.sqrt(2))

    def test_round_trip(self):
        for b in (1.01, 2, 3, 7.5, 1000):
            assert branching_from_weight(weight_from_branching(b)) == pytest.approx(b, rel=1e-12)

    def test_weight_exceeds_one(self):
        for b in (1.0001, 2, 50):
            assert weight_from_branching(b) > 1

    def test_branching_one_rejected(self):
        with pytest.raises(ParameterError):
            weight_from_branching(1.0)
        with pytest.raises(ValueError):
            branching_from_weight(0.5)


class TestAtomicMeasure:
    """Construction and validation of measure windows."""

    def test_from_atoms_defaults(self):
        measure = AtomicMeasure.from_atoms([(3.0, 2.0), (1.0, 3.0)])
        assert measure.atoms == ((1.0, 3.0), (3.0, 2.0))
        assert measure.separation == pytest.approx(2.0)
        assert measure.extent == pytest.approx(5.0)
        assert measure.start == pytest.approx(-1.0)
        assert measure.is_tree_measure

    def test_positions_read_only(self):
        measure = AtomicMeasure.from_atoms([(1.0, 3.0), (2.0, 3.0)])
        with pytest.raises(ValueError):
            measure.positions[0] = 5.0

    def test_gap_below_separation_rejected(self):
        with pytest.raises(ParameterError):
            AtomicMeasure.from_atoms([(1.0, 3.0), (1.5, 3.0)], separation=1.0)

    def test_small_weight_rejected(self):
        with pytest.raises(ParameterError):
            AtomicMeasure.from_atoms([(1.0, 1.0)])

    def test_loc_bound_below_norm_rejected(self):
        with pytest.raises(ParameterError):
            AtomicMeasure.from_atoms([(1.0, 3.0), (1.5, 3.0)], loc_bound=4.0)

    def test_free_measure(self):
        free = AtomicMeasure.free()
        assert len(free) == 0
        assert free.tail.is_free
        assert math.isinf(free.extent)
        assert norm_loc(free) == 0.0

    def test_is_atom(self):
        measure = AtomicMeasure.from_atoms([(1.0, 3.0), (2.5, 3.0)])
        assert measure.is_atom(2.5)
        assert measure.is_atom(2.5 + 1e-14)
        assert not measure.is_atom(2.0)

    def test_atoms_between_is_open(self):
        measure = AtomicMeasure.from_atoms([(1.0, 3.0), (2.0, 3.0), (3.0, 3.0)])
        assert measure.atoms_between(1.0, 3.0) == (1, 2)
        assert measure.atoms_between(0.5, 3.5) == (0, 3)

    def test_branchings(self):
        measure = AtomicMeasure.from_atoms([(1.0, 3.0), (2.0, 2.0)])
        np.testing.assert_allclose(measure.branchings(), [4.0, 9.0])


class TestLocalNorm:
    """sup_x |mu|([x, x + 1])."""

    def test_equilateral(self):
        measure = AtomicMeasure.from_atoms([(float(n), 3.0) for n in range(1, 11)])
        assert norm_loc(measure) == pytest.approx(6.0)

    def test_single_atom(self):
        assert norm_loc(AtomicMeasure.from_atoms([(0.5, 5.0)])) == pytest.approx(5.0)

    def test_sparse_atoms_give_max_weight(self):
        measure = AtomicMeasure.from_atoms([(0.0, 2.0), (1.5, 7.0), (3.0, 4.0)])
        assert norm_loc(measure) == pytest.approx(7.0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        gaps = rng.uniform(0.3, 1.2, size=40)
        positions = np.cumsum(gaps)
        weights = rng.uniform(1.5, 4.0, size=40)
        measure = AtomicMeasure.from_atoms(zip(positions.tolist(), weights.tolist()))

        brute = 0.0
        for anchor in positions:
            for x in (anchor - 1.0, anchor):
                mask = (positions >= x - 1e-12) & (positions <= x + 1.0 + 1e-12)
                brute = max(brute, float(weights[mask].sum()))
        assert norm_loc(measure) == pytest.approx(brute, rel=1e-12)

    def test_estimate_dominates(self):
        measure = AtomicMeasure.from_atoms([(0.4 * n, 2.5) for n in range(1, 30)])
        assert loc_bound_estimate(measure) >= norm_loc(measure)
        check_loc_bound(measure)

    def test_check_loc_bound_raises_when_violated(self):
        # separation recorded larger than the actual gaps makes the estimate too small
        measure = AtomicMeasure.from_atoms([(0.0, 3.0), (0.5, 3.0), (1.0, 3.0)])
        broken = AtomicMeasure(
            positions=measure.positions,
            weights=measure.weights,
            separation=0.5,
            loc_bound=100.0,
            extent=measure.extent,
            start=measure.start,
        )
        check_loc_bound(broken)
        object.__setattr__(broken, "separation", 2.0)
        with pytest.raises(InternalInvariantError):
            check_loc_bound(broken)


class TestMeasureOperations:
    """Shift, restriction and reflection."""

    def setup_method(self):
        self.measure = AtomicMeasure.from_atoms(
            [(1.0, 3.0), (2.3, 2.0), (3.1, 5.0)],
            tail=TailDescriptor(3.5),
            left_tail=TailDescriptor(0.5),
        )

    def test_shift_single_atom(self):
        shifted = shift(AtomicMeasure.from_atoms([(1.0, 3.0)]), 1.0)
        assert shifted.atoms == ((0.0, 3.0),)
        assert shifted.extent == pytest.approx(1.0)

    def test_shift_zero_is_identity(self):
        assert shift(self.measure, 0.0) is self.measure

    def test_shift_composes(self):
        twice = shift(shift(self.measure, 0.7), 1.1)
        once = shift(self.measure, 1.8)
        assert twice.same_atoms(once, tol=1e-12)
        assert twice.tail.anchor == pytest.approx(once.tail.anchor)
        assert twice.left_tail.anchor == pytest.approx(once.left_tail.anchor)

    def test_restrict_open_lower_drops_boundary_atom(self):
        restricted = restrict(self.measure, lower=1.0)
        assert restricted.positions.tolist() == [2.3, 3.1]
        assert restricted.left_tail.is_free
        assert restricted.left_tail.anchor == pytest.approx(1.0)
        assert restricted.tail == self.measure.tail

    def test_restrict_closed_lower_keeps_boundary_atom(self):
        restricted = restrict(self.measure, lower=1.0, closed_lower=True)
        assert restricted.positions.tolist() == [1.0, 2.3, 3.1]

    def test_restrict_upper_makes_free_tail(self):
        restricted = restrict(self.measure, upper=3.0)
        assert restricted.positions.tolist() == [1.0, 2.3]
        assert restricted.tail.is_free
        assert math.isinf(restricted.extent)

    def test_restrict_rejects_reversed_interval(self):
        with pytest.raises(ParameterError):
            restrict(self.measure, lower=2.0, upper=1.0)

    def test_reflect(self):
        mirrored = reflect(self.measure)
        assert mirrored.positions.tolist() == [-3.1, -2.3, -1.0]
        assert mirrored.weights.tolist() == [-5.0, -2.0, -3.0]
        assert mirrored.tail.anchor == pytest.approx(-0.5)
        assert mirrored.left_tail.anchor == pytest.approx(-3.5)
        assert not mirrored.is_tree_measure

    def test_reflect_is_involution(self):
        back = reflect(reflect(self.measure))
        assert back.same_atoms(self.measure)
        assert back.extent == pytest.approx(self.measure.extent)
        assert back.tail == self.measure.tail

    def test_halfline_class(self):
        assert is_halfline_class(self.measure, gamma=0.8)
        assert not is_halfline_class(shift(self.measure, 0.5), gamma=0.8)


class TestPeriodicLine:
    """Two-sided periodic measures."""

    def test_layout(self):
        line = periodic_line([(1.0, 4.0)], cells=3)
        assert len(line) == 6
        assert line.positions.tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
        assert np.allclose(line.weights, 3.0)
        assert line.tail == TailDescriptor(0.5, 1.0)
        assert line.left_tail == TailDescriptor(0.5, 1.0)

    def test_two_gap_period(self):
        line = periodic_line([(1.0, 4.0), (2.0, 9.0)], cells=2)
        assert line.positions[:2].tolist() == [-5.0, -3.0]
        assert line.weights[:2].tolist() == pytest.approx([3.0, 2.0])
        assert line.tail.period_length == pytest.approx(3.0)

    def test_rejects_single_cell(self):
        with pytest.raises(ParameterError):
            periodic_line([(1.0, 4.0)], cells=1)
