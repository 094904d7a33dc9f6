import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ips.errors import CapacityError, DomainError, EmptyMapError, ShapeError
from ips.fingerprint import (
    RadioMap, build_radio_map, fill_missing, fingerprint_distance, rss_from_power
)
from schemas.positioning_schema import Fingerprint, Position

TABLE_ORIGIN = (-46.0, -41.0, -55.0, -68.0, -67.0)

rss_values = st.floats(min_value=-120.0, max_value=0.0, allow_nan=False)
powers = st.floats(min_value=1e-12, max_value=1e6)


def fp(x, y, *rss):
    return Fingerprint(position=Position(x=x, y=y), rss=rss)


class TestRssFromPower:
    def test_one_milliwatt_is_zero_dbm(self):
        assert rss_from_power(1.0) == 0.0

    def test_microwatt(self):
        assert rss_from_power(0.001) == pytest.approx(-30.0, abs=1e-12)

    def test_two_milliwatts(self):
        assert rss_from_power(2.0) == pytest.approx(3.0103, abs=1e-4)

    @pytest.mark.parametrize("power", [0.0, -1.0, float("nan"), float("inf")])
    def test_invalid_power(self, power):
        with pytest.raises(DomainError):
            rss_from_power(power)

    @given(powers, st.floats(min_value=1e-6, max_value=1e3))
    def test_strictly_increasing(self, power, factor):
        assert rss_from_power(power * (1.0 + factor)) > rss_from_power(power)

    @given(powers)
    def test_ten_times_the_power_is_ten_db(self, power):
        assert rss_from_power(10.0 * power) - rss_from_power(power) == pytest.approx(10.0, abs=1e-9)


class TestFingerprintDistance:
    def test_identical_vectors(self):
        assert fingerprint_distance(TABLE_ORIGIN, TABLE_ORIGIN) == 0.0

    def test_single_component_difference(self):
        query = (-46.0, -41.0, -55.0, -68.0, -66.0)
        assert fingerprint_distance(query, TABLE_ORIGIN) == pytest.approx(math.sqrt(0.2), abs=1e-9)

    def test_three_four_five(self):
        assert fingerprint_distance((0.0, 0.0), (-3.0, -4.0)) == pytest.approx(math.sqrt(12.5), abs=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            fingerprint_distance((-40.0, -50.0), (-40.0,))

    def test_empty(self):
        with pytest.raises(ShapeError):
            fingerprint_distance((), ())

    @given(st.lists(rss_values, min_size=1, max_size=8).flatmap(
        lambda q: st.tuples(st.just(q), st.lists(rss_values, min_size=len(q), max_size=len(q)))
    ))
    def test_symmetric_and_nonnegative(self, pair):
        q, r = pair
        d = fingerprint_distance(q, r)
        assert d >= 0.0
        assert d == pytest.approx(fingerprint_distance(r, q), abs=1e-12)

    @given(st.integers(1, 8).flatmap(
        lambda n: st.tuples(*[st.lists(rss_values, min_size=n, max_size=n) for _ in range(3)])
    ))
    def test_triangle_inequality(self, vectors):
        a, b, c = vectors
        assert fingerprint_distance(a, c) <= fingerprint_distance(a, b) + fingerprint_distance(b, c) + 1e-9


class TestFillMissing:
    def test_substitutes_floor(self):
        assert fill_missing([-50.0, None, float("nan")], 3) == (-50.0, -120.0, -120.0)

    def test_width_mismatch(self):
        with pytest.raises(ShapeError):
            fill_missing([-50.0], 2)


class TestBuildRadioMap:
    def test_averages_duplicates(self, field_map):
        averaged = field_map.fingerprint_at(Position(x=1.0, y=0.0))
        assert averaged == pytest.approx((-54.5, -52.5, -63.0, -59.0, -69.0), abs=1e-12)

    def test_identical_duplicates(self, field_map):
        assert field_map.fingerprint_at(Position(x=2.0, y=1.0)) == (-37.0, -42.0, -42.0, -65.0, -82.0)

    def test_single_sample_unchanged(self):
        radio_map = build_radio_map([fp(0.0, 0.0, *TABLE_ORIGIN)], 5)
        assert len(radio_map) == 1
        assert radio_map.fingerprint_at(Position(x=0.0, y=0.0)) == TABLE_ORIGIN

    def test_field_fixture_positions(self, field_map):
        assert len(field_map) == 9
        assert field_map.ap_count == 5
        assert Position(x=0.0, y=3.0) in field_map

    def test_points_sorted_lexicographically(self, field_map):
        keys = [p.position.sort_key() for p in field_map.points]
        assert keys == sorted(keys)

    def test_empty_input(self):
        with pytest.raises(EmptyMapError):
            build_radio_map([], 5)

    def test_width_mismatch(self):
        with pytest.raises(ShapeError):
            build_radio_map([fp(0.0, 0.0, -40.0, -50.0)], 3)

    def test_map_is_read_only(self, field_map):
        with pytest.raises(ValueError):
            field_map.rss_matrix[0, 0] = 0.0

    def test_bounding_box(self, field_map):
        low, high = field_map.bounding_box()
        assert (low.x, low.y, high.x, high.y) == (0.0, 0.0, 4.0, 3.0)

    def test_average_independent_of_sample_order(self, field_records):
        samples = [r.to_fingerprint() for r in field_records]
        forward = build_radio_map(samples, 5)
        backward = build_radio_map(list(reversed(samples)), 5)
        np.testing.assert_array_equal(forward.rss_matrix, backward.rss_matrix)
        np.testing.assert_array_equal(forward.positions, backward.positions)


class TestRadioMapFromArrays:
    def test_matches_build_radio_map(self, field_map):
        rebuilt = RadioMap.from_arrays(field_map.positions, field_map.rss_matrix)
        np.testing.assert_array_equal(rebuilt.positions, field_map.positions)
        np.testing.assert_array_equal(rebuilt.rss_matrix, field_map.rss_matrix)
        assert rebuilt.ap_count == 5

    def test_rows_are_sorted(self):
        radio_map = RadioMap.from_arrays([[2.0, 0.0], [0.0, 1.0]], [[-40.0], [-50.0]])
        assert radio_map.fingerprint_at(Position(x=0.0, y=1.0)) == (-50.0,)
        assert [p.position for p in radio_map.points] == [Position(x=0.0, y=1.0), Position(x=2.0, y=0.0)]

    def test_values_are_clamped(self):
        radio_map = RadioMap.from_arrays([[0.0, 0.0]], [[-150.0, 3.0]])
        assert radio_map.fingerprint_at(Position(x=0.0, y=0.0)) == (-120.0, 0.0)

    def test_repeated_positions(self):
        with pytest.raises(ShapeError):
            RadioMap.from_arrays([[1.0, 1.0], [1.0, 1.0]], [[-40.0], [-50.0]])

    @pytest.mark.parametrize("positions, rss", [
        ([[0.0, 0.0]], [[-40.0], [-50.0]]),
        ([[0.0, 0.0, 0.0]], [[-40.0]]),
        ([[0.0, 0.0]], [-40.0]),
        ([[0.0, float("nan")]], [[-40.0]]),
    ])
    def test_bad_shapes(self, positions, rss):
        with pytest.raises(ShapeError):
            RadioMap.from_arrays(positions, rss)

    def test_no_rows(self):
        with pytest.raises(EmptyMapError):
            RadioMap.from_arrays(np.empty((0, 2)), np.empty((0, 3)))


class TestNearestNeighbors:
    def test_exact_match(self, field_map):
        neighbors = field_map.nearest_neighbors(TABLE_ORIGIN, 1)
        assert neighbors[0].position == Position(x=0.0, y=0.0)
        assert neighbors[0].distance == 0.0

    def test_k_equals_map_size(self, field_map):
        neighbors = field_map.nearest_neighbors(TABLE_ORIGIN, len(field_map))
        distances = [n.distance for n in neighbors]
        assert len(neighbors) == len(field_map)
        assert distances == sorted(distances)

    def test_picks_smallest_distances(self):
        radio_map = build_radio_map([fp(0.0, 0.0, -15.0), fp(1.0, 0.0, -11.0), fp(2.0, 0.0, -13.0)], 1)
        neighbors = radio_map.nearest_neighbors((-10.0,), 2)
        assert [n.position for n in neighbors] == [Position(x=1.0, y=0.0), Position(x=2.0, y=0.0)]
        assert [n.distance for n in neighbors] == [1.0, 3.0]

    def test_tie_goes_to_smaller_position(self):
        radio_map = build_radio_map([fp(1.0, 0.0, -10.0), fp(0.0, 1.0, -20.0)], 1)
        assert radio_map.nearest_neighbors((-15.0,), 1)[0].position == Position(x=0.0, y=1.0)

    def test_k_too_large(self, field_map):
        with pytest.raises(CapacityError):
            field_map.nearest_neighbors(TABLE_ORIGIN, len(field_map) + 1)

    def test_query_width_mismatch(self, field_map):
        with pytest.raises(ShapeError):
            field_map.nearest_neighbors((-40.0, -50.0), 1)

    def test_empty_map(self):
        radio_map = RadioMap(np.empty((0, 2)), np.empty((0, 2)), 2, 1.0)
        with pytest.raises(EmptyMapError):
            radio_map.nearest_neighbors((-40.0, -50.0), 1)

    @settings(max_examples=50)
    @given(
        st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), rss_values), min_size=2, max_size=12),
        rss_values,
        st.randoms(use_true_random=False),
    )
    def test_insertion_order_never_matters(self, rows, query, random):
        samples = [fp(float(x), float(y), v) for x, y, v in rows]
        shuffled = list(samples)
        random.shuffle(shuffled)
        a = build_radio_map(samples, 1)
        b = build_radio_map(shuffled, 1)
        k = len(a)
        assert a.nearest_neighbors((query,), k) == b.nearest_neighbors((query,), k)
