import math

import numpy as np
import pytest

from memory.detector import (
    GEOMETRY_PRESETS,
    DetectorGeometry,
    FieldConfig,
    Hit,
    ParticleState,
    arc_step,
    build_signal_library,
    digitize,
    geometry_preset,
    propagate,
    regenerate_signal,
)
from memory.errors import GeometryError, LibraryError


def rk4_crossings(state, field, planes, step=1e-4):
    """Integrate dr/ds = t, dt/ds = 0.3 q / p (t x B) and record plane crossings."""
    B = np.array([field.B, 0.0, 0.0]) if field.axis == "x" else np.array([0.0, field.B, 0.0])
    k = 0.3 * state.charge / state.p
    r = np.array(state.origin, dtype=float)
    t = np.array(state.momentum, dtype=float) / state.p

    def deriv(y):
        return np.concatenate([y[3:], k * np.cross(y[3:], B)])

    y = np.concatenate([r, t])
    crossings = []
    remaining = list(planes)
    while remaining:
        k1 = deriv(y)
        k2 = deriv(y + step / 2 * k1)
        k3 = deriv(y + step / 2 * k2)
        k4 = deriv(y + step * k3)
        nxt = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if nxt[2] >= remaining[0]:
            frac = (remaining[0] - y[2]) / (nxt[2] - y[2])
            crossings.append(y[:3] + frac * (nxt[:3] - y[:3]))
            remaining.pop(0)
        y = nxt
        if y[2] < -1.0:
            break
    return crossings


WIDE = DetectorGeometry(rows=2, cols=4, width=2.0, height=2.0)


class TestPresets:
    def test_segment_counts(self):
        assert {name: geometry_preset(name).V for name in GEOMETRY_PRESETS} == {
            "v24": 24, "v30": 30, "v36": 36, "v42": 42, "v48": 48, "v54": 54,
        }

    def test_unknown_preset(self):
        with pytest.raises(GeometryError):
            geometry_preset("v25")

    def test_planes_must_increase(self):
        with pytest.raises(GeometryError):
            DetectorGeometry(rows=2, cols=4, plane_positions=(0.1, 0.3, 0.2))

    def test_dict_round_trip(self):
        g = geometry_preset("v36")
        assert DetectorGeometry.from_dict(g.to_dict()) == g

    def test_segment_index_layout(self):
        g = geometry_preset("v24")
        assert g.segment_index(1, 1, 2) == 8 + 4 + 2
        assert g.segment_coords(14) == (1, 1, 2)


class TestPropagation:
    @pytest.mark.parametrize("axis", ["x", "y"])
    @pytest.mark.parametrize("charge", [-1, 1])
    def test_matches_numerical_integration(self, axis, charge):
        state = ParticleState(charge, (0.02, 0.01, 0.1), (0.05, -0.02, 0.0))
        field = FieldConfig(B=0.5, axis=axis)
        hits = propagate(state, field, WIDE)
        expected = rk4_crossings(state, field, WIDE.plane_positions)
        assert len(hits) == 3
        for hit, point in zip(hits, expected):
            assert hit.x == pytest.approx(point[0], abs=1e-6)
            assert hit.y == pytest.approx(point[1], abs=1e-6)

    def test_zero_field_is_straight(self):
        state = ParticleState(1, (0.01, 0.02, 0.5), (0.0, 0.0, 0.0))
        hits = propagate(state, FieldConfig(B=0.0), WIDE)
        for hit, z in zip(hits, WIDE.plane_positions):
            assert hit.x == pytest.approx(z * 0.01 / 0.5)
            assert hit.y == pytest.approx(z * 0.02 / 0.5)

    def test_opposite_charges_bend_opposite_ways(self):
        state = ParticleState(1, (0.0, 0.0, 0.2), (0.0, 0.0, 0.0))
        plus = propagate(state, FieldConfig(B=0.5), WIDE)
        minus = propagate(state.conjugate(), FieldConfig(B=0.5), WIDE)
        assert plus[-1].x == pytest.approx(-minus[-1].x)
        assert plus[-1].x != 0.0

    def test_backward_particle_has_no_hits(self):
        state = ParticleState(1, (0.1, 0.0, -0.4), (0.0, 0.0, 0.0))
        assert propagate(state, FieldConfig(), WIDE) == ()

    def test_origin_must_be_upstream(self):
        state = ParticleState(1, (0.0, 0.0, 0.5), (0.0, 0.0, 0.15))
        with pytest.raises(GeometryError):
            propagate(state, FieldConfig(), WIDE)

    def test_looping_track_misses_planes(self):
        # radius 0.3 * 1 / 0.01 -> 3.3 cm, turns back before the first plane
        assert arc_step(0.0, 30.0, 0.1) is None
        state = ParticleState(1, (0.0, 0.0, 0.01), (0.0, 0.0, 0.0))
        assert propagate(state, FieldConfig(B=1.0), WIDE) == ()

    def test_leaving_the_plane_drops_the_hit(self):
        g = geometry_preset("v24")
        state = ParticleState(1, (0.3, 0.0, 0.4), (0.1, 0.0, 0.0))
        hits = propagate(state, FieldConfig(B=0.0), g)
        assert [h.plane for h in hits] == [0]


class TestDigitize:
    def test_boundary_goes_to_lower_segment(self):
        g = geometry_preset("v24")
        pattern = digitize([Hit(0, 0.0, 0.0)], g)
        assert pattern.popcount == 1
        assert pattern.bits[g.segment_index(0, 0, 1)] == 1

    def test_plane_edges(self):
        g = geometry_preset("v24")
        pattern = digitize([Hit(1, -0.2, -0.1), Hit(2, 0.2, 0.1)], g)
        assert pattern.bits[g.segment_index(1, 0, 0)] == 1
        assert pattern.bits[g.segment_index(2, 1, 3)] == 1

    def test_outside_hits_are_counted(self):
        g = geometry_preset("v24")
        pattern, skipped = digitize([Hit(0, 0.5, 0.0), Hit(1, 0.01, 0.01)], g, return_skipped=True)
        assert skipped == 1
        assert pattern.popcount == 1


class TestSignalLibrary:
    def test_distinct_three_hit_patterns(self):
        g = geometry_preset("v24")
        library = build_signal_library(g, 4, np.random.default_rng(11))
        assert library.p_s == 4 and library.p_b == 0
        assert len(set(library.values())) == 4
        for value in library.values():
            assert value.popcount == 3
            planes = [g.segment_coords(i)[0] for i in np.flatnonzero(value.bits)]
            assert sorted(planes) == [0, 1, 2]

    def test_regenerated_probe_matches_stored_value(self):
        g = geometry_preset("v30")
        library = build_signal_library(g, 5, np.random.default_rng(12))
        for index in range(library.p):
            assert regenerate_signal(library, index, g) == library.patterns[index].value

    def test_same_seed_same_library(self):
        g = geometry_preset("v24")
        a = build_signal_library(g, 4, np.random.default_rng(13))
        b = build_signal_library(g, 4, np.random.default_rng(13))
        assert a == b

    def test_impossible_request_raises(self):
        g = DetectorGeometry(rows=1, cols=1)
        with pytest.raises(LibraryError):
            build_signal_library(g, 2, np.random.default_rng(14), max_tries=200)

    def test_meta_records_geometry(self):
        g = geometry_preset("v24")
        library = build_signal_library(g, 2, np.random.default_rng(15))
        assert DetectorGeometry.from_dict(library.meta["geometry"]) == g
        assert library.meta["field"] == {"B": 0.2, "axis": "y"}


def test_arc_step_small_curvature_limit():
    offset, arc = arc_step(0.1, 1e-9, 0.2)
    assert offset == pytest.approx(0.2 * math.tan(0.1), rel=1e-6)
    assert arc == pytest.approx(0.2 / math.cos(0.1), rel=1e-6)
