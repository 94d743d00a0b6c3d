from __future__ import annotations

import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ghostwatch.model import (
    AdsbReport,
    AircraftState,
    CoverageArea,
    GeoPoint,
    ReporterKind,
    destination_point,
    distance_to_border_nm,
    haversine_nm,
    initial_bearing_deg,
    interpolate_position,
    within_coverage,
)

from .oracles import brute_force_distance_to_border, cosine_law_nm, vector_destination

lats = st.floats(-89.0, 89.0)
lons = st.floats(-179.5, 180.0)
points = st.builds(GeoPoint, lats, lons)


def test_equator_degree_is_sixty_nm():
    assert haversine_nm(GeoPoint(0, 0), GeoPoint(0, 1)) == pytest.approx(60.0, abs=0.01)


def test_meridian_minute_is_one_nm():
    d = haversine_nm(GeoPoint(45, -73), GeoPoint(45 + 1 / 60, -73))
    assert d == pytest.approx(1.0, rel=1e-9)


@given(points, points)
def test_haversine_matches_cosine_law(a, b):
    assert haversine_nm(a, b) == pytest.approx(cosine_law_nm(a.lat, a.lon, b.lat, b.lon), abs=0.1)


@given(points, points)
def test_haversine_symmetric_and_bounded(a, b):
    d = haversine_nm(a, b)
    assert d == pytest.approx(haversine_nm(b, a), abs=1e-9)
    assert 0 <= d <= 180 * 60 + 1e-6


@given(points, points, points)
def test_triangle_inequality(a, b, c):
    assert haversine_nm(a, c) <= haversine_nm(a, b) + haversine_nm(b, c) + 1e-6


@given(st.floats(-80, 80), st.floats(-179, 179), st.floats(0, 360), st.floats(0, 500))
def test_destination_matches_vector_oracle(lat, lon, bearing, dist):
    p = destination_point(GeoPoint(lat, lon), bearing, dist)
    lat2, lon2 = vector_destination(lat, lon, bearing, dist)
    assert haversine_nm(p, GeoPoint(lat2, lon2 if lon2 > -180 else lon2 + 360)) < 1e-6


@given(st.floats(-80, 80), st.floats(-179, 179), st.floats(0, 360), st.floats(0.01, 500))
def test_destination_distance_and_bearing(lat, lon, bearing, dist):
    start = GeoPoint(lat, lon)
    end = destination_point(start, bearing, dist)
    assert haversine_nm(start, end) == pytest.approx(dist, abs=1e-6)
    if dist > 1:
        diff = (initial_bearing_deg(start, end) - bearing + 180) % 360 - 180
        assert abs(diff) < 1e-6


@given(points, points, st.floats(0.5, 400))
def test_border_distance_sign(p, c, r):
    area = CoverageArea("A", ReporterKind.ADSB, c, r)
    d = distance_to_border_nm(p, area)
    assert d == pytest.approx(brute_force_distance_to_border(p.lat, p.lon, c.lat, c.lon, r), abs=0.1)
    assert within_coverage(p, area) == (d >= 0)


def test_coverage_boundary_inclusive():
    c = GeoPoint(10, 10)
    edge = destination_point(c, 90, 50)
    area = CoverageArea("A", ReporterKind.PSR, c, haversine_nm(c, edge))
    assert within_coverage(edge, area)


def test_interpolation_endpoints_and_midpoint():
    a, b = GeoPoint(45, -74), GeoPoint(46, -73)
    samples = [(0, a), (10, b)]
    assert interpolate_position(samples, 0) == a
    assert interpolate_position(samples, 10) == b
    mid = interpolate_position(samples, 5)
    assert (mid.lat, mid.lon) == pytest.approx((45.5, -73.5))


@given(st.lists(st.tuples(st.integers(0, 1000), points), min_size=2, max_size=8, unique_by=lambda s: s[0]),
       st.floats(0, 1))
def test_interpolation_stays_in_bounding_box(raw, frac):
    samples = sorted(raw, key=lambda s: s[0])
    t0, t1 = samples[0][0], samples[-1][0]
    t = t0 + frac * (t1 - t0)
    p = interpolate_position(samples, t)
    lats_ = [s[1].lat for s in samples]
    lons_ = [s[1].lon for s in samples]
    assert min(lats_) - 1e-9 <= p.lat <= max(lats_) + 1e-9
    assert min(lons_) - 1e-9 <= p.lon <= max(lons_) + 1e-9


@pytest.mark.parametrize("samples,t", [
    ([(0, GeoPoint(0, 0))], 0),
    ([(0, GeoPoint(0, 0)), (0, GeoPoint(1, 1))], 0),
    ([(0, GeoPoint(0, 0)), (10, GeoPoint(1, 1))], 11),
])
def test_interpolation_rejects_bad_input(samples, t):
    with pytest.raises(ValueError):
        interpolate_position(samples, t)


@pytest.mark.parametrize("lat,lon", [(91, 0), (-90.5, 0), (0, -180), (0, 180.1), (math.nan, 0)])
def test_geopoint_bounds(lat, lon):
    with pytest.raises(ValueError):
        GeoPoint(lat, lon)


def test_coverage_area_validation():
    with pytest.raises(ValueError):
        CoverageArea("A", ReporterKind.ADSB, GeoPoint(0, 0), 0)


def test_aircraft_state_rejects_negative_speed():
    with pytest.raises(ValueError):
        AircraftState("X1", "E1", GeoPoint(0, 0), 1000, -1, 0)


def test_adsb_report_exposes_reporter_id():
    r = AdsbReport("R0000001", 5, "ADSB-1", GeoPoint(1, 1), 1000.0, "X1", "E1", 200.0)
    assert r.reporter_id == "ADSB-1"
    assert r.kind is ReporterKind.ADSB


@settings(max_examples=50)
@given(points, st.floats(0, 360))
def test_zero_distance_destination_is_identity(p, bearing):
    assume(abs(p.lat) < 89)
    assert haversine_nm(destination_point(p, bearing, 0), p) < 1e-9
