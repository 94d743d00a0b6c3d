from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostwatch.model import GeoPoint, ReporterKind, destination_point, haversine_nm
from ghostwatch.scenario import (
    GhostBehavior,
    Scenario,
    ScenarioError,
    SimClock,
    ground_truth_ghosts,
    load_scenario,
    load_scenario_file,
    run_simulation,
    simulate,
)

SMALL = """
[airspace]
duration_s=20

[airport]
id=AAA
lat=10.0
lon=20.0

[reporter]
id=ADSB-1
kind=ADSB
lat=10.0
lon=20.0
radius_nm=50

[reporter]
id=PSR-1
kind=psr
lat=10.0
lon=20.0
radius_nm=30

[reporter]
id=SSR-1
kind=SSR
lat=10.0
lon=20.0
radius_nm=30

[flightplan]
callsign=AB1
equipment=EQ1
origin=AAA
destination=BBB

[flight]
callsign=AB1
equipment=EQ1
altitude_ft=5000
ground_speed_kt=360
waypoints=10.0,20.0@0;10.1,20.0@60

[ghost]
callsign=GH1
equipment=GQ1
behavior=static
position=10.05,20.05
altitude_ft=9000
spawn_s=10
"""


def small(**overrides) -> Scenario:
    sc = load_scenario(SMALL)
    return replace(sc, **overrides) if overrides else sc


def all_reports(sc: Scenario):
    return [r for _, rs in simulate(sc) for r in rs]


# -- parsing -----------------------------------------------------------------

def test_reference_scenario_shape():
    sc = load_scenario_file("ref")
    assert len(sc.legit_flights) == 10
    assert len(sc.ghost_flights) == 5
    assert sc.duration_s == 400
    assert {a.kind for a in sc.coverage_areas} == set(ReporterKind)
    assert all(g.spawn_time_s == 180 for g in sc.ghost_flights)
    assert [g.behavior for g in sc.ghost_flights] == [
        GhostBehavior.STATIC, GhostBehavior.STATIC, GhostBehavior.STATIC_NEAR_AIRPORT,
        GhostBehavior.CROSS_INTO_RADAR, GhostBehavior.ADSB_ONLY_MOVING,
    ]


def test_small_scenario_parses():
    sc = small()
    assert sc.duration_s == 20
    assert sc.coverage_areas[1].kind is ReporterKind.PSR
    assert sc.coverage_areas[1].cadence_s == 10
    assert sc.coverage_areas[0].cadence_s == 5
    assert sc.ghost_flights[0].behavior is GhostBehavior.STATIC


@pytest.mark.parametrize("edit,line_hint", [
    (lambda s: s.replace("[airspace]", "[nonsense]"), 2),
    (lambda s: s.replace("radius_nm=50", "radius_nm=fifty"), None),
    (lambda s: s.replace("altitude_ft=5000", "altitude_ft=5000\nwingspan=30"), None),
    (lambda s: s.replace("altitude_ft=9000\n", ""), None),
    (lambda s: "lat=1\n" + s, 1),
    (lambda s: s.replace("duration_s=20", "duration_s=20\nduration_s=30"), 4),
])
def test_parse_errors_carry_line_numbers(edit, line_hint):
    with pytest.raises(ScenarioError) as err:
        load_scenario(edit(SMALL))
    assert err.value.line is not None
    if line_hint is not None:
        assert err.value.line == line_hint


@pytest.mark.parametrize("edit", [
    lambda s: s.replace("[flightplan]\ncallsign=AB1", "[flightplan]\ncallsign=ZZ9"),  # flight without plan
    lambda s: s.replace("callsign=GH1", "callsign=AB1"),  # duplicate callsign
    lambda s: s.replace("10.0,20.0@0", "12.0,20.0@0"),  # origin nowhere near airport or border
    lambda s: s.replace("@60", "@0"),  # times not increasing
    lambda s: s.replace("behavior=static", "behavior=cross_into_radar"),  # moving ghost without speed
    lambda s: s.replace("spawn_s=10", "spawn_s=20"),  # spawns after the run ends
    lambda s: s.replace("behavior=static", "behavior=teleport"),
])
def test_validation_rejects(edit):
    with pytest.raises(ScenarioError):
        load_scenario(edit(SMALL))


def test_border_band_origin_is_valid():
    # origin 1 NM inside the ADSB border, far from any airport
    edge = destination_point(GeoPoint(10.0, 20.0), 0.0, 49.0)
    text = SMALL.replace("10.0,20.0@0;10.1,20.0@60", f"{edge.lat},{edge.lon}@0;10.1,20.0@60")
    load_scenario(text)


def test_antimeridian_rejected():
    text = SMALL.replace("position=10.05,20.05", "position=10.05,-170.0")
    with pytest.raises(ScenarioError):
        load_scenario(text)


def test_with_ghosts_bounds():
    sc = load_scenario_file("ref")
    assert sc.with_ghosts(0).ghost_flights == ()
    assert [g.callsign for g in sc.with_ghosts(2).ghost_flights] == ["GHO101", "GHO202"]
    with pytest.raises(ValueError):
        sc.with_ghosts(6)


def test_ground_truth_labels_follow_file_order():
    assert ground_truth_ghosts(load_scenario_file("ref")) == {
        "GHO101": 1, "GHO202": 2, "GHO303": 3, "GHO404": 4, "GHO505": 5,
    }


# -- clock -------------------------------------------------------------------

def test_clock_ticks_cover_half_open_range():
    clock = SimClock()
    assert list(clock.ticks(4)) == [0.0, 1.0, 2.0, 3.0]
    assert clock.now_s == 4.0


def test_clock_validation():
    with pytest.raises(ValueError):
        SimClock(tick_s=0)
    with pytest.raises(ValueError):
        SimClock(speedup=-1)
    assert SimClock(speedup=4).real_seconds_per_tick == 0.25


# -- simulation --------------------------------------------------------------

def test_report_counts_by_cadence():
    # legit aircraft inside all three areas for 20 ticks: ADS-B at 0,5,10,15;
    # radar at 0,10. The ghost spawns at 10: ADS-B at 10,15, never radar.
    reports = all_reports(small())
    legit = [r for r in reports if getattr(r, "callsign", None) != "GH1"]
    kinds = [r.kind for r in reports]
    assert kinds.count(ReporterKind.ADSB) == 4 + 2
    assert kinds.count(ReporterKind.PSR) == 2
    assert kinds.count(ReporterKind.SSR) == 2
    assert len(legit) == 8
    ghost = [r for r in reports if getattr(r, "callsign", None) == "GH1"]
    assert [r.timestamp for r in ghost] == [10, 15]
    assert all(r.position == GeoPoint(10.05, 20.05) for r in ghost)


def test_tick_order_and_ids():
    reports = all_reports(small())
    assert [r.report_id for r in reports] == [f"R{i:07d}" for i in range(len(reports))]
    at10 = [r.kind for r in reports if r.timestamp == 10]
    assert at10 == [ReporterKind.PSR, ReporterKind.SSR, ReporterKind.ADSB, ReporterKind.ADSB]
    assert [r.callsign for r in reports if r.timestamp == 10 and r.kind is ReporterKind.ADSB] == ["AB1", "GH1"]


def test_legit_position_matches_waypoints():
    sc = small(duration_s=61)
    first = all_reports(sc)[0]
    assert first.position == GeoPoint(10.0, 20.0)
    at60 = [r for r in all_reports(sc) if r.timestamp == 60 and r.kind is ReporterKind.ADSB]
    assert at60[0].position == GeoPoint(10.1, 20.0)


def test_simulation_is_deterministic():
    sc = load_scenario_file("ref")
    assert all_reports(sc) == all_reports(sc)


def test_run_simulation_summary():
    sc = load_scenario_file("ref")
    got = []
    summary = run_simulation(sc, 5, got.append)
    assert summary.ticks == 400
    assert summary.reports == len(got)
    assert sum(summary.by_kind.values()) == len(got)
    assert summary.ghost_callsigns == ("GHO101", "GHO202", "GHO303", "GHO404", "GHO505")


def test_jitter_is_seeded_and_bounded():
    sc = small(jitter_nm=0.2, seed=7)
    a, b = all_reports(sc), all_reports(sc)
    assert a == b
    clean = all_reports(small())
    assert a != clean
    for noisy, exact in zip(a, clean):
        assert haversine_nm(noisy.position, exact.position) <= 0.2 + 1e-9
    assert all_reports(small(jitter_nm=0.2, seed=8)) != a


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 5))
def test_reports_stay_inside_their_reporter(ghosts):
    sc = load_scenario_file("ref").with_ghosts(ghosts)
    areas = {a.id: a for a in sc.coverage_areas}
    last_t = -1
    ghosts_cs = set(ground_truth_ghosts(sc))
    for t, reports in simulate(replace(sc, duration_s=60 + 80 * ghosts)):
        for r in reports:
            area = areas[r.reporter_id]
            assert haversine_nm(r.position, area.center) <= area.radius_nm
            assert r.timestamp == t >= last_t
            assert t % area.cadence_s == 0
            if r.kind is not ReporterKind.ADSB:
                continue
            if r.callsign in ghosts_cs:
                assert t >= 180
        last_t = t
