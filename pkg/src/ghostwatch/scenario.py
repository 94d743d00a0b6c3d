"""Deterministic airspace simulator: scenario files, clock, trajectories, reports.

Scenario file format (UTF-8)::

    # comment
    [airspace]
    duration_s=400
    seed=0

    [airport]
    id=CYUL
    lat=45.4706
    lon=-73.7408

    [reporter]
    id=ADSB-1
    kind=ADSB
    lat=45.40
    lon=-74.60
    radius_nm=90

    [flight]
    callsign=ACA101
    equipment=C-GAAA
    altitude_ft=12000
    ground_speed_kt=250
    waypoints=45.47,-73.74@0;45.93,-73.74@400

Every bracketed header starts a new record; the lines that follow are
``key=value`` pairs. Unknown keys are rejected.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Iterator, Sequence

from .model import (
    AdsbReport,
    AircraftState,
    Airport,
    CoverageArea,
    FlightPlan,
    GeoPoint,
    PositionReport,
    PsrReport,
    ReporterKind,
    SsrReport,
    destination_point,
    distance_to_border_nm,
    haversine_nm,
    initial_bearing_deg,
    interpolate_position,
)

log = logging.getLogger(__name__)

DEFAULT_CADENCE_S = {ReporterKind.ADSB: 5, ReporterKind.SSR: 10, ReporterKind.PSR: 10}
DEFAULT_SPAWN_S = 180

# legitimate origins must pass the track-origin check with these defaults
ORIGIN_AIRPORT_NM = 5.0
ORIGIN_BORDER_BAND_NM = 2.0


class ScenarioError(Exception):
    """Raised for malformed or invalid scenario files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class GhostBehavior(str, Enum):
    STATIC = "STATIC"
    STATIC_NEAR_AIRPORT = "STATIC_NEAR_AIRPORT"
    CROSS_INTO_RADAR = "CROSS_INTO_RADAR"
    ADSB_ONLY_MOVING = "ADSB_ONLY_MOVING"

    @property
    def is_static(self) -> bool:
        return self in (GhostBehavior.STATIC, GhostBehavior.STATIC_NEAR_AIRPORT)


@dataclass(frozen=True)
class FlightScript:
    callsign: str
    equipment_id: str
    waypoints: tuple[tuple[GeoPoint, int], ...]
    altitude_ft: float
    ground_speed_kt: float

    @property
    def start_s(self) -> int:
        return self.waypoints[0][1]

    @property
    def end_s(self) -> int:
        return self.waypoints[-1][1]


@dataclass(frozen=True)
class GhostScript:
    """A spoofed aircraft.

    Static behaviours hold `position` forever after spawning. Moving behaviours
    fly a straight line from `position` along `heading_deg` at `ground_speed_kt`.
    """

    callsign: str
    equipment_id: str
    behavior: GhostBehavior
    position: GeoPoint
    altitude_ft: float
    spawn_time_s: int = DEFAULT_SPAWN_S
    heading_deg: float = 0.0
    ground_speed_kt: float = 0.0

    def position_at(self, t: float) -> GeoPoint:
        if self.behavior.is_static:
            return self.position
        dist = self.ground_speed_kt * (t - self.spawn_time_s) / 3600.0
        return destination_point(self.position, self.heading_deg, dist)


@dataclass(frozen=True)
class Scenario:
    airports: tuple[Airport, ...]
    coverage_areas: tuple[CoverageArea, ...]
    flight_plans: tuple[FlightPlan, ...]
    legit_flights: tuple[FlightScript, ...]
    ghost_flights: tuple[GhostScript, ...]
    duration_s: int = 400
    seed: int = 0
    jitter_nm: float = 0.0

    def with_ghosts(self, n: int) -> "Scenario":
        """Same scenario keeping only the first `n` ghost scripts."""
        if not 0 <= n <= len(self.ghost_flights):
            raise ValueError(f"scenario has {len(self.ghost_flights)} ghosts, asked for {n}")
        return replace(self, ghost_flights=self.ghost_flights[:n])

    def areas(self, *kinds: ReporterKind) -> list[CoverageArea]:
        return [a for a in self.coverage_areas if a.kind in kinds]

    @property
    def radar_sweep_s(self) -> int:
        radars = self.areas(ReporterKind.PSR, ReporterKind.SSR)
        return max((a.cadence_s for a in radars), default=DEFAULT_CADENCE_S[ReporterKind.PSR])


@dataclass
class SimClock:
    tick_s: float = 1.0
    speedup: float = 0.0
    now_s: float = 0.0

    def __post_init__(self) -> None:
        if self.tick_s <= 0:
            raise ValueError("tick_s must be positive")
        if self.speedup < 0:
            raise ValueError("speedup must be >= 0")

    def advance(self) -> float:
        self.now_s += self.tick_s
        return self.now_s

    def ticks(self, duration_s: float) -> Iterator[float]:
        """Yield every tick time in [now, duration)."""
        while self.now_s < duration_s:
            yield self.now_s
            self.advance()

    @property
    def real_seconds_per_tick(self) -> float:
        return 0.0 if self.speedup == 0 else self.tick_s / self.speedup


# -- parsing ---------------------------------------------------------------

_SECTION_KEYS = {
    "airspace": ({"duration_s", "seed", "jitter_nm"}, set()),
    "airport": ({"id", "lat", "lon"}, {"id", "lat", "lon"}),
    "reporter": (
        {"id", "kind", "lat", "lon", "radius_nm", "cadence_s"},
        {"id", "kind", "lat", "lon", "radius_nm"},
    ),
    "flightplan": (
        {"callsign", "equipment", "origin", "destination"},
        {"callsign", "equipment", "origin", "destination"},
    ),
    "flight": (
        {"callsign", "equipment", "altitude_ft", "ground_speed_kt", "waypoints"},
        {"callsign", "equipment", "altitude_ft", "ground_speed_kt", "waypoints"},
    ),
    "ghost": (
        {"callsign", "equipment", "behavior", "spawn_s", "position", "altitude_ft",
         "heading_deg", "ground_speed_kt"},
        {"callsign", "equipment", "behavior", "position", "altitude_ft"},
    ),
}


def _split_records(text: str) -> list[tuple[str, int, dict[str, tuple[str, int]]]]:
    records: list[tuple[str, int, dict[str, tuple[str, int]]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in _SECTION_KEYS:
                raise ScenarioError(f"unknown section [{name}]", lineno)
            records.append((name, lineno, {}))
            continue
        if not records:
            raise ScenarioError("key=value line outside any section", lineno)
        if "=" not in line:
            raise ScenarioError(f"expected key=value, got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        section, _, body = records[-1]
        if key not in _SECTION_KEYS[section][0]:
            raise ScenarioError(f"unknown key {key!r} in [{section}]", lineno)
        if key in body:
            raise ScenarioError(f"duplicate key {key!r}", lineno)
        body[key] = (value, lineno)
    for section, lineno, body in records:
        missing = _SECTION_KEYS[section][1] - body.keys()
        if missing:
            raise ScenarioError(f"[{section}] missing keys: {', '.join(sorted(missing))}", lineno)
    return records


def _num(body: dict[str, tuple[str, int]], key: str, cast: Callable = float, default=None):
    if key not in body:
        return default
    value, lineno = body[key]
    try:
        return cast(value)
    except ValueError:
        raise ScenarioError(f"{key}: not a number: {value!r}", lineno) from None


def _point(text: str, lineno: int) -> GeoPoint:
    try:
        lat, lon = (float(v) for v in text.split(","))
        return GeoPoint(lat, lon)
    except ValueError as exc:
        raise ScenarioError(f"bad coordinate {text!r}: {exc}", lineno) from None


def _waypoints(text: str, lineno: int) -> tuple[tuple[GeoPoint, int], ...]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        if "@" not in item:
            raise ScenarioError(f"waypoint {item!r} must be lat,lon@t", lineno)
        coords, t = item.split("@", 1)
        try:
            out.append((_point(coords, lineno), int(t)))
        except ValueError:
            raise ScenarioError(f"waypoint time must be an integer: {t!r}", lineno) from None
    return tuple(out)


def load_scenario(text: str) -> Scenario:
    """Parse and validate scenario file contents."""
    records = _split_records(text)
    airports, areas, plans, flights, ghosts = [], [], [], [], []
    duration, seed, jitter = 400, 0, 0.0
    for section, lineno, body in records:
        if section == "airspace":
            duration = _num(body, "duration_s", int, duration)
            seed = _num(body, "seed", int, seed)
            jitter = _num(body, "jitter_nm", float, jitter)
        elif section == "airport":
            airports.append(Airport(body["id"][0], _point(f"{body['lat'][0]},{body['lon'][0]}", lineno)))
        elif section == "reporter":
            try:
                kind = ReporterKind(body["kind"][0].upper())
            except ValueError:
                raise ScenarioError(f"unknown reporter kind {body['kind'][0]!r}", body["kind"][1]) from None
            try:
                areas.append(CoverageArea(
                    id=body["id"][0],
                    kind=kind,
                    center=_point(f"{body['lat'][0]},{body['lon'][0]}", lineno),
                    radius_nm=_num(body, "radius_nm"),
                    cadence_s=_num(body, "cadence_s", int, DEFAULT_CADENCE_S[kind]),
                ))
            except ValueError as exc:
                raise ScenarioError(str(exc), lineno) from None
        elif section == "flightplan":
            plans.append(FlightPlan(body["callsign"][0], body["equipment"][0],
                                    body["origin"][0], body["destination"][0]))
        elif section == "flight":
            flights.append(FlightScript(
                callsign=body["callsign"][0],
                equipment_id=body["equipment"][0],
                waypoints=_waypoints(*body["waypoints"]),
                altitude_ft=_num(body, "altitude_ft"),
                ground_speed_kt=_num(body, "ground_speed_kt"),
            ))
        elif section == "ghost":
            try:
                behavior = GhostBehavior(body["behavior"][0].upper())
            except ValueError:
                raise ScenarioError(f"unknown ghost behavior {body['behavior'][0]!r}",
                                    body["behavior"][1]) from None
            ghosts.append(GhostScript(
                callsign=body["callsign"][0],
                equipment_id=body["equipment"][0],
                behavior=behavior,
                position=_point(*body["position"]),
                altitude_ft=_num(body, "altitude_ft"),
                spawn_time_s=_num(body, "spawn_s", int, DEFAULT_SPAWN_S),
                heading_deg=_num(body, "heading_deg", float, 0.0),
                ground_speed_kt=_num(body, "ground_speed_kt", float, 0.0),
            ))
    scenario = Scenario(tuple(airports), tuple(areas), tuple(plans), tuple(flights),
                        tuple(ghosts), duration_s=duration, seed=seed, jitter_nm=jitter)
    validate_scenario(scenario)
    return scenario


def load_scenario_file(path: str | Path) -> Scenario:
    if str(path) == "ref":
        return load_scenario(reference_scenario_text())
    return load_scenario(Path(path).read_text(encoding="utf-8"))


def reference_scenario_text() -> str:
    return resources.files("ghostwatch.data").joinpath("reference.scn").read_text(encoding="utf-8")


def validate_scenario(s: Scenario) -> None:
    if s.duration_s <= 0:
        raise ScenarioError("duration_s must be > 0")
    if s.jitter_nm < 0:
        raise ScenarioError("jitter_nm must be >= 0")
    if not s.areas(ReporterKind.ADSB):
        raise ScenarioError("scenario needs at least one ADSB coverage area")
    _unique([a.id for a in s.airports], "airport id")
    _unique([a.id for a in s.coverage_areas], "reporter id")
    _unique([p.callsign for p in s.flight_plans], "flight plan callsign")
    _unique([f.callsign for f in s.legit_flights] + [g.callsign for g in s.ghost_flights], "callsign")

    planned = {p.callsign for p in s.flight_plans}
    adsb = s.areas(ReporterKind.ADSB)
    for f in s.legit_flights:
        if f.callsign not in planned:
            raise ScenarioError(f"flight {f.callsign} has no matching flight plan")
        if len(f.waypoints) < 2:
            raise ScenarioError(f"flight {f.callsign} needs at least two waypoints")
        times = [t for _, t in f.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError(f"flight {f.callsign}: waypoint times must strictly increase")
        origin = f.waypoints[0][0]
        near_airport = any(haversine_nm(origin, a.location) <= ORIGIN_AIRPORT_NM for a in s.airports)
        near_border = any(
            0 <= distance_to_border_nm(origin, a) <= ORIGIN_BORDER_BAND_NM for a in adsb
        )
        if not (near_airport or near_border):
            raise ScenarioError(
                f"flight {f.callsign}: origin must be within {ORIGIN_AIRPORT_NM} NM of an "
                f"airport or inside the {ORIGIN_BORDER_BAND_NM} NM ADSB border band"
            )
    for g in s.ghost_flights:
        if g.callsign in planned:
            raise ScenarioError(f"ghost {g.callsign} must not have a flight plan")
        if not 0 <= g.spawn_time_s < s.duration_s:
            raise ScenarioError(f"ghost {g.callsign}: spawn_s must lie in [0, duration_s)")
        if not g.behavior.is_static and g.ground_speed_kt <= 0:
            raise ScenarioError(f"ghost {g.callsign}: moving behaviour needs ground_speed_kt > 0")

    lons = [p.lon for p in _all_points(s)]
    if lons and max(lons) - min(lons) >= 180.0:
        raise ScenarioError("scenario must not span the antimeridian")


def _unique(values: Sequence[str], what: str) -> None:
    seen = set()
    for v in values:
        if v in seen:
            raise ScenarioError(f"duplicate {what}: {v}")
        seen.add(v)


def _all_points(s: Scenario) -> Iterator[GeoPoint]:
    yield from (a.location for a in s.airports)
    yield from (a.center for a in s.coverage_areas)
    for f in s.legit_flights:
        yield from (p for p, _ in f.waypoints)
    for g in s.ghost_flights:
        yield g.position
        if not g.behavior.is_static:
            yield g.position_at(s.duration_s)


# -- simulation ------------------------------------------------------------

def _legit_state(f: FlightScript, t: float) -> AircraftState | None:
    if not f.start_s <= t <= f.end_s:
        return None
    samples = [(wt, p) for p, wt in f.waypoints]
    pos = interpolate_position(samples, t)
    # heading of the active leg
    idx = next(i for i, (_, wt) in enumerate(f.waypoints) if wt >= t)
    a, b = f.waypoints[max(idx - 1, 0)][0], f.waypoints[max(idx, 1)][0]
    heading = initial_bearing_deg(a, b) if a != b else 0.0
    return AircraftState(f.callsign, f.equipment_id, pos, f.altitude_ft, f.ground_speed_kt,
                         heading % 360.0)


def step(scenario: Scenario, clock: SimClock) -> list[AircraftState]:
    """Aircraft states at the clock's current time, legitimate flights first."""
    t = clock.now_s
    states = [s for s in (_legit_state(f, t) for f in scenario.legit_flights) if s is not None]
    for g in scenario.ghost_flights:
        if t < g.spawn_time_s:
            continue
        states.append(AircraftState(
            g.callsign, g.equipment_id, g.position_at(t), g.altitude_ft,
            0.0 if g.behavior.is_static else g.ground_speed_kt,
            g.heading_deg % 360.0, ghost=True,
        ))
    return states


def _jitter(p: GeoPoint, jitter_nm: float, rng: random.Random | None) -> GeoPoint:
    if jitter_nm <= 0 or rng is None:
        return p
    return destination_point(p, rng.uniform(0.0, 360.0), rng.uniform(0.0, jitter_nm))


_KIND_ORDER = (ReporterKind.PSR, ReporterKind.SSR, ReporterKind.ADSB)


def emit_reports(
    states: Sequence[AircraftState],
    scenario: Scenario,
    clock: SimClock,
    ids: Iterator[int] | None = None,
    rng: random.Random | None = None,
) -> list[PositionReport]:
    """Reports generated at this tick.

    Within a tick, radar returns precede ADS-B messages; inside a kind the order
    is reporter order, then aircraft order. Ghosts only ever produce ADS-B.
    """
    t = int(clock.now_s)
    if ids is None:
        ids = itertools.count()
    out: list[PositionReport] = []
    for kind in _KIND_ORDER:
        for area in scenario.areas(kind):
            if t % area.cadence_s:
                continue
            for s in states:
                if s.ghost and kind is not ReporterKind.ADSB:
                    continue
                if not _inside(s.position, area):
                    continue
                rid = f"R{next(ids):07d}"
                pos = _jitter(s.position, scenario.jitter_nm, rng)
                if kind is ReporterKind.PSR:
                    out.append(PsrReport(rid, t, area.id, pos))
                elif kind is ReporterKind.SSR:
                    out.append(SsrReport(rid, t, area.id, pos, s.altitude_ft, s.equipment_id))
                else:
                    out.append(AdsbReport(rid, t, area.id, pos, s.altitude_ft, s.callsign,
                                          s.equipment_id, s.ground_speed_kt))
    return out


def _inside(p: GeoPoint, area: CoverageArea) -> bool:
    return haversine_nm(p, area.center) <= area.radius_nm


@dataclass
class RunSummary:
    ticks: int = 0
    reports: int = 0
    by_kind: dict[str, int] = field(default_factory=dict)
    ghost_callsigns: tuple[str, ...] = ()


def simulate(scenario: Scenario, clock: SimClock | None = None) -> Iterator[tuple[int, list[PositionReport]]]:
    """Yield (tick, reports) for every tick in [0, duration_s)."""
    clock = clock or SimClock()
    ids = itertools.count()
    rng = random.Random(scenario.seed) if scenario.jitter_nm > 0 else None
    for t in clock.ticks(scenario.duration_s):
        yield int(t), emit_reports(step(scenario, clock), scenario, clock, ids, rng)


def run_simulation(
    scenario: Scenario,
    ghosts: int,
    sink: Callable[[PositionReport], object],
    clock: SimClock | None = None,
) -> RunSummary:
    """Drive the clock over the whole scenario, publishing every report to `sink`."""
    scenario = scenario.with_ghosts(ghosts)
    summary = RunSummary(ghost_callsigns=tuple(g.callsign for g in scenario.ghost_flights))
    for _, reports in simulate(scenario, clock):
        summary.ticks += 1
        for r in reports:
            sink(r)
            summary.reports += 1
            summary.by_kind[r.kind.value] = summary.by_kind.get(r.kind.value, 0) + 1
    return summary


def ground_truth_ghosts(scenario: Scenario) -> dict[str, int]:
    """Map ghost callsign to its 1-based label in file order."""
    return {g.callsign: i for i, g in enumerate(scenario.ghost_flights, start=1)}

