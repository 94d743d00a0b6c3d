"""Constraint-based detection of spoofed ADS-B traffic over the triple store."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .ingest import ADSB_P
from .kg import Iri, Query, SolutionSet, TripleStore, parse_query
from .model import CoverageArea, GeoPoint, ReporterKind, distance_to_border_nm, haversine_nm
from .scenario import Scenario

log = logging.getLogger(__name__)


class Constraint(str, Enum):
    TRACK_ORIGIN = "TRACK_ORIGIN"
    RADAR_CONSISTENCY = "RADAR_CONSISTENCY"
    FLIGHT_PLAN = "FLIGHT_PLAN"

    @classmethod
    def select(cls, name: str) -> tuple["Constraint", ...]:
        """Parse a CLI selection: track, radar, flight or all."""
        table = {"track": (cls.TRACK_ORIGIN,), "radar": (cls.RADAR_CONSISTENCY,),
                 "flight": (cls.FLIGHT_PLAN,), "all": tuple(cls)}
        try:
            return table[name.lower()]
        except KeyError:
            raise ValueError(f"unknown constraint {name!r}; expected one of {', '.join(table)}") from None


# reason codes
ORIGIN_INVALID = "ORIGIN_NOT_NEAR_AIRPORT_OR_BORDER"
UNASSOCIATED = "NO_RADAR_TRACK_IN_COVERAGE"
STATIONARY = "STATIONARY_TRACK"
NO_FLIGHT_PLAN = "NO_FLIGHT_PLAN"


@dataclass(frozen=True)
class Alert:
    constraint: Constraint
    report_iri: str
    callsign: str | None
    position: GeoPoint
    report_time_s: int
    detected_at_s: int
    reason: str

    def line(self) -> str:
        return (f"ALERT t={self.detected_at_s} rule={self.constraint.value} report=<{self.report_iri}> "
                f"callsign={self.callsign or '-'} lat={self.position.lat!r} lon={self.position.lon!r} "
                f"rt={self.report_time_s} reason={self.reason}")


@dataclass(frozen=True)
class DetectConfig:
    detection_interval_s: int = 5
    airport_radius_nm: float = 5.0
    border_band_nm: float = 2.0
    stationary_window_s: float = 30.0
    stationary_min_reports: int = 6
    stationary_displacement_nm: float = 0.1
    radar_grace_sweeps: int = 2
    sweep_s: float = 10.0

    def __post_init__(self) -> None:
        values = (self.detection_interval_s, self.airport_radius_nm, self.border_band_nm,
                  self.stationary_window_s, self.stationary_min_reports,
                  self.stationary_displacement_nm, self.radar_grace_sweeps, self.sweep_s)
        if min(values) <= 0:
            raise ValueError("detection parameters must be positive")


@dataclass(frozen=True)
class Geometry:
    """Static airspace facts the reasoning step needs."""

    airports: tuple[GeoPoint, ...]
    adsb_areas: tuple[CoverageArea, ...]
    radar_areas: tuple[CoverageArea, ...]

    @classmethod
    def from_scenario(cls, s: Scenario) -> "Geometry":
        return cls(
            tuple(a.location for a in s.airports),
            tuple(s.areas(ReporterKind.ADSB)),
            tuple(s.areas(ReporterKind.PSR, ReporterKind.SSR)),
        )

    def in_radar(self, p: GeoPoint) -> bool:
        return any(haversine_nm(p, a.center) <= a.radius_nm for a in self.radar_areas)


@lru_cache(maxsize=None)
def bundled_query(name: str) -> Query:
    return parse_query(bundled_query_text(name))


def bundled_query_text(name: str) -> str:
    return resources.files("ghostwatch.data").joinpath(f"queries/{name}.rq").read_text(encoding="utf-8")


@dataclass(frozen=True)
class QueryRecord:
    """One select issued by a detector; feeds the metrics harness."""

    name: str
    rows: int
    pattern_count: int
    iterations: int
    triples_read: int
    elapsed: float


def _num(node) -> float:
    return node.value


class AlertSink:
    """Thread-safe append-only alert stream."""

    def __init__(self, on_alert: Callable[[Alert], None] | None = None):
        self._lock = threading.Lock()
        self.alerts: list[Alert] = []
        self._on_alert = on_alert

    def extend(self, alerts: Iterable[Alert]) -> None:
        with self._lock:
            for a in alerts:
                self.alerts.append(a)
                if self._on_alert is not None:
                    self._on_alert(a)

    def snapshot(self) -> list[Alert]:
        with self._lock:
            return list(self.alerts)


class Detector:
    """Runs the selected constraints and remembers what it already adjudicated,
    so a report is alerted at most once per constraint."""

    def __init__(self, geometry: Geometry, config: DetectConfig | None = None,
                 constraints: Sequence[Constraint] = tuple(Constraint)):
        self.geometry = geometry
        self.config = config or DetectConfig()
        # cheapest origin check first
        self.constraints = tuple(c for c in Constraint if c in constraints)
        self.adjudicated: dict[Constraint, set[str]] = {c: set() for c in Constraint}
        self.alerted: dict[Constraint, set[str]] = {c: set() for c in Constraint}
        self.query_log: list[QueryRecord] = []
        # report -> callsign, refreshed by the stationary query each cycle
        self._callsigns: dict[str, str] = {}

    def _select(self, store: TripleStore, name: str) -> SolutionSet:
        q = bundled_query(name)
        result = store.evaluate(q)
        st = result.stats
        self.query_log.append(QueryRecord(name, len(result), q.pattern_count, st.iterations,
                                          st.triples_read, st.elapsed))
        return result

    def drain_query_log(self) -> list[QueryRecord]:
        out, self.query_log = self.query_log, []
        return out

    def _alert(self, c: Constraint, iri: str, callsign, lat, lon, rt, now, reason) -> Alert | None:
        if iri in self.alerted[c]:
            return None
        self.alerted[c].add(iri)
        return Alert(c, iri, callsign, GeoPoint(lat, lon), int(rt), int(now), reason)

    # -- track origin -------------------------------------------------------

    def run_track_constraint(self, store: TripleStore, now_s: int) -> list[Alert]:
        cfg, geo = self.config, self.geometry
        seen = self.adjudicated[Constraint.TRACK_ORIGIN]
        out = []
        for row in self._select(store, "track"):
            iri = row["report"].value
            if iri in seen:
                continue
            seen.add(iri)
            p = GeoPoint(_num(row["lat"]), _num(row["long"]))
            near_airport = any(haversine_nm(p, a) <= cfg.airport_radius_nm for a in geo.airports)
            near_border = any(abs(distance_to_border_nm(p, a)) <= cfg.border_band_nm for a in geo.adsb_areas)
            if near_airport or near_border:
                continue
            times = store.objects(Iri(iri), ADSB_P["hasTimeStamp"])
            rt = times[0].value if times else now_s
            alert = self._alert(Constraint.TRACK_ORIGIN, iri, row["call"].value, p.lat, p.lon,
                                rt, now_s, ORIGIN_INVALID)
            if alert:
                out.append(alert)
        return out

    # -- radar consistency --------------------------------------------------

    def run_radar_constraint(self, store: TripleStore, now_s: int) -> list[Alert]:
        out = self._stationary(store, now_s)
        out += self._unassociated(store, now_s)
        return out

    def _stationary(self, store: TripleStore, now_s: int) -> list[Alert]:
        cfg = self.config
        callsigns = self._callsigns
        callsigns.clear()
        tracks: dict[str, list[tuple[int, GeoPoint, float, str]]] = {}
        for row in self._select(store, "stationary"):
            iri = row["report"].value
            callsigns[iri] = row["call"].value
            tracks.setdefault(row["track"].value, []).append(
                (row["time"].value, GeoPoint(_num(row["lat"]), _num(row["long"])), _num(row["alt"]), iri)
            )
        out = []
        for reports in tracks.values():
            start = 0
            for end in range(len(reports)):
                t_end = reports[end][0]
                while reports[start][0] < t_end - cfg.stationary_window_s:
                    start += 1
                window = reports[start:end + 1]
                if len(window) < cfg.stationary_min_reports:
                    continue
                if t_end - window[0][0] < cfg.stationary_window_s:
                    continue
                if any(alt <= 0 for _, _, alt, _ in window):
                    continue
                # cheap exact reject before the all-pairs check
                anchor = window[0][1]
                if any(haversine_nm(anchor, w[1]) >= cfg.stationary_displacement_nm for w in window):
                    continue
                spread = max(haversine_nm(a[1], b[1]) for a, b in combinations(window, 2))
                if spread >= cfg.stationary_displacement_nm:
                    continue
                for t, p, _, iri in window:
                    alert = self._alert(Constraint.RADAR_CONSISTENCY, iri, callsigns.get(iri),
                                        p.lat, p.lon, t, now_s, STATIONARY)
                    if alert:
                        out.append(alert)
        return out

    def _unassociated(self, store: TripleStore, now_s: int) -> list[Alert]:
        grace = self.config.radar_grace_sweeps * self.config.sweep_s
        entered: dict[str, int] = {}
        out = []
        for row in self._select(store, "radar"):
            track = row["track"].value
            t = row["time"].value
            p = GeoPoint(_num(row["lat"]), _num(row["long"]))
            if not self.geometry.in_radar(p):
                continue
            t_in = entered.setdefault(track, t)
            if t - t_in < grace:
                continue
            iri = row["report"].value
            alert = self._alert(Constraint.RADAR_CONSISTENCY, iri, self._callsign(store, iri),
                                p.lat, p.lon, t, now_s, UNASSOCIATED)
            if alert:
                out.append(alert)
        return out

    def _callsign(self, store: TripleStore, iri: str) -> str | None:
        cs = self._callsigns.get(iri)
        if cs is None:
            # inserted after this cycle's stationary query ran
            found = store.objects(Iri(iri), ADSB_P["hasCallsign"])
            cs = found[0].value if found else None
        return cs

    # -- flight plan --------------------------------------------------------

    def run_flight_constraint(self, store: TripleStore, now_s: int) -> list[Alert]:
        out = []
        for row in self._select(store, "flight"):
            alert = self._alert(Constraint.FLIGHT_PLAN, row["report"].value, row["callsign"].value,
                                _num(row["lat"]), _num(row["long"]), row["time"].value, now_s,
                                NO_FLIGHT_PLAN)
            if alert:
                out.append(alert)
        return out

    def run_cycle(self, store: TripleStore, now_s: int) -> list[Alert]:
        """Run every selected constraint once; a failing constraint is logged and skipped."""
        runners = {
            Constraint.TRACK_ORIGIN: self.run_track_constraint,
            Constraint.RADAR_CONSISTENCY: self.run_radar_constraint,
            Constraint.FLIGHT_PLAN: self.run_flight_constraint,
        }
        out: list[Alert] = []
        for c in self.constraints:
            try:
                out.extend(runners[c](store, now_s))
            except Exception:
                log.exception("constraint %s failed at t=%s", c.value, now_s)
        return out


def detection_loop(
    store: TripleStore,
    detector: Detector,
    sink: AlertSink,
    now: Callable[[], float],
    duration_s: float,
    stop: threading.Event,
    wait: Callable[[float], object],
    after_cycle: Callable[[int], object] | None = None,
) -> int:
    """Threaded variant: run a cycle every interval of simulated time until
    `duration_s` is passed or `stop` is set. Returns the number of cycles.

    `now()` must report the simulated time up to which ingestion is complete.
    The last cycle runs at `duration_s` even when it is not a whole interval.
    """
    interval = detector.config.detection_interval_s
    next_t = interval
    cycles = 0
    while True:
        next_t = min(next_t, duration_s)
        while now() < next_t and not stop.is_set():
            wait(0.001)
        if now() < next_t:
            break
        sink.extend(detector.run_cycle(store, next_t))
        if after_cycle is not None:
            after_cycle(next_t)
        cycles += 1
        if next_t >= duration_s:
            break
        next_t += interval
    return cycles


def detected_ghosts(alerts: Iterable[Alert], ghost_callsigns: Iterable[str]) -> dict[Constraint, set[str]]:
    ghosts = set(ghost_callsigns)
    out: dict[Constraint, set[str]] = {c: set() for c in Constraint}
    for a in alerts:
        if a.callsign in ghosts:
            out[a.constraint].add(a.callsign)
    return out
