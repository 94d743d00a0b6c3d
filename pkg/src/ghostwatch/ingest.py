"""Report batches to triples: vocabulary, track assignment, track association."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable

from .bus import ReportBatch
from .kg import Iri, Literal, Triple, TripleStore
from .kg.query import RDF_TYPE
from .model import (
    AdsbReport,
    GeoPoint,
    PositionReport,
    PsrReport,
    ReporterKind,
    SsrReport,
    haversine_nm,
    interpolate_series,
)
from .scenario import Scenario


class NS:
    ADSB = "http://atcs.ex/atc/dds-topics/adsb-broadcast#"
    PSR = "http://atcs.ex/atc/dds-topics/psr-report#"
    SSR = "http://atcs.ex/atc/dds-topics/ssr-report#"
    CORE = "http://atcs.ex/atc/atc-core#"
    DATA = "http://atcs.ex/atc/atc-data#"


class V:
    """Fixed vocabulary IRIs."""

    type = Iri(RDF_TYPE)
    # shared core predicates
    hasTrackRank = Iri(NS.CORE + "hasTrackRank")
    isAssociatedWithTrack = Iri(NS.CORE + "isAssociatedWithTrack")
    hasSimilarTrack = Iri(NS.CORE + "hasSimilarTrack")
    hasCallsign = Iri(NS.CORE + "hasCallsign")
    hasEquipmentID = Iri(NS.CORE + "hasEquipmentID")
    hasLatitude = Iri(NS.CORE + "hasLatitude")
    hasLongitude = Iri(NS.CORE + "hasLongitude")
    hasOrigin = Iri(NS.CORE + "hasOrigin")
    hasDestination = Iri(NS.CORE + "hasDestination")
    hasRadius = Iri(NS.CORE + "hasRadius")
    hasReporterKind = Iri(NS.CORE + "hasReporterKind")
    # classes
    Track = Iri(NS.CORE + "Track")
    FlightPlan = Iri(NS.CORE + "FlightPlan")
    Airport = Iri(NS.CORE + "Airport")
    CoverageArea = Iri(NS.CORE + "CoverageArea")
    ADSBFlightPosition = Iri(NS.ADSB + "ADSBFlightPosition")
    PSRPosition = Iri(NS.PSR + "PSRPosition")
    SSRPosition = Iri(NS.SSR + "SSRPosition")


def topic_predicates(ns: str) -> dict[str, Iri]:
    names = ("hasLatitude", "hasLongitude", "hasAltitude", "hasCallsign", "hasEquipmentID", "hasTimeStamp")
    return {n: Iri(ns + n) for n in names}


ADSB_P = topic_predicates(NS.ADSB)
PSR_P = topic_predicates(NS.PSR)
SSR_P = topic_predicates(NS.SSR)

REPORT_TRIPLES = {ReporterKind.ADSB: 9, ReporterKind.SSR: 8, ReporterKind.PSR: 6}


def report_iri(report_id: str) -> Iri:
    return Iri(f"{NS.DATA}report/{report_id}")


def track_iri(source: ReporterKind, key: str) -> Iri:
    return Iri(f"{NS.DATA}track/{source.value}/{key}")


def report_to_triples(r: PositionReport, track_id: Iri, rank: int) -> list[Triple]:
    if rank < 1:
        raise ValueError("rank starts at 1")
    s = report_iri(r.report_id)
    if isinstance(r, AdsbReport):
        cls, p = V.ADSBFlightPosition, ADSB_P
    elif isinstance(r, SsrReport):
        cls, p = V.SSRPosition, SSR_P
    else:
        cls, p = V.PSRPosition, PSR_P
    out = [
        Triple(s, V.type, cls),
        Triple(s, V.hasTrackRank, Literal.of(rank)),
        Triple(s, V.isAssociatedWithTrack, track_id),
        Triple(s, p["hasLatitude"], Literal.of(float(r.position.lat))),
        Triple(s, p["hasLongitude"], Literal.of(float(r.position.lon))),
    ]
    if isinstance(r, (AdsbReport, SsrReport)):
        out.append(Triple(s, p["hasAltitude"], Literal.of(float(r.altitude_ft))))
    if isinstance(r, AdsbReport):
        out.append(Triple(s, p["hasCallsign"], Literal.of(r.callsign)))
    if isinstance(r, (AdsbReport, SsrReport)):
        out.append(Triple(s, p["hasEquipmentID"], Literal.of(r.equipment_id)))
    out.append(Triple(s, p["hasTimeStamp"], Literal.of(int(r.timestamp))))
    return out


def base_triples(scenario: Scenario) -> list[Triple]:
    """Static airspace, airport and flight plan data loaded before a run."""
    out = []
    for fp in scenario.flight_plans:
        s = Iri(f"{NS.DATA}flightplan/{fp.callsign}")
        out += [
            Triple(s, V.type, V.FlightPlan),
            Triple(s, V.hasCallsign, Literal.of(fp.callsign)),
            Triple(s, V.hasEquipmentID, Literal.of(fp.equipment_id)),
            Triple(s, V.hasOrigin, Iri(f"{NS.DATA}airport/{fp.origin}")),
            Triple(s, V.hasDestination, Iri(f"{NS.DATA}airport/{fp.destination}")),
        ]
    for ap in scenario.airports:
        s = Iri(f"{NS.DATA}airport/{ap.id}")
        out += [
            Triple(s, V.type, V.Airport),
            Triple(s, V.hasLatitude, Literal.of(float(ap.location.lat))),
            Triple(s, V.hasLongitude, Literal.of(float(ap.location.lon))),
        ]
    for area in scenario.coverage_areas:
        s = Iri(f"{NS.DATA}coverage/{area.id}")
        out += [
            Triple(s, V.type, V.CoverageArea),
            Triple(s, V.hasReporterKind, Literal.of(area.kind.value)),
            Triple(s, V.hasLatitude, Literal.of(float(area.center.lat))),
            Triple(s, V.hasLongitude, Literal.of(float(area.center.lon))),
            Triple(s, V.hasRadius, Literal.of(float(area.radius_nm))),
        ]
    return out


# -- tracks ------------------------------------------------------------------

@dataclass(frozen=True)
class AssociationConfig:
    assoc_threshold_nm: float = 0.5
    min_overlap_samples: int = 3
    psr_gate_nm: float = 2.0
    sweep_s: float = 10.0

    def __post_init__(self) -> None:
        if min(self.assoc_threshold_nm, self.min_overlap_samples, self.psr_gate_nm, self.sweep_s) <= 0:
            raise ValueError("association parameters must be positive")


@dataclass
class Track:
    track_id: Iri
    source: ReporterKind
    key: str
    reports: list[tuple[str, int, GeoPoint]] = field(default_factory=list)

    @property
    def rank(self) -> int:
        return len(self.reports)

    @property
    def first_t(self) -> int:
        return self.reports[0][1]

    @property
    def last_t(self) -> int:
        return self.reports[-1][1]

    def samples(self) -> list[tuple[int, GeoPoint]]:
        """Time-ordered samples with duplicate timestamps dropped."""
        out: list[tuple[int, GeoPoint]] = []
        for _, t, p in self.reports:
            if not out or t > out[-1][0]:
                out.append((t, p))
        return out


class TrackRegistry:
    def __init__(self, config: AssociationConfig | None = None):
        self.config = config or AssociationConfig()
        self.tracks: dict[Iri, Track] = {}
        self._by_key: dict[tuple[ReporterKind, str], Track] = {}
        self._psr: list[Track] = []
        self.associated: set[tuple[Iri, Iri]] = set()

    def of_source(self, *sources: ReporterKind) -> list[Track]:
        return [t for t in self.tracks.values() if t.source in sources]

    def _new(self, source: ReporterKind, key: str) -> Track:
        track = Track(track_iri(source, key), source, key)
        self.tracks[track.track_id] = track
        return track


def identity_key(r: PositionReport) -> str:
    if isinstance(r, AdsbReport):
        return f"{r.equipment_id}_{r.callsign}"
    if isinstance(r, SsrReport):
        return r.equipment_id
    raise TypeError("primary returns carry no identity")


def assign_track(r: PositionReport, registry: TrackRegistry) -> tuple[Iri, int]:
    """Attach a report to a track and return (track_id, rank)."""
    if isinstance(r, PsrReport):
        track = _gate_psr(r, registry)
    else:
        key = (r.kind, identity_key(r))
        track = registry._by_key.get(key)
        if track is None:
            track = registry._new(*key)
            registry._by_key[key] = track
    track.reports.append((r.report_id, r.timestamp, r.position))
    return track.track_id, track.rank


def _gate_psr(r: PsrReport, registry: TrackRegistry) -> Track:
    cfg = registry.config
    best, best_d = None, None
    for track in registry._psr:
        if r.timestamp - track.last_t > 3 * cfg.sweep_s:
            continue
        d = haversine_nm(track.reports[-1][2], r.position)
        if d <= cfg.psr_gate_nm and (best_d is None or d < best_d):
            best, best_d = track, d
    if best is None:
        best = registry._new(ReporterKind.PSR, f"P{len(registry._psr) + 1:04d}")
        registry._psr.append(best)
    return best


def track_distance_nm(
    adsb: list[tuple[int, GeoPoint]], radar: list[tuple[int, GeoPoint]], min_overlap: int
) -> float | None:
    """Mean distance between ADS-B samples and a radar trajectory interpolated
    at the ADS-B timestamps they share, or None without enough overlap."""
    if len(radar) < 2:
        return None
    lo, hi = radar[0][0], radar[-1][0]
    overlap = [(t, p) for t, p in adsb if lo <= t <= hi]
    if len(overlap) < min_overlap:
        return None
    expected = interpolate_series(radar, [t for t, _ in overlap])
    return sum(haversine_nm(p, q) for (_, p), q in zip(overlap, expected)) / len(overlap)


def associate_tracks(registry: TrackRegistry) -> list[Triple]:
    """New symmetric hasSimilarTrack triples between ADS-B and radar tracks."""
    cfg = registry.config
    out = []
    radars = [(r, r.samples()) for r in registry.of_source(ReporterKind.PSR, ReporterKind.SSR)]
    for a in registry.of_source(ReporterKind.ADSB):
        a_samples = None
        for r, r_samples in radars:
            if (a.track_id, r.track_id) in registry.associated:
                continue
            if r.last_t < a.first_t or a.last_t < r.first_t:
                continue
            if a_samples is None:
                a_samples = a.samples()
            d = track_distance_nm(a_samples, r_samples, cfg.min_overlap_samples)
            if d is not None and d <= cfg.assoc_threshold_nm:
                registry.associated.add((a.track_id, r.track_id))
                registry.associated.add((r.track_id, a.track_id))
                out.append(Triple(a.track_id, V.hasSimilarTrack, r.track_id))
                out.append(Triple(r.track_id, V.hasSimilarTrack, a.track_id))
    return out


@dataclass
class IngestSummary:
    seq: int
    reports: int = 0
    report_triples: int = 0
    association_triples: int = 0
    insert_seconds: float = 0.0
    by_kind: dict[str, int] = field(default_factory=dict)


class Ingestor:
    """Owns the track registry and writes converted batches to the store."""

    def __init__(self, store: TripleStore, config: AssociationConfig | None = None):
        self.store = store
        self.registry = TrackRegistry(config)

    def load_base(self, triples: Iterable[Triple]) -> float:
        start = time.perf_counter()
        self.store.insert_triples(list(triples))
        return time.perf_counter() - start

    def ingest_batch(self, batch: ReportBatch) -> IngestSummary:
        summary = IngestSummary(batch.seq)
        if not batch.reports:
            return summary
        triples: list[Triple] = []
        for r in batch.reports:
            track_id, rank = assign_track(r, self.registry)
            triples.extend(report_to_triples(r, track_id, rank))
            summary.by_kind[r.kind.value] = summary.by_kind.get(r.kind.value, 0) + 1
        summary.reports = len(batch.reports)
        summary.report_triples = len(triples)
        # associations go in the same write so readers never see a report
        # whose track association is still pending
        assoc = associate_tracks(self.registry)
        summary.association_triples = len(assoc)
        start = time.perf_counter()
        self.store.insert_triples(triples + assoc)
        summary.insert_seconds = time.perf_counter() - start
        return summary
