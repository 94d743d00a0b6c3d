"""Domain types and spherical geodesy shared by every other module."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

# one arcminute of great circle is one nautical mile
EARTH_RADIUS_NM = 10800.0 / math.pi


class ReporterKind(str, Enum):
    ADSB = "ADSB"
    PSR = "PSR"
    SSR = "SSR"


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 < self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class CoverageArea:
    id: str
    kind: ReporterKind
    center: GeoPoint
    radius_nm: float
    cadence_s: int = 5

    def __post_init__(self) -> None:
        if self.radius_nm <= 0:
            raise ValueError(f"coverage radius must be positive: {self.radius_nm}")
        if self.cadence_s < 1:
            raise ValueError(f"cadence must be >= 1 s: {self.cadence_s}")


@dataclass(frozen=True)
class Airport:
    id: str
    location: GeoPoint


@dataclass(frozen=True)
class FlightPlan:
    callsign: str
    equipment_id: str
    origin: str
    destination: str

    def __post_init__(self) -> None:
        if not self.callsign:
            raise ValueError("flight plan callsign must be non-empty")


@dataclass(frozen=True)
class AircraftState:
    callsign: str
    equipment_id: str
    position: GeoPoint
    altitude_ft: float
    ground_speed_kt: float
    heading_deg: float
    # simulator ground truth, never serialized into reports
    ghost: bool = False

    def __post_init__(self) -> None:
        if self.altitude_ft < 0 or self.ground_speed_kt < 0:
            raise ValueError("altitude and ground speed must be non-negative")
        if not (0.0 <= self.heading_deg < 360.0):
            raise ValueError(f"heading out of range: {self.heading_deg}")


@dataclass(frozen=True)
class PsrReport:
    """Skin return: position only, no altitude and no identity."""

    report_id: str
    timestamp: int
    reporter_id: str
    position: GeoPoint

    kind = ReporterKind.PSR


@dataclass(frozen=True)
class SsrReport:
    report_id: str
    timestamp: int
    reporter_id: str
    position: GeoPoint
    altitude_ft: float
    equipment_id: str

    kind = ReporterKind.SSR


@dataclass(frozen=True)
class AdsbReport:
    report_id: str
    timestamp: int
    antenna_id: str
    position: GeoPoint
    altitude_ft: float
    callsign: str
    equipment_id: str
    ground_speed_kt: float

    kind = ReporterKind.ADSB

    @property
    def reporter_id(self) -> str:
        return self.antenna_id


PositionReport = Union[PsrReport, SsrReport, AdsbReport]


def haversine_nm(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in nautical miles."""
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_NM * math.asin(min(1.0, math.sqrt(h)))


def within_coverage(p: GeoPoint, area: CoverageArea) -> bool:
    # boundary inclusive
    return haversine_nm(p, area.center) <= area.radius_nm


def distance_to_border_nm(p: GeoPoint, area: CoverageArea) -> float:
    """Signed distance to the coverage edge: positive inside, negative outside."""
    return area.radius_nm - haversine_nm(p, area.center)


def initial_bearing_deg(a: GeoPoint, b: GeoPoint) -> float:
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlon = math.radians(b.lon - a.lon)
    y = math.sin(dlon) * math.cos(lat2)
    x = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    return math.degrees(math.atan2(y, x)) % 360.0


def destination_point(start: GeoPoint, bearing_deg: float, distance_nm: float) -> GeoPoint:
    """Point reached by travelling `distance_nm` along a great circle."""
    delta = distance_nm / EARTH_RADIUS_NM
    theta = math.radians(bearing_deg)
    lat1, lon1 = math.radians(start.lat), math.radians(start.lon)
    lat2 = math.asin(
        math.sin(lat1) * math.cos(delta) + math.cos(lat1) * math.sin(delta) * math.cos(theta)
    )
    lon2 = lon1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(lat1),
        math.cos(delta) - math.sin(lat1) * math.sin(lat2),
    )
    lon = (math.degrees(lon2) + 540.0) % 360.0 - 180.0
    if lon == -180.0:
        lon = 180.0
    return GeoPoint(math.degrees(lat2), lon)


def interpolate_position(samples: Sequence[tuple[float, GeoPoint]], t: float) -> GeoPoint:
    """Piecewise-linear interpolation of lat and lon between bracketing samples.

    Longitudes are interpolated naively, so the samples must not straddle the
    antimeridian.
    """
    return interpolate_series(samples, [t])[0]


def interpolate_series(samples: Sequence[tuple[float, GeoPoint]], ts: Sequence[float]) -> list[GeoPoint]:
    """Vector form of `interpolate_position`; validates the samples once."""
    if len(samples) < 2:
        raise ValueError("interpolation needs at least two samples")
    times = [s[0] for s in samples]
    for earlier, later in zip(times, times[1:]):
        if later <= earlier:
            raise ValueError("sample timestamps must be strictly increasing")
    out = []
    for t in ts:
        if t < times[0] or t > times[-1]:
            raise ValueError(f"t={t} outside sample span [{times[0]}, {times[-1]}]")
        i = bisect.bisect_left(times, t)
        if times[i] == t:
            out.append(samples[i][1])
            continue
        (t0, p0), (t1, p1) = samples[i - 1], samples[i]
        f = (t - t0) / (t1 - t0)
        out.append(GeoPoint(p0.lat + f * (p1.lat - p0.lat), p0.lon + f * (p1.lon - p0.lon)))
    return out
