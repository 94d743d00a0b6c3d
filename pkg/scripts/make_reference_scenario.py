#!/usr/bin/env python3
"""Generate src/ghostwatch/data/reference.scn.

Geometry: one large ADS-B footprint centred west of Montreal, a co-located
PSR/SSR pair over CYUL, and three airports. Ten legitimate flights depart from
airports or enter across the ADS-B border; five ghosts are laid out as

  1, 2  static, away from airports and borders (1 inside radar, 2 outside)
  3     static, 2 NM from CYOW
  4     spawns in the ADS-B border band and flies into radar coverage
  5     spawns in the ADS-B border band and stays in ADS-B-only airspace

Run with --check to print coverage diagnostics instead of writing the file.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from ghostwatch.model import (
    CoverageArea,
    GeoPoint,
    ReporterKind,
    destination_point,
    distance_to_border_nm,
    haversine_nm,
    initial_bearing_deg,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "ghostwatch" / "data" / "reference.scn"

CYUL = GeoPoint(45.4706, -73.7408)
CYHU = GeoPoint(45.5175, -73.4169)
CYOW = GeoPoint(45.3225, -75.6692)
ADSB = CoverageArea("ADSB-1", ReporterKind.ADSB, GeoPoint(45.40, -74.60), 90.0, 5)
PSR = CoverageArea("PSR-1", ReporterKind.PSR, CYUL, 40.0, 10)
SSR = CoverageArea("SSR-1", ReporterKind.SSR, CYUL, 40.0, 10)
DURATION = 400


def border_entry(origin: GeoPoint, bearing: float, inset_nm: float = 1.0) -> GeoPoint:
    """Point on the ray from `origin` that lies `inset_nm` inside the ADS-B edge."""
    lo, hi = 0.0, 400.0
    for _ in range(80):
        mid = (lo + hi) / 2
        if distance_to_border_nm(destination_point(origin, bearing, mid), ADSB) > inset_nm:
            lo = mid
        else:
            hi = mid
    return destination_point(origin, bearing, lo)


def r6(p: GeoPoint) -> str:
    return f"{p.lat:.6f},{p.lon:.6f}"


def straight(start: GeoPoint, bearing: float, kt: float, t0: int, t1: int) -> str:
    end = destination_point(start, bearing, kt * (t1 - t0) / 3600.0)
    return f"{r6(start)}@{t0};{r6(end)}@{t1}"


def inbound(start: GeoPoint, target: GeoPoint, kt: float, t0: int) -> str:
    t1 = t0 + round(haversine_nm(start, target) / kt * 3600.0)
    t1 = max(t1, DURATION + 10)
    brg = initial_bearing_deg(start, target)
    return straight(start, brg, kt, t0, t1)


def build() -> str:
    lines = [
        "# Reference scenario: 10 legitimate aircraft, 5 scripted ghosts.",
        "# Generated by scripts/make_reference_scenario.py; edit the script, not this file.",
        "",
        "[airspace]",
        f"duration_s={DURATION}",
        "seed=0",
        "jitter_nm=0",
        "",
    ]
    for ident, p in (("CYUL", CYUL), ("CYHU", CYHU), ("CYOW", CYOW)):
        lines += ["[airport]", f"id={ident}", f"lat={p.lat}", f"lon={p.lon}", ""]
    for a in (ADSB, PSR, SSR):
        lines += ["[reporter]", f"id={a.id}", f"kind={a.kind.value}", f"lat={a.center.lat}",
                  f"lon={a.center.lon}", f"radius_nm={a.radius_nm}", f"cadence_s={a.cadence_s}", ""]

    flights = []
    # departures from CYUL, staggered so primary returns stay > 2 NM apart
    for i, (brg, t0) in enumerate(((0, 0), (72, 40), (144, 80), (216, 120), (288, 160))):
        flights.append((f"ACA{101 + i * 101}", f"C-GAC{chr(65 + i)}", "CYUL", "CYYZ",
                        straight(CYUL, brg, 250.0, t0, DURATION + 10), 10000 + 1000 * i, 250.0))
    flights.append(("POE606", "C-FPOA", "CYOW", "CYTZ", straight(CYOW, 270, 240.0, 0, DURATION + 10), 9000, 240.0))
    flights.append(("JZA707", "C-FJZA", "CYOW", "CYVO", straight(CYOW, 0, 240.0, 30, DURATION + 10), 8000, 240.0))
    # arrivals entering across the ADS-B border
    for cs, eq, brg, t0, kt in (("ACA808", "C-GACZ", 100, 0, 300.0), ("DAL909", "N909DL", 45, 20, 300.0),
                                ("UAL010", "N010UA", 200, 40, 280.0)):
        entry = border_entry(CYUL, brg)
        flights.append((cs, eq, "KJFK" if cs != "ACA808" else "CYHZ", "CYUL",
                        inbound(entry, CYUL, kt, t0), 14000, kt))

    for cs, eq, origin, dest, wps, alt, kt in flights:
        lines += ["[flightplan]", f"callsign={cs}", f"equipment={eq}", f"origin={origin}",
                  f"destination={dest}", ""]
    for cs, eq, origin, dest, wps, alt, kt in flights:
        lines += ["[flight]", f"callsign={cs}", f"equipment={eq}", f"altitude_ft={alt}",
                  f"ground_speed_kt={kt}", f"waypoints={wps}", ""]

    g4 = border_entry(CYUL, 118)
    g5 = border_entry(ADSB.center, 225)
    ghosts = [
        ("GHO101", "N101GH", "STATIC", destination_point(CYUL, 36, 20.0), 11000, None, None),
        ("GHO202", "N202GH", "STATIC", GeoPoint(45.85, -75.05), 12000, None, None),
        ("GHO303", "N303GH", "STATIC_NEAR_AIRPORT", destination_point(CYOW, 45, 2.0), 3000, None, None),
        ("GHO404", "N404GH", "CROSS_INTO_RADAR", g4, 15000, initial_bearing_deg(g4, CYUL), 450.0),
        ("GHO505", "N505GH", "ADSB_ONLY_MOVING", g5, 16000, 45.0, 300.0),
    ]
    for cs, eq, behavior, pos, alt, hdg, kt in ghosts:
        lines += ["[ghost]", f"callsign={cs}", f"equipment={eq}", f"behavior={behavior}",
                  "spawn_s=180", f"position={r6(pos)}", f"altitude_ft={alt}"]
        if hdg is not None:
            lines += [f"heading_deg={hdg:.4f}", f"ground_speed_kt={kt}"]
        lines.append("")
    return "\n".join(lines)


def check(text: str) -> None:
    from ghostwatch.scenario import load_scenario, run_simulation, step, SimClock

    sc = load_scenario(text)
    print(f"CYUL from ADSB centre: {haversine_nm(CYUL, ADSB.center):.1f} NM")
    print(f"CYOW from CYUL: {haversine_nm(CYOW, CYUL):.1f} NM")
    for g in sc.ghost_flights:
        p0, p1 = g.position_at(g.spawn_time_s), g.position_at(DURATION)
        print(f"{g.callsign}: border {distance_to_border_nm(p0, ADSB):6.1f} -> {distance_to_border_nm(p1, ADSB):6.1f}"
              f"  radar {distance_to_border_nm(p0, PSR):6.1f} -> {distance_to_border_nm(p1, PSR):6.1f}"
              f"  airports {min(haversine_nm(p0, a.location) for a in sc.airports):6.1f}")
    times = []
    run_simulation(sc, 5, lambda r: times.append(r.timestamp))
    print(f"total reports {len(times)}; 400th report at t={times[399]}")
    # minimum pairwise separation between legit aircraft inside radar coverage
    worst = (1e9, None)
    for t in range(0, DURATION, 10):
        clock = SimClock(now_s=t)
        st = [s for s in step(sc, clock) if haversine_nm(s.position, CYUL) <= 40.0]
        for i in range(len(st)):
            for j in range(i + 1, len(st)):
                d = haversine_nm(st[i].position, st[j].position)
                if d < worst[0]:
                    worst = (d, (t, st[i].callsign, st[j].callsign))
    print(f"closest pair inside radar: {worst}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()
    text = build()
    if args.check:
        check(text)
    else:
        OUT.write_text(text, encoding="utf-8")
        print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
