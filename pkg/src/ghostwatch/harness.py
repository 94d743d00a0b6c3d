"""Pipeline wiring (simulator -> bus -> ingest -> store -> detection) and metrics.

Metrics windows are 5 s of simulated time. An event at time t belongs to the
window ending at ``5 * ceil(t / 5)`` (events at t=0 fall in the first window),
so a 400 s run yields 80 contiguous windows ending at 5, 10, ..., 400.

``triples_downloaded`` is defined as result rows times the number of top-level
triple patterns in the query, summed over every select in the window.
``query_time_ms`` is insert time plus select time (wall clock) in the window.
"""

from __future__ import annotations

import csv
import io
import math
import threading
import time
from dataclasses import dataclass, field, fields
from typing import Iterable, Iterator, Sequence

from .bus import BusConfig, ReportBus
from .detect import (
    Alert,
    AlertSink,
    Constraint,
    DetectConfig,
    Detector,
    Geometry,
    detected_ghosts,
    detection_loop,
)
from .ingest import AssociationConfig, Ingestor, base_triples
from .kg import TripleStore
from .model import AdsbReport, GeoPoint, PositionReport, PsrReport, SsrReport
from .scenario import Scenario, SimClock, ground_truth_ghosts, simulate

WINDOW_S = 5
CSV_HEADER = ("t_s", "constraint", "ghosts", "query_time_ms", "triples_downloaded",
              "complexity_iters", "reads_per_s", "writes_per_s")


# -- report log --------------------------------------------------------------

class ReportLogError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"report log line {line}: {message}")


def format_report(r: PositionReport) -> str:
    parts = [f"REPORT t={r.timestamp}", f"kind={r.kind.value}", f"id={r.report_id}",
             f"src={r.reporter_id}", f"lat={r.position.lat!r}", f"lon={r.position.lon!r}"]
    if isinstance(r, (SsrReport, AdsbReport)):
        parts.append(f"alt={r.altitude_ft!r}")
    if isinstance(r, AdsbReport):
        parts.append(f"cs={r.callsign}")
    if isinstance(r, (SsrReport, AdsbReport)):
        parts.append(f"eq={r.equipment_id}")
    if isinstance(r, AdsbReport):
        parts.append(f"gs={r.ground_speed_kt!r}")
    return " ".join(parts)


_REQUIRED = {
    "PSR": ("t", "kind", "id", "src", "lat", "lon"),
    "SSR": ("t", "kind", "id", "src", "lat", "lon", "alt", "eq"),
    "ADSB": ("t", "kind", "id", "src", "lat", "lon", "alt", "cs", "eq", "gs"),
}


def parse_report(line: str, lineno: int = 0) -> PositionReport:
    tokens = line.split()
    if not tokens or tokens[0] != "REPORT":
        raise ReportLogError("expected a REPORT record", lineno)
    fields_: dict[str, str] = {}
    for tok in tokens[1:]:
        key, sep, value = tok.partition("=")
        if not sep or not value:
            raise ReportLogError(f"malformed field {tok!r}", lineno)
        if key in fields_:
            raise ReportLogError(f"duplicate field {key!r}", lineno)
        fields_[key] = value
    kind = fields_.get("kind")
    if kind not in _REQUIRED:
        raise ReportLogError(f"unknown kind {kind!r}", lineno)
    want = _REQUIRED[kind]
    if set(fields_) != set(want):
        raise ReportLogError(f"{kind} record needs fields {', '.join(want)}", lineno)
    try:
        t = int(fields_["t"])
        pos = GeoPoint(float(fields_["lat"]), float(fields_["lon"]))
        if kind == "PSR":
            return PsrReport(fields_["id"], t, fields_["src"], pos)
        if kind == "SSR":
            return SsrReport(fields_["id"], t, fields_["src"], pos, float(fields_["alt"]), fields_["eq"])
        return AdsbReport(fields_["id"], t, fields_["src"], pos, float(fields_["alt"]), fields_["cs"],
                          fields_["eq"], float(fields_["gs"]))
    except (TypeError, ValueError) as exc:
        raise ReportLogError(str(exc), lineno) from None


def read_report_log(text: str) -> list[PositionReport]:
    out = []
    last_t = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        r = parse_report(line, lineno)
        if last_t is not None and r.timestamp < last_t:
            raise ReportLogError("timestamps go backwards", lineno)
        last_t = r.timestamp
        out.append(r)
    return out


def ticks_from_log(reports: Sequence[PositionReport], duration_s: int) -> Iterator[tuple[int, list[PositionReport]]]:
    """Regroup a recorded stream into (tick, reports) for every tick in [0, duration)."""
    by_t: dict[int, list[PositionReport]] = {}
    for r in reports:
        by_t.setdefault(r.timestamp, []).append(r)
    for t in range(duration_s):
        yield t, by_t.get(t, [])


# -- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class MetricsSample:
    t_s: int
    constraint: str
    ghosts: int
    query_time_ms: float
    triples_downloaded: int
    complexity_iters: int
    reads_per_s: float
    writes_per_s: float

    def row(self) -> list[str]:
        return [str(getattr(self, f.name)) for f in fields(self)]


@dataclass
class WindowEvents:
    insert_s: float = 0.0
    select_s: float = 0.0
    triples_downloaded: int = 0
    iterations: int = 0
    reads_per_s: float = 0.0
    writes_per_s: float = 0.0


def window_index(t: float) -> int:
    return max(0, math.ceil(t / WINDOW_S) - 1)


def window_count(duration_s: float) -> int:
    return math.ceil(duration_s / WINDOW_S)


def collect_metrics(t_s: int, constraint: str, ghosts: int, ev: WindowEvents) -> MetricsSample:
    return MetricsSample(
        t_s=t_s,
        constraint=constraint,
        ghosts=ghosts,
        query_time_ms=(ev.insert_s + ev.select_s) * 1000.0,
        triples_downloaded=ev.triples_downloaded,
        complexity_iters=ev.iterations,
        reads_per_s=ev.reads_per_s,
        writes_per_s=ev.writes_per_s,
    )


class MetricsRecorder:
    def __init__(self, store: TripleStore, duration_s: int):
        self.store = store
        self.duration_s = duration_s
        self.windows = [WindowEvents() for _ in range(window_count(duration_s))]
        self._closed = 0
        self._lock = threading.Lock()

    def _at(self, t: float) -> WindowEvents:
        return self.windows[min(window_index(t), len(self.windows) - 1)]

    def insert(self, t: float, seconds: float) -> None:
        with self._lock:
            self._at(t).insert_s += seconds

    def select(self, t: float, seconds: float, rows: int, patterns: int, iterations: int) -> None:
        with self._lock:
            ev = self._at(t)
            ev.select_s += seconds
            ev.triples_downloaded += rows * patterns
            ev.iterations += iterations

    def close_through(self, t: float) -> None:
        """Close every window ending at or before t, sampling store rates."""
        with self._lock:
            while self._closed < len(self.windows) and self.window_end(self._closed) <= t:
                start = self._closed * WINDOW_S
                length = self.window_end(self._closed) - start
                ev = self.windows[self._closed]
                ev.reads_per_s, ev.writes_per_s = self.store.read_write_rates(length)
                self._closed += 1

    def window_end(self, k: int) -> int:
        return min((k + 1) * WINDOW_S, self.duration_s)

    def samples(self, constraint: str, ghosts: int) -> list[MetricsSample]:
        return [collect_metrics(self.window_end(k), constraint, ghosts, ev)
                for k, ev in enumerate(self.windows)]


def metrics_csv(samples: Iterable[MetricsSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in samples:
        w.writerow(s.row())
    return buf.getvalue()


def read_metrics_csv(text: str) -> list[MetricsSample]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [MetricsSample(int(r["t_s"]), r["constraint"], int(r["ghosts"]), float(r["query_time_ms"]),
                          int(float(r["triples_downloaded"])), int(float(r["complexity_iters"])),
                          float(r["reads_per_s"]), float(r["writes_per_s"])) for r in rows]


def mean_samples(runs: Sequence[Sequence[MetricsSample]]) -> list[dict[str, object]]:
    """Per-window arithmetic means over repeated runs (as plain CSV rows)."""
    if not runs:
        return []
    n = len(runs)
    out = []
    for window in zip(*runs):
        first = window[0]
        out.append({
            "t_s": first.t_s,
            "constraint": first.constraint,
            "ghosts": first.ghosts,
            **{k: sum(getattr(s, k) for s in window) / n for k in CSV_HEADER[3:]},
        })
    return out


def aggregate_csv(runs: Sequence[Sequence[MetricsSample]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    w.writeheader()
    w.writerows(mean_samples(runs))
    return buf.getvalue()


# -- pipeline ----------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    constraints: tuple[Constraint, ...] = tuple(Constraint)
    constraint_label: str = "all"
    speedup: float = 0.0
    detect: DetectConfig = DetectConfig()
    association: AssociationConfig = AssociationConfig()
    bus: BusConfig = BusConfig()


@dataclass
class RunResult:
    scenario: Scenario
    alerts: list[Alert]
    metrics: list[MetricsSample]
    report_log: list[str]
    batch_sizes: list[int]
    cycles: int
    store: TripleStore
    ingestor: Ingestor
    ghost_labels: dict[str, int] = field(default_factory=dict)

    def alert_text(self) -> str:
        return "".join(a.line() + "\n" for a in self.alerts)

    def report_log_text(self) -> str:
        return "".join(line + "\n" for line in self.report_log)

    def detected(self) -> dict[Constraint, set[int]]:
        by_cs = detected_ghosts(self.alerts, self.ghost_labels)
        return {c: {self.ghost_labels[cs] for cs in v} for c, v in by_cs.items()}

    def false_positives(self) -> list[Alert]:
        return [a for a in self.alerts if a.callsign not in self.ghost_labels]


def cycle_times(duration_s: int, interval_s: int) -> list[int]:
    times = list(range(interval_s, duration_s, interval_s))
    return times + [duration_s]


class _Pipeline:
    def __init__(self, scenario: Scenario, cfg: PipelineConfig):
        self.scenario = scenario
        self.cfg = cfg
        self.store = TripleStore()
        self.ingestor = Ingestor(self.store, cfg.association)
        self.bus = ReportBus(cfg.bus)
        self.detector = Detector(Geometry.from_scenario(scenario), cfg.detect, cfg.constraints)
        self.metrics = MetricsRecorder(self.store, scenario.duration_s)
        self.sink = AlertSink()
        self.report_log: list[str] = []
        self.batch_sizes: list[int] = []
        self._ingest_lock = threading.Lock()

    def load_base(self) -> None:
        self.metrics.insert(0, self.ingestor.load_base(base_triples(self.scenario)))

    def feed(self, t: int, reports: Sequence[PositionReport]) -> None:
        for r in reports:
            self.report_log.append(format_report(r))
            self.bus.publish(r, t)
        self._ingest_ready(t)

    def finish(self) -> None:
        self.bus.close(self.scenario.duration_s)
        self._ingest_ready(self.scenario.duration_s)

    def _ingest_ready(self, t: float) -> None:
        for batch in self.bus.drain():
            self.batch_sizes.append(len(batch))
            with self._ingest_lock:
                summary = self.ingestor.ingest_batch(batch)
            self.metrics.insert(t, summary.insert_seconds)

    def cycle(self, t: int) -> list[Alert]:
        alerts = self.detector.run_cycle(self.store, t)
        self.record(t)
        return alerts

    def record(self, t: int) -> None:
        for rec in self.detector.drain_query_log():
            self.metrics.select(t, rec.elapsed, rec.rows, rec.pattern_count, rec.iterations)
        self.metrics.close_through(t)


def run_pipeline(
    scenario: Scenario,
    cfg: PipelineConfig = PipelineConfig(),
    ticks: Iterable[tuple[int, Sequence[PositionReport]]] | None = None,
) -> RunResult:
    """Run the full pipeline over `scenario` (already restricted to its ghosts).

    With speedup 0 everything runs on the calling thread: each tick's reports
    are published and ingested, then the detection cycle due at that tick (if
    any) runs. Ticks cover [0, duration); the last cycle runs at t=duration
    after the bus is closed and its residual batch ingested.
    """
    p = _Pipeline(scenario, cfg)
    if ticks is None:
        ticks = simulate(scenario, SimClock(speedup=cfg.speedup))
    if cfg.speedup > 0:
        cycles = _run_threaded(p, ticks, cfg.speedup)
    else:
        cycles = _run_interleaved(p, ticks)
    return RunResult(
        scenario=scenario,
        alerts=p.sink.snapshot(),
        metrics=p.metrics.samples(cfg.constraint_label, len(scenario.ghost_flights)),
        report_log=p.report_log,
        batch_sizes=p.batch_sizes,
        cycles=cycles,
        store=p.store,
        ingestor=p.ingestor,
        ghost_labels=ground_truth_ghosts(scenario),
    )


def _run_interleaved(p: _Pipeline, ticks: Iterable[tuple[int, Sequence[PositionReport]]]) -> int:
    duration = p.scenario.duration_s
    due = cycle_times(duration, p.cfg.detect.detection_interval_s)
    next_cycle = 0
    p.load_base()
    for t, reports in ticks:
        if t >= duration:
            break
        p.feed(t, reports)
        while next_cycle < len(due) and due[next_cycle] <= t:
            p.sink.extend(p.cycle(due[next_cycle]))
            next_cycle += 1
    p.finish()
    while next_cycle < len(due):
        p.sink.extend(p.cycle(due[next_cycle]))
        next_cycle += 1
    return len(due)


def _run_threaded(p: _Pipeline, ticks: Iterable[tuple[int, Sequence[PositionReport]]], speedup: float) -> int:
    duration = p.scenario.duration_s
    tick_real_s = 1.0 / speedup
    progress = [-1.0]  # simulated time up to which ingestion is complete
    cycles = [0]
    stop = threading.Event()
    errors: list[BaseException] = []

    def detect() -> None:
        try:
            cycles[0] = detection_loop(p.store, p.detector, p.sink, lambda: progress[0], duration,
                                       stop, time.sleep, p.record)
        except BaseException as exc:  # re-raised on the calling thread
            errors.append(exc)

    p.load_base()
    worker = threading.Thread(target=detect, name="detect", daemon=True)
    worker.start()
    try:
        started = time.perf_counter()
        for t, reports in ticks:
            if t >= duration:
                break
            p.feed(t, reports)
            progress[0] = t
            lag = started + (t + 1) * tick_real_s - time.perf_counter()
            if lag > 0:
                time.sleep(lag)
        p.finish()
        progress[0] = duration
    except BaseException:
        stop.set()
        raise
    finally:
        worker.join()
    if errors:
        raise errors[0]
    return cycles[0]


def summarize(result: RunResult) -> str:
    labels = result.ghost_labels
    by_label = {v: k for k, v in labels.items()}
    lines = [f"ghosts spawned: {len(labels)}  alerts: {len(result.alerts)}  cycles: {result.cycles}"]
    detected = result.detected()
    for c in Constraint:
        found = sorted(detected[c])
        names = ", ".join(f"({i}) {by_label[i]}" for i in found) or "none"
        lines.append(f"{c.value}: {len(found)} ghost(s) detected: {names}")
    fp = result.false_positives()
    lines.append(f"alerts on non-ghost traffic: {len(fp)}")
    return "\n".join(lines)
