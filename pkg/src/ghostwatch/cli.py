"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 scenario/parse error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .detect import Constraint
from .harness import (
    PipelineConfig,
    ReportLogError,
    RunResult,
    aggregate_csv,
    metrics_csv,
    read_report_log,
    run_pipeline,
    summarize,
    ticks_from_log,
)
from .kg import QueryError, load_snapshot, parse_query
from .scenario import Scenario, ScenarioError, load_scenario_file

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser, ghosts: bool = True) -> None:
    p.add_argument("--scenario", default="ref", help="scenario file, or 'ref' for the bundled one")
    if ghosts:
        p.add_argument("--ghosts", type=int, default=None, help="ghosts to spawn (default: all in scenario)")
    p.add_argument("--constraint", default="all", choices=("track", "radar", "flight", "all"))
    p.add_argument("--duration", type=int, default=None, help="override scenario duration (s)")
    p.add_argument("--speedup", type=float, default=0.0,
                   help="simulated seconds per real second; 0 runs as fast as possible, deterministically")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p.add_argument("--metrics", type=Path, help="metrics CSV output")
    p.add_argument("--alerts", type=Path, help="alert stream output")
    p.add_argument("--report-log", type=Path, help="write every published report here")
    p.add_argument("--snapshot", type=Path, help="dump the final triple store here")
    p.add_argument("--repetitions", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ghostwatch", description="Ghost aircraft detection over a simulated surveillance feed.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate, ingest and detect")
    _add_run_flags(run)

    replay = sub.add_parser("replay", help="feed a recorded report log through the pipeline")
    replay.add_argument("log", type=Path)
    _add_run_flags(replay, ghosts=False)

    query = sub.add_parser("query", help="evaluate a query against a store snapshot")
    query.add_argument("snapshot", type=Path)
    query.add_argument("query", help="query text, or @path to read it from a file")

    check = sub.add_parser("scenario-check", help="validate a scenario file")
    check.add_argument("scenario")
    return parser


def _scenario(args) -> Scenario:
    sc = load_scenario_file(args.scenario)
    changes = {}
    if args.duration is not None:
        if args.duration <= 0:
            raise UsageError("--duration must be positive")
        changes["duration_s"] = args.duration
    if args.seed is not None:
        changes["seed"] = args.seed
    return replace(sc, **changes) if changes else sc


def _pipeline_config(args) -> PipelineConfig:
    if args.speedup < 0:
        raise UsageError("--speedup must be >= 0")
    if args.repetitions < 1:
        raise UsageError("--repetitions must be >= 1")
    return PipelineConfig(constraints=Constraint.select(args.constraint), constraint_label=args.constraint,
                          speedup=args.speedup)


def _run_path(path: Path | None, rep: int, total: int) -> Path | None:
    if path is None or total == 1:
        return path
    return path.with_name(f"{path.stem}.run{rep}{path.suffix}")


def _write_outputs(args, results: list[RunResult]) -> None:
    n = len(results)
    for i, res in enumerate(results, start=1):
        if args.alerts:
            _run_path(args.alerts, i, n).write_text(res.alert_text(), encoding="utf-8")
        if args.report_log:
            _run_path(args.report_log, i, n).write_text(res.report_log_text(), encoding="utf-8")
        if args.metrics:
            _run_path(args.metrics, i, n).write_text(metrics_csv(res.metrics), encoding="utf-8")
        if args.snapshot:
            _run_path(args.snapshot, i, n).write_text(res.store.dump(), encoding="utf-8")
    if args.metrics and n > 1:
        args.metrics.write_text(aggregate_csv([r.metrics for r in results]), encoding="utf-8")


def cmd_run(args) -> int:
    sc = _scenario(args)
    ghosts = len(sc.ghost_flights) if args.ghosts is None else args.ghosts
    if not 0 <= ghosts <= len(sc.ghost_flights):
        raise UsageError(f"--ghosts must be within 0..{len(sc.ghost_flights)}")
    sc = sc.with_ghosts(ghosts)
    cfg = _pipeline_config(args)
    results = [run_pipeline(sc, cfg) for _ in range(args.repetitions)]
    _write_outputs(args, results)
    for i, res in enumerate(results, start=1):
        if len(results) > 1:
            print(f"-- run {i}")
        print(summarize(res))
    return EXIT_OK


def cmd_replay(args) -> int:
    sc = _scenario(args)
    reports = read_report_log(args.log.read_text(encoding="utf-8"))
    seen = {getattr(r, "callsign", None) for r in reports}
    # ground truth: the scenario's ghosts that actually appear in the log
    sc = replace(sc, ghost_flights=tuple(g for g in sc.ghost_flights if g.callsign in seen))
    cfg = _pipeline_config(args)
    results = [run_pipeline(sc, cfg, ticks_from_log(reports, sc.duration_s)) for _ in range(args.repetitions)]
    _write_outputs(args, results)
    for res in results:
        print(summarize(res))
    return EXIT_OK


def cmd_query(args) -> int:
    text = args.query
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    query = parse_query(text)
    store = load_snapshot(args.snapshot.read_text(encoding="utf-8"))
    result = store.evaluate(query)
    print(result.table())
    st = result.stats
    print(f"# rows={len(result)} iterations={st.iterations} triples_read={st.triples_read} "
          f"elapsed_ms={st.elapsed * 1000:.3f}")
    return EXIT_OK


def cmd_scenario_check(args) -> int:
    sc = load_scenario_file(args.scenario)
    print(f"ok: {len(sc.airports)} airports, {len(sc.coverage_areas)} reporters, "
          f"{len(sc.legit_flights)} flights, {len(sc.ghost_flights)} ghosts, duration {sc.duration_s} s")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "replay": cmd_replay, "query": cmd_query, "scenario-check": cmd_scenario_check}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ghostwatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, QueryError, ReportLogError) as exc:
        print(f"ghostwatch: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"ghostwatch: {exc}", file=sys.stderr)
        return EXIT_PARSE if args.command in ("query", "replay", "scenario-check") else EXIT_RUNTIME
    except Exception as exc:
        logging.getLogger("ghostwatch").debug("run failed", exc_info=True)
        print(f"ghostwatch: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
