from __future__ import annotations

import time

import pytest

from ghostwatch.detect import Constraint
from ghostwatch.harness import PipelineConfig, RunResult, run_pipeline
from ghostwatch.scenario import load_scenario_file

# criterion -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


class RunCache:
    """Reference-scenario runs keyed by (ghosts, constraint, repetition)."""

    def __init__(self):
        self.scenario = load_scenario_file("ref")
        self._runs: dict[tuple[int, str, int], RunResult] = {}
        self.elapsed: dict[tuple[int, str, int], float] = {}

    def get(self, ghosts: int, constraint: str = "all", rep: int = 0) -> RunResult:
        key = (ghosts, constraint, rep)
        if key not in self._runs:
            cfg = PipelineConfig(Constraint.select(constraint), constraint)
            start = time.perf_counter()
            self._runs[key] = run_pipeline(self.scenario.with_ghosts(ghosts), cfg)
            self.elapsed[key] = time.perf_counter() - start
        return self._runs[key]


@pytest.fixture(scope="session")
def runs() -> RunCache:
    return RunCache()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
