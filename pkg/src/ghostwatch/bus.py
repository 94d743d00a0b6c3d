"""In-process report channel with count-based batching."""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

from .model import PositionReport


class BusClosed(Exception):
    pass


@dataclass(frozen=True)
class BusConfig:
    init_threshold: int = 400
    batch_size: int = 50

    def __post_init__(self) -> None:
        if self.init_threshold < 1 or self.batch_size < 1:
            raise ValueError("init_threshold and batch_size must be >= 1")


@dataclass(frozen=True)
class ReportBatch:
    seq: int
    reports: tuple[PositionReport, ...]
    emitted_at_s: float

    def __len__(self) -> int:
        return len(self.reports)


class ReportBus:
    """Buffers reports until `init_threshold` is reached, then releases
    fixed-size batches. `close()` flushes whatever is left.

    One publisher and one consumer may live on different threads.
    """

    def __init__(self, config: BusConfig | None = None):
        self.config = config or BusConfig()
        self._lock = threading.Lock()
        self._buffer: list[PositionReport] = []
        self._ready: deque[ReportBatch] = deque()
        self._seq = 0
        self._closed = False
        self.published = 0

    @property
    def closed(self) -> bool:
        return self._closed

    def _threshold(self) -> int:
        return self.config.init_threshold if self._seq == 0 else self.config.batch_size

    def _release(self, now_s: float) -> None:
        batch = ReportBatch(self._seq, tuple(self._buffer), now_s)
        self._buffer = []
        self._seq += 1
        self._ready.append(batch)

    def publish(self, report: PositionReport, now_s: float | None = None) -> int:
        """Append a report; returns the number of reports published so far."""
        with self._lock:
            if self._closed:
                raise BusClosed("publish on a closed bus")
            self._buffer.append(report)
            self.published += 1
            if len(self._buffer) >= self._threshold():
                self._release(report.timestamp if now_s is None else now_s)
            return self.published

    def poll_batch(self) -> ReportBatch | None:
        with self._lock:
            return self._ready.popleft() if self._ready else None

    def drain(self) -> list[ReportBatch]:
        with self._lock:
            out = list(self._ready)
            self._ready.clear()
            return out

    def close(self, now_s: float = 0.0) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            if self._buffer:
                self._release(now_s)
