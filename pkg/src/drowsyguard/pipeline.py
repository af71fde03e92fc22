"""Stream orchestration: sources, pacing, detector loop, sinks, alarm.

One ingest loop owns the detector state. Events are handed to sinks
through a bounded queue serviced by a single dispatcher thread, so a
slow sink cannot stall frame processing; if the queue fills, the run
aborts with SinkBackpressure rather than silently dropping events.
The alarm action is the exception: it fires synchronously inside the
frame iteration that produced the triggering event, because its whole
point is immediacy.

Event timestamps are session time (ts_ms from the frames), never the
wall clock, so replays of the same session are bit-identical in fast
and realtime pacing.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import socket
import subprocess
import sys
import threading
import time
from collections import Counter
from contextlib import ExitStack
from dataclasses import dataclass, field
from typing import Callable, IO, Iterable

from .detector import (
    ALERT_KINDS,
    DetectorConfig,
    DetectorState,
    EVENT_KINDS,
    EyeEvent,
    detector_step,
    finalize,
)
from .ear import frame_ear
from .errors import (
    BadLineBudgetExceeded,
    ConfigError,
    ParseError,
    SinkBackpressure,
    SourceUnavailable,
)
from .mesh import parse_frame

SINK_QUEUE_SIZE = 1024
DEFAULT_BAD_LINE_BUDGET = 10

Sink = Callable[[EyeEvent], None]


@dataclass(frozen=True)
class SourceSpec:
    """Where frames come from and how they are paced.

    tcp sources listen on the given address and read a single inbound
    connection until it closes; the peer (normally a camera adapter)
    dials in and pushes the session wire format.
    """

    kind: str  # file | stdin | tcp
    target: str = ""  # path for file, host:port for tcp
    pacing: str = "realtime"  # realtime | fast

    def __post_init__(self):
        if self.kind not in ("file", "stdin", "tcp"):
            raise ConfigError(f"unknown source kind {self.kind!r}")
        if self.pacing not in ("realtime", "fast"):
            raise ConfigError(f"unknown pacing {self.pacing!r}")
        if self.kind == "file" and not self.target:
            raise ConfigError("file source needs a path")
        if self.kind == "tcp":
            host, _, port = self.target.rpartition(":")
            if not host or not port.isdigit() or not 0 < int(port) < 65536:
                raise ConfigError(f"tcp source needs host:port, got {self.target!r}")

    @classmethod
    def parse(cls, text: str, pacing: str = "realtime") -> "SourceSpec":
        """Build from the CLI notation: stdin, file:PATH or tcp:HOST:PORT."""
        if text == "stdin":
            return cls("stdin", pacing=pacing)
        kind, sep, target = text.partition(":")
        if sep and kind in ("file", "tcp"):
            return cls(kind, target, pacing)
        raise ConfigError(f"unknown source {text!r}")


@dataclass(frozen=True)
class AlertPolicy:
    """Which events sound the alarm and what the alarm does."""

    on_kinds: frozenset = frozenset(ALERT_KINDS)
    action: str = "bell"  # bell | exec | none
    command: str = ""

    def __post_init__(self):
        object.__setattr__(self, "on_kinds", frozenset(self.on_kinds))
        unknown = self.on_kinds - set(EVENT_KINDS)
        if unknown:
            raise ConfigError(f"unknown event kinds in alert policy: {sorted(unknown)}")
        if self.action not in ("bell", "exec", "none"):
            raise ConfigError(f"unknown alert action {self.action!r}")
        if self.action == "exec" and not self.command.strip():
            raise ConfigError("exec alert action needs a command")

    @classmethod
    def parse(cls, text: str) -> "AlertPolicy":
        """Build from the CLI notation: bell, none or exec:COMMAND."""
        if text in ("bell", "none"):
            return cls(action=text)
        kind, sep, command = text.partition(":")
        if kind == "exec" and sep:
            return cls(action="exec", command=command)
        raise ConfigError(f"unknown alert action {text!r}")


@dataclass(frozen=True)
class LatencyStats:
    count: int
    p50_ms: float | None
    p95_ms: float | None
    max_ms: float | None


@dataclass
class RunSummary:
    frames: int = 0
    invalid_frames: int = 0  # face absent or landmarks degenerate
    skipped_lines: int = 0  # malformed lines within the bad-line budget
    events: Counter = field(default_factory=Counter)
    proc_ms: tuple = ()  # per-frame processing cost, pacing excluded

    def to_dict(self) -> dict:
        stats = measure_latency(self)
        return {
            "frames": self.frames,
            "invalid_frames": self.invalid_frames,
            "skipped_lines": self.skipped_lines,
            "events": dict(sorted(self.events.items())),
            "latency_ms": {
                "p50": stats.p50_ms,
                "p95": stats.p95_ms,
                "max": stats.max_ms,
            },
        }


def event_to_json(event: EyeEvent) -> str:
    """One event as a compact JSON line body (no trailing newline)."""
    doc: dict = {"ts_ms": event.ts_ms, "type": event.kind}
    if event.ear is not None:
        doc["ear"] = event.ear
    if event.closed_frames is not None:
        doc["closed_frames"] = event.closed_frames
    if event.perclos is not None:
        doc["perclos"] = event.perclos
    return json.dumps(doc, separators=(",", ":"))


def line_sink(stream: IO[str]) -> Sink:
    """Sink writing one JSON line per event, flushed for live consumers."""

    def write(event: EyeEvent) -> None:
        stream.write(event_to_json(event) + "\n")
        stream.flush()

    return write


def measure_latency(summary: RunSummary) -> LatencyStats:
    """Nearest-rank percentiles of per-frame processing cost."""
    samples = sorted(summary.proc_ms)
    if not samples:
        return LatencyStats(0, None, None, None)

    def rank(q: float) -> float:
        return samples[max(0, math.ceil(q * len(samples)) - 1)]

    return LatencyStats(len(samples), rank(0.50), rank(0.95), samples[-1])


class _Alarm:
    """Fires the alert action; exec children are reaped at close."""

    def __init__(self, policy: AlertPolicy):
        self._policy = policy
        self._procs: list[subprocess.Popen] = []

    def fire(self, event: EyeEvent) -> None:
        if self._policy.action == "none" or event.kind not in self._policy.on_kinds:
            return
        if self._policy.action == "bell":
            sys.stderr.write("\a")
            sys.stderr.flush()
            return
        proc = subprocess.Popen(
            shlex.split(self._policy.command),
            stdin=subprocess.PIPE, text=True,
        )
        try:
            proc.stdin.write(event_to_json(event) + "\n")
            proc.stdin.close()
        except BrokenPipeError:
            pass
        self._procs.append(proc)

    def close(self) -> None:
        for proc in self._procs:
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()


class _Dispatcher:
    """Single worker draining the event queue into every sink, in order."""

    _STOP = object()

    def __init__(self, sinks: Iterable[Sink]):
        self._sinks = tuple(sinks)
        self._queue: queue.Queue = queue.Queue(maxsize=SINK_QUEUE_SIZE)
        self.error: BaseException | None = None
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self) -> None:
        while True:
            item = self._queue.get()
            if item is self._STOP:
                return
            try:
                for sink in self._sinks:
                    sink(item)
            except BaseException as exc:  # surfaced on the ingest thread
                self.error = exc
                return

    def put(self, event: EyeEvent) -> None:
        if self.error is not None:
            raise self.error
        try:
            self._queue.put_nowait(event)
        except queue.Full:
            raise SinkBackpressure(
                f"sink queue overflow at {SINK_QUEUE_SIZE} pending events"
            ) from None

    def close(self) -> None:
        try:
            self._queue.put(self._STOP, timeout=1)
        except queue.Full:
            while True:  # drain so the stop marker fits
                try:
                    self._queue.get_nowait()
                except queue.Empty:
                    break
            self._queue.put(self._STOP, timeout=1)
        self._thread.join(timeout=10)
        if self.error is not None:
            raise self.error


def _open_source(source: SourceSpec, stack: ExitStack) -> IO[bytes]:
    # binary mode throughout: the parser takes bytes directly, which
    # skips one whole decode pass per line
    if source.kind == "stdin":
        return sys.stdin.buffer
    if source.kind == "file":
        try:
            return stack.enter_context(open(source.target, "rb"))
        except OSError as exc:
            raise SourceUnavailable(f"cannot open {source.target}: {exc}") from exc
    host, _, port = source.target.rpartition(":")
    try:
        server = stack.enter_context(socket.create_server((host, int(port))))
        conn, _addr = server.accept()
        stack.enter_context(conn)
        return stack.enter_context(conn.makefile("rb"))
    except OSError as exc:
        raise SourceUnavailable(f"cannot listen on {source.target}: {exc}") from exc


def run_pipeline(
    source: SourceSpec,
    config: DetectorConfig | None = None,
    policy: AlertPolicy | None = None,
    sinks: Iterable[Sink] = (),
    *,
    bad_line_budget: int = DEFAULT_BAD_LINE_BUDGET,
) -> RunSummary:
    """Consume a session: parse, EAR, detect, emit; returns the summary.

    Malformed lines are counted and skipped until the budget is spent,
    then the run aborts with BadLineBudgetExceeded. Out-of-order
    timestamps abort immediately: that session is corrupt, not noisy.
    """
    config = config or DetectorConfig()
    policy = policy or AlertPolicy()
    summary = RunSummary()
    proc_ms: list[float] = []
    state = DetectorState()
    alarm = _Alarm(policy)
    dispatcher = _Dispatcher(sinks)
    realtime = source.pacing == "realtime"
    first_ts: int | None = None
    started = time.monotonic()

    def emit(events: list[EyeEvent]) -> None:
        for event in events:
            summary.events[event.kind] += 1
            alarm.fire(event)
            dispatcher.put(event)

    failed = False
    try:
        with ExitStack() as stack:
            stream = _open_source(source, stack)
            for line_no, line in enumerate(stream, start=1):
                if not line.strip():
                    continue
                t0 = time.perf_counter()
                try:
                    frame = parse_frame(line, line_no=line_no)
                except ParseError:
                    summary.skipped_lines += 1
                    if summary.skipped_lines > bad_line_budget:
                        raise BadLineBudgetExceeded(
                            f"more than {bad_line_budget} malformed lines",
                            line_no=line_no,
                        ) from None
                    continue
                parse_cost = time.perf_counter() - t0

                if realtime:
                    if first_ts is None:
                        first_ts = frame.ts_ms
                    delay = (frame.ts_ms - first_ts) / 1000.0 - (
                        time.monotonic() - started
                    )
                    if delay > 0:
                        time.sleep(delay)

                t1 = time.perf_counter()
                sample = frame_ear(frame)
                if not sample.valid:
                    summary.invalid_frames += 1
                _, events = detector_step(state, sample, config)
                emit(events)
                summary.frames += 1
                proc_ms.append((parse_cost + time.perf_counter() - t1) * 1000.0)
            emit(finalize(state))
    except BaseException:
        failed = True
        raise
    finally:
        alarm.close()
        summary.proc_ms = tuple(proc_ms)
        if failed:
            try:
                dispatcher.close()
            except Exception:
                pass  # the primary error is already propagating
    dispatcher.close()
    return summary
