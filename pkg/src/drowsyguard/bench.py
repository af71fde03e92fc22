"""Throughput benchmark over the full parse -> EAR -> detector path.

Frames are generated and serialized up front; only the consuming path
is timed, with the garbage collector left in its normal state. The
workload mixes blinks and drowsy episodes so event emission is part of
the measured cost, and landmark noise keeps float parsing honest
(full-precision coordinates, as a live adapter would send).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .detector import DetectorConfig, DetectorState, detector_step, finalize
from .ear import frame_ear
from .mesh import encode_frame, parse_frame
from .synth_eval import Scenario, Segment, gen_scenario

BENCH_FPS = 25.0


@dataclass(frozen=True)
class BenchReport:
    frames: int
    wall_s: float
    cpu_s: float
    fps: float  # frames per wall-clock second
    cpu_fps: float
    events: int

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "wall_s": round(self.wall_s, 6),
            "cpu_s": round(self.cpu_s, 6),
            "fps": round(self.fps, 1),
            "cpu_fps": round(self.cpu_fps, 1),
            "events": self.events,
        }


def bench_scenario(n_frames: int, seed: int = 0) -> Scenario:
    """A session long enough for n_frames with periodic blinks and episodes."""
    duration_ms = max(1000, int(n_frames * 1000 / BENCH_FPS))
    segments = []
    t = 2000
    slot = 0
    while t + 1500 <= duration_ms:
        if slot % 8 == 7:
            segments.append(Segment("drowsy", t, t + 1200))
        else:
            segments.append(Segment("blink", t, t + 120))
        slot += 1
        t += 2000
    return Scenario(fps=BENCH_FPS, duration_ms=duration_ms,
                    segments=tuple(segments), seed=seed)


def make_bench_lines(n_frames: int, seed: int = 0) -> list[bytes]:
    """Wire-format lines, pre-encoded so only consumption is timed."""
    frames, _ = gen_scenario(bench_scenario(n_frames, seed))
    lines = []
    for frame in frames:
        if len(lines) == n_frames:
            break
        lines.append(encode_frame(frame))
    return lines


def run_bench(n_frames: int, seed: int = 0) -> BenchReport:
    lines = make_bench_lines(n_frames, seed)
    config = DetectorConfig()
    state = DetectorState()
    n_events = 0

    wall0 = time.perf_counter()
    cpu0 = time.process_time()
    for line_no, line in enumerate(lines, start=1):
        frame = parse_frame(line, line_no=line_no)
        sample = frame_ear(frame)
        _, events = detector_step(state, sample, config)
        n_events += len(events)
    n_events += len(finalize(state))
    wall = time.perf_counter() - wall0
    cpu = time.process_time() - cpu0

    n = len(lines)
    return BenchReport(
        frames=n,
        wall_s=wall,
        cpu_s=cpu,
        fps=n / wall if wall > 0 and n else 0.0,
        cpu_fps=n / cpu if cpu > 0 and n else 0.0,
        events=n_events,
    )


def format_bench(report: BenchReport) -> str:
    return (
        f"{report.frames} frames in {report.wall_s:.3f} s"
        f" -> {report.fps:,.0f} frames/s wall, {report.cpu_fps:,.0f} frames/s cpu,"
        f" {report.events} events"
    )
