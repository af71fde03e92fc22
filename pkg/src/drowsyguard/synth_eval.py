"""Synthetic labeled sessions and the evaluation harness.

Scenarios script a session as non-overlapping segments (open, blink,
drowsy, occlusion) on a timeline; the generator renders them into mesh
frames whose eye landmarks produce an exact requested EAR, optionally
with Gaussian landmark noise. Labels fall out of the script verbatim,
so evaluation against detector output needs no human annotation.

Geometry: each eye is built canonically with corner distance W px and
both vertical lid pairs offset by ±target·W/2, making the aspect ratio
exactly the target. Noise is specified in EAR units and applied to
landmark positions as sigma_px = noise_sigma·W so it reaches the
detector through the real geometry path, not as a shortcut on the
ratio itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Iterable, Iterator

import numpy as np

from .detector import DetectorConfig, EyeEvent
from .errors import InvalidScenario, TargetOutOfRange, UnsortedEvents
from .mesh import DEFAULT_EYES, LANDMARK_COUNT, MeshFrame

OPEN_EAR = 0.32
CLOSED_EAR = 0.10
SEGMENT_KINDS = ("open", "blink", "drowsy", "occlusion")
FRAME_WIDTH = 640
FRAME_HEIGHT = 480

_EYE_WIDTH_FRAC = 0.12  # eye corner distance as a fraction of image width
_LEFT_CENTER = (0.35, 0.45)
_RIGHT_CENTER = (0.65, 0.45)
_LEFT_IDX = np.array(DEFAULT_EYES.left)
_RIGHT_IDX = np.array(DEFAULT_EYES.right)
# per-landmark placement for (p1..p6): x offsets in eye widths, y in
# half-openings (negative is up in image coordinates)
_X_OFF = np.array([-0.5, -1 / 6, 1 / 6, 0.5, 1 / 6, -1 / 6])
_Y_SIGN = np.array([0.0, -0.5, -0.5, 0.0, 0.5, 0.5])
_CHUNK = 256


@dataclass(frozen=True)
class Segment:
    """One scripted span. target_ear of None means the kind's default."""

    kind: str
    start_ms: int
    end_ms: int
    target_ear: float | None = None

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise InvalidScenario(f"unknown segment kind {self.kind!r}")
        if not 0 <= self.start_ms < self.end_ms:
            raise InvalidScenario(
                f"segment span [{self.start_ms}, {self.end_ms}) is empty or negative"
            )
        if self.kind == "occlusion" and self.target_ear is not None:
            raise InvalidScenario("occlusion segments have no target EAR")
        if self.target_ear is not None and not 0.0 < self.target_ear < 1.0:
            raise InvalidScenario(f"target_ear {self.target_ear} outside (0, 1)")

    @property
    def effective_target(self) -> float | None:
        if self.kind == "occlusion":
            return None
        if self.target_ear is not None:
            return self.target_ear
        return OPEN_EAR if self.kind == "open" else CLOSED_EAR


@dataclass(frozen=True)
class Scenario:
    fps: float = 25.0
    duration_ms: int = 10_000
    segments: tuple[Segment, ...] = ()
    noise_sigma: float = 0.01  # EAR units
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not 0.0 < self.fps <= 1000.0:
            raise InvalidScenario(f"fps {self.fps} outside (0, 1000]")
        if self.duration_ms <= 0:
            raise InvalidScenario("duration_ms must be > 0")
        if self.noise_sigma < 0:
            raise InvalidScenario("noise_sigma must be >= 0")
        # targets must clear the default hysteresis band, otherwise the
        # script's ground truth does not mean what the labels claim
        cfg = DetectorConfig()
        prev_end = 0
        for seg in self.segments:
            if seg.start_ms < prev_end:
                raise InvalidScenario(
                    f"segments overlap or are unsorted at {seg.start_ms} ms"
                )
            if seg.end_ms > self.duration_ms:
                raise InvalidScenario(f"segment past duration at {seg.end_ms} ms")
            t = seg.effective_target
            if seg.kind == "open" and t <= cfg.ear_open_threshold:
                raise InvalidScenario(
                    f"open target {t} not above {cfg.ear_open_threshold}"
                )
            if seg.kind in ("blink", "drowsy") and t >= cfg.ear_close_threshold:
                raise InvalidScenario(
                    f"closed target {t} not below {cfg.ear_close_threshold}"
                )
            prev_end = seg.end_ms


@dataclass(frozen=True)
class SessionLabels:
    """Ground truth: the non-open segments, spans verbatim.

    duration_ms is carried along so rate-per-hour and frame counts can
    be computed from the labels file alone.
    """

    fps: float
    duration_ms: int
    episodes: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "episodes", tuple(self.episodes))


@dataclass(frozen=True)
class EvalReport:
    drowsy_recall: float
    missed_episodes: int
    false_alerts: int
    false_alert_rate: float  # per hour of session time
    occlusion_false_alerts: int
    mean_latency_ms: float | None
    max_latency_ms: int | None
    blink_count_error: int
    frames_evaluated: int


def frame_count(duration_ms: int, fps: float) -> int:
    return int(duration_ms * fps / 1000.0)


def frame_ts(index: int, fps: float) -> int:
    return round(index * 1000.0 / fps)


def _base_face(rng: np.random.Generator) -> np.ndarray:
    """Static filler for the 462 landmarks the detector never reads."""
    face = np.empty((LANDMARK_COUNT, 3))
    face[:, 0] = 0.25 + 0.5 * rng.random(LANDMARK_COUNT)
    face[:, 1] = 0.20 + 0.6 * rng.random(LANDMARK_COUNT)
    face[:, 2] = 0.1 * rng.random(LANDMARK_COUNT) - 0.05
    return face


def _place_eyes(arr: np.ndarray, left: np.ndarray, right: np.ndarray,
                w: int, h: int) -> None:
    """Overwrite the 12 eye rows of (n, 468, 3) so each frame's EAR is exact."""
    w_px = _EYE_WIDTH_FRAC * w
    for (cx, cy), idx, targets in (
        (_LEFT_CENTER, _LEFT_IDX, left),
        (_RIGHT_CENTER, _RIGHT_IDX, right),
    ):
        arr[:, idx, 0] = (cx * w + _X_OFF * w_px) / w
        arr[:, idx, 1] = (cy * h + np.outer(targets, _Y_SIGN) * w_px) / h
        arr[:, idx, 2] = 0.0


def _add_noise(arr: np.ndarray, noise_sigma: float, w: int, h: int,
               rng: np.random.Generator) -> None:
    if noise_sigma <= 0.0:
        return
    sigma_px = noise_sigma * _EYE_WIDTH_FRAC * w
    n, k = arr.shape[0], arr.shape[1]
    arr[:, :, 0] += rng.normal(0.0, sigma_px, (n, k)) / w
    arr[:, :, 1] += rng.normal(0.0, sigma_px, (n, k)) / h


def _to_frame(row: np.ndarray, ts_ms: int, w: int, h: int) -> MeshFrame:
    return MeshFrame(
        ts_ms=ts_ms, width=w, height=h, face_present=True,
        landmarks=tuple(map(tuple, row.tolist())),
    )


def make_eye_frame(target_left: float, target_right: float, ts_ms: int,
                   w: int, h: int, rng: np.random.Generator, *,
                   noise_sigma: float = 0.0) -> MeshFrame:
    """One face frame whose eyes hit the requested ratios exactly.

    Noise, when requested, is added after the exact placement, so the
    expected EAR stays the target and the spread follows noise_sigma.
    """
    for t in (target_left, target_right):
        if not (math.isfinite(t) and 0.0 <= t <= 1.0):
            raise TargetOutOfRange(f"target EAR {t} outside [0, 1]")
    arr = _base_face(rng)[np.newaxis, :, :].copy()
    _place_eyes(arr, np.array([target_left]), np.array([target_right]), w, h)
    _add_noise(arr, noise_sigma, w, h, rng)
    return _to_frame(arr[0], ts_ms, w, h)


def gen_scenario(scenario: Scenario, *, width: int = FRAME_WIDTH,
                 height: int = FRAME_HEIGHT) -> tuple[Iterator[MeshFrame], SessionLabels]:
    """Render a scenario into a lazy frame stream plus its ground truth."""
    labels = SessionLabels(
        fps=scenario.fps,
        duration_ms=scenario.duration_ms,
        episodes=tuple(s for s in scenario.segments if s.kind != "open"),
    )
    return _frames(scenario, width, height), labels


def _frames(scenario: Scenario, w: int, h: int) -> Iterator[MeshFrame]:
    n = frame_count(scenario.duration_ms, scenario.fps)
    ts = [frame_ts(i, scenario.fps) for i in range(n)]
    ts_arr = np.array(ts) if n else np.empty(0, dtype=int)
    targets = np.full(n, OPEN_EAR)
    occluded = np.zeros(n, dtype=bool)
    for seg in scenario.segments:
        mask = (ts_arr >= seg.start_ms) & (ts_arr < seg.end_ms)
        if seg.kind == "occlusion":
            occluded[mask] = True
        else:
            targets[mask] = seg.effective_target

    rng = np.random.default_rng(scenario.seed)
    base = _base_face(rng)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        arr = np.broadcast_to(base, (hi - lo, LANDMARK_COUNT, 3)).copy()
        _place_eyes(arr, targets[lo:hi], targets[lo:hi], w, h)
        _add_noise(arr, scenario.noise_sigma, w, h, rng)
        for j in range(hi - lo):
            i = lo + j
            if occluded[i]:
                yield MeshFrame(ts_ms=ts[i], width=w, height=h,
                                face_present=False, landmarks=())
            else:
                yield _to_frame(arr[j], ts[i], w, h)


def evaluate(events: Iterable[EyeEvent], labels: SessionLabels,
             match_tolerance_ms: int = 500) -> EvalReport:
    """Score detector output against ground truth.

    An episode is matched by the first onset falling in
    [start_ms, end_ms + tolerance]; each onset matches at most one
    episode, greedily in time order. Unmatched onsets are false alerts,
    attributed to occlusion when they land in an occlusion span (plus
    the same tolerance).
    """
    events = list(events)
    last = None
    for e in events:
        if last is not None and e.ts_ms < last:
            raise UnsortedEvents(f"event at {e.ts_ms} ms after {last} ms")
        last = e.ts_ms

    drowsy = [s for s in labels.episodes if s.kind == "drowsy"]
    occlusions = [s for s in labels.episodes if s.kind == "occlusion"]
    labeled_blinks = sum(1 for s in labels.episodes if s.kind == "blink")
    detected_blinks = sum(1 for e in events if e.kind == "blink")
    onsets = [e.ts_ms for e in events if e.kind == "drowsy_onset"]

    matched = [False] * len(drowsy)
    latencies: list[int] = []
    false_ts: list[int] = []
    for ts in onsets:
        for k, seg in enumerate(drowsy):
            if not matched[k] and seg.start_ms <= ts <= seg.end_ms + match_tolerance_ms:
                matched[k] = True
                latencies.append(ts - seg.start_ms)
                break
        else:
            false_ts.append(ts)

    n_matched = sum(matched)
    hours = labels.duration_ms / 3_600_000.0
    return EvalReport(
        drowsy_recall=n_matched / len(drowsy) if drowsy else 1.0,
        missed_episodes=len(drowsy) - n_matched,
        false_alerts=len(false_ts),
        false_alert_rate=len(false_ts) / hours,
        occlusion_false_alerts=sum(
            1 for ts in false_ts
            if any(s.start_ms <= ts <= s.end_ms + match_tolerance_ms
                   for s in occlusions)
        ),
        mean_latency_ms=sum(latencies) / len(latencies) if latencies else None,
        max_latency_ms=max(latencies) if latencies else None,
        blink_count_error=abs(detected_blinks - labeled_blinks),
        frames_evaluated=frame_count(labels.duration_ms, labels.fps),
    )


def evaluate_corpus(
    runs: Iterable[tuple[Iterable[EyeEvent], SessionLabels]],
    match_tolerance_ms: int = 500,
) -> tuple[list[EvalReport], EvalReport]:
    """Per-session reports plus a pooled report over raw counts.

    Pooling is micro-style: counts are summed before ratios are taken,
    so long sessions weigh more than short ones. Macro averages can be
    had from the per-session list.
    """
    reports: list[EvalReport] = []
    tot_drowsy = tot_matched = tot_false = tot_occ = 0
    tot_blink_err = tot_frames = tot_ms = 0
    lat_sum = 0.0
    lat_n = 0
    lat_max: int | None = None
    for events, labels in runs:
        report = evaluate(events, labels, match_tolerance_ms)
        reports.append(report)
        n_drowsy = sum(1 for s in labels.episodes if s.kind == "drowsy")
        n_matched = n_drowsy - report.missed_episodes
        tot_drowsy += n_drowsy
        tot_matched += n_matched
        tot_false += report.false_alerts
        tot_occ += report.occlusion_false_alerts
        tot_blink_err += report.blink_count_error
        tot_frames += report.frames_evaluated
        tot_ms += labels.duration_ms
        if report.mean_latency_ms is not None:
            lat_sum += report.mean_latency_ms * n_matched
            lat_n += n_matched
            lat_max = (report.max_latency_ms if lat_max is None
                       else max(lat_max, report.max_latency_ms))
    hours = tot_ms / 3_600_000.0
    pooled = EvalReport(
        drowsy_recall=tot_matched / tot_drowsy if tot_drowsy else 1.0,
        missed_episodes=tot_drowsy - tot_matched,
        false_alerts=tot_false,
        false_alert_rate=tot_false / hours if hours > 0 else 0.0,
        occlusion_false_alerts=tot_occ,
        mean_latency_ms=lat_sum / lat_n if lat_n else None,
        max_latency_ms=lat_max,
        blink_count_error=tot_blink_err,
        frames_evaluated=tot_frames,
    )
    return reports, pooled


def save_scenario(scenario: Scenario, path: str) -> None:
    doc = {
        "fps": scenario.fps,
        "duration_ms": scenario.duration_ms,
        "segments": [
            {k: v for k, v in asdict(s).items() if v is not None}
            for s in scenario.segments
        ],
        "noise_sigma": scenario.noise_sigma,
        "seed": scenario.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        segments = tuple(Segment(**s) for s in doc.pop("segments", []))
        return Scenario(segments=segments, **doc)
    except InvalidScenario:
        raise
    except (OSError, ValueError, TypeError) as exc:
        raise InvalidScenario(f"unreadable scenario file {path}: {exc}") from exc


def save_labels(labels: SessionLabels, path: str) -> None:
    doc = {
        "fps": labels.fps,
        "duration_ms": labels.duration_ms,
        "episodes": [
            {"kind": s.kind, "start_ms": s.start_ms, "end_ms": s.end_ms}
            for s in labels.episodes
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_labels(path: str) -> SessionLabels:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        episodes = tuple(Segment(**s) for s in doc.pop("episodes", []))
        return SessionLabels(episodes=episodes, **doc)
    except InvalidScenario:
        raise
    except (OSError, ValueError, TypeError) as exc:
        raise InvalidScenario(f"unreadable labels file {path}: {exc}") from exc


def format_report(report: EvalReport) -> str:
    """Human-readable table, one metric per line."""
    def fmt(v):
        if v is None:
            return "n/a"
        if isinstance(v, float):
            return f"{v:.3f}"
        return str(v)

    rows = [(name, fmt(getattr(report, name))) for name in (
        "drowsy_recall", "missed_episodes", "false_alerts",
        "false_alert_rate", "occlusion_false_alerts", "mean_latency_ms",
        "max_latency_ms", "blink_count_error", "frames_evaluated",
    )]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)
