"""Per-frame eye-state machine: blinks, closures, drowsiness, face loss.

Modes: no_face, open, closing (eyes closed, below the alert threshold),
drowsy (alert active). The eye is "closed" exactly when mode is closing
or drowsy. Per-sample transition rules, in the order they are applied:

invalid sample (no face / degenerate landmarks):
  a1. frames_since_face += 1.
  a2. if the face was not already lost and frames_since_face has reached
      face_lost_grace_frames: emit face_lost, then (if mode was drowsy)
      drowsy_end with ear=None; the pending closure run is abandoned
      without an event (occlusion is not closure) and mode becomes
      no_face. No refractory is started: a fresh alert after the face
      returns already needs consec_frames of evidence.
  a3. shorter invalid streaks suspend the detector: closure counting,
      classification, refractory and the rolling windows all hold still.

valid sample:
  b1. if mode is no_face: emit face_found; classification restarts open.
  b2. frames_since_face = 0.
  b3. refractory bookkeeping: the onset check below is blocked iff
      refractory_remaining > 0 at this point; the counter then loses one
      (refractory_frames thus blocks exactly that many valid frames
      after the drowsy_end that started it).
  b4. hysteresis: a closed eye reopens only when effective EAR rises
      strictly above ear_open_threshold; an open eye closes only when it
      falls strictly below ear_close_threshold; in between, the prior
      classification holds. Effective EAR is the EMA-smoothed mean when
      smoothing_alpha > 0, the raw mean otherwise.
  b5. closed: closed_count += 1. When closed_count >= consec_frames and
      the onset check is not blocked, mode becomes drowsy and
      drowsy_onset is emitted (once per episode).
  b6. reopen after a run of r closed frames: drowsy mode emits
      drowsy_end and starts the refractory counter; otherwise a blink
      when blink_min_frames <= r <= blink_max_frames, else a closure.
  b7. the PERCLOS/blink windows ingest this frame (window = trailing
      perclos_window_ms of valid frames, entries older-or-equal than
      ts - window evicted), so perclos fields on drowsy events include
      the current frame.
  b8. once the window is fully populated (ts - first valid ts >=
      perclos_window_ms) and the windowed blink rate drops below
      min_blinks_per_min, low_blink_rate is emitted, at most once per
      window span.

Event order within one sample: face_found, then the reopen event
(drowsy_end | blink | closure), then drowsy_onset, then low_blink_rate.

finalize() closes the stream: an open drowsy episode gets its drowsy_end
at the last seen ts_ms; a shorter pending run becomes a closure event
(no reopen was observed, so it is never promoted to a blink). Both carry
the most recent valid effective EAR, or ear=None if there was none.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .ear import EarSample, smooth_ear
from .errors import ConfigError, EmptyWindow, OutOfOrder

EVENT_KINDS = (
    "blink",
    "closure",
    "drowsy_onset",
    "drowsy_end",
    "low_blink_rate",
    "face_lost",
    "face_found",
)

ALERT_KINDS = ("drowsy_onset", "low_blink_rate")


@dataclass(frozen=True)
class DetectorConfig:
    """All detection thresholds and windows.

    Defaults: close below 0.25 / reopen above 0.28 (set both equal for a
    single-threshold rule), 20 consecutive frames to alert (0.8 s at
    25 fps), blinks are 1..7-frame closures, rolling window 60 s.
    """

    ear_close_threshold: float = 0.25
    ear_open_threshold: float = 0.28
    consec_frames: int = 20
    blink_min_frames: int = 1
    blink_max_frames: int = 7
    perclos_window_ms: int = 60_000
    min_blinks_per_min: float = 6.0
    face_lost_grace_frames: int = 10
    refractory_frames: int = 25
    smoothing_alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.ear_close_threshold <= self.ear_open_threshold < 1.0:
            raise ConfigError(
                "need 0 < ear_close_threshold <= ear_open_threshold < 1, got "
                f"{self.ear_close_threshold} / {self.ear_open_threshold}"
            )
        if not self.blink_min_frames <= self.blink_max_frames < self.consec_frames:
            raise ConfigError(
                "need blink_min_frames <= blink_max_frames < consec_frames, got "
                f"{self.blink_min_frames} / {self.blink_max_frames} / {self.consec_frames}"
            )
        for name in ("consec_frames", "blink_min_frames", "blink_max_frames",
                     "face_lost_grace_frames", "refractory_frames"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.perclos_window_ms <= 0:
            raise ConfigError("perclos_window_ms must be > 0")
        if self.min_blinks_per_min < 0:
            raise ConfigError("min_blinks_per_min must be >= 0")
        if not 0.0 <= self.smoothing_alpha <= 1.0:
            raise ConfigError("smoothing_alpha must be in [0, 1]")


@dataclass(frozen=True)
class EyeEvent:
    """One emitted detection event.

    ``ear`` is the effective EAR at emission (None for face events and
    for events emitted without a current valid sample); closure-family
    events carry ``closed_frames``; drowsy events carry ``perclos``.
    """

    kind: str
    ts_ms: int
    ear: float | None = None
    closed_frames: int | None = None
    perclos: float | None = None


@dataclass
class DetectorState:
    """Mutable per-stream state. Single-owner: exactly one stream mutates it."""

    mode: str = "open"  # no_face | open | closing | drowsy
    closed_count: int = 0
    frames_since_face: int = 0
    refractory_remaining: int = 0
    smoothed_ear: float | None = None
    last_ts: int | None = None
    last_valid_ear: float | None = None
    first_valid_ts: int | None = None
    last_low_blink_ts: int | None = None
    # rolling windows over valid frames: (ts_ms, closed) pairs plus a
    # running closed counter, and blink reopen timestamps
    _win: deque = field(default_factory=deque)
    _win_closed: int = 0
    _blink_ts: deque = field(default_factory=deque)
    _window_ms: int = 60_000


def perclos(state: DetectorState) -> float:
    """Fraction of valid frames in the rolling window classified closed."""
    if not state._win:
        raise EmptyWindow("no valid frames in the PERCLOS window")
    return state._win_closed / len(state._win)


def blink_rate(state: DetectorState) -> float:
    """Blinks per minute over the rolling window.

    Normalized by actual coverage: observed session time since the first
    valid frame, capped at the window length. Zero when coverage is
    still a single instant.
    """
    if not state._win:
        raise EmptyWindow("no valid frames in the blink-rate window")
    coverage_ms = min(state._win[-1][0] - state.first_valid_ts, state._window_ms)
    if coverage_ms <= 0:
        return 0.0
    return len(state._blink_ts) / (coverage_ms / 60_000.0)


def _perclos_or_none(state: DetectorState) -> float | None:
    return state._win_closed / len(state._win) if state._win else None


def detector_step(
    state: DetectorState, sample: EarSample, config: DetectorConfig
) -> tuple[DetectorState, list[EyeEvent]]:
    """Advance the state machine by one sample; returns (state, events).

    The returned state is the input state, mutated in place; the tuple
    shape keeps call sites explicit about the data flow. Raises
    OutOfOrder when ts_ms fails to advance.
    """
    ts = sample.ts_ms
    if state.last_ts is not None and ts <= state.last_ts:
        raise OutOfOrder(f"ts_ms {ts} does not advance past {state.last_ts}")
    state.last_ts = ts
    state._window_ms = config.perclos_window_ms
    events: list[EyeEvent] = []

    if config.smoothing_alpha > 0.0:
        state.smoothed_ear = smooth_ear(state.smoothed_ear, sample, config.smoothing_alpha)
        eff = state.smoothed_ear
    else:
        eff = sample.mean_ear

    if not sample.valid:
        state.frames_since_face += 1
        if state.mode != "no_face" and state.frames_since_face >= config.face_lost_grace_frames:
            events.append(EyeEvent("face_lost", ts))
            if state.mode == "drowsy":
                events.append(EyeEvent(
                    "drowsy_end", ts, ear=None,
                    closed_frames=state.closed_count,
                    perclos=_perclos_or_none(state),
                ))
            state.mode = "no_face"
            state.closed_count = 0
        return state, events

    if state.mode == "no_face":
        events.append(EyeEvent("face_found", ts))
        state.mode = "open"
    state.frames_since_face = 0
    state.last_valid_ear = eff

    blocked = state.refractory_remaining > 0
    if blocked:
        state.refractory_remaining -= 1

    was_closed = state.mode == "closing" or state.mode == "drowsy"
    if was_closed:
        now_closed = not eff > config.ear_open_threshold
    else:
        now_closed = eff < config.ear_close_threshold

    reopen_event: EyeEvent | None = None
    onset = False
    if now_closed:
        state.closed_count += 1
        if state.mode != "drowsy":
            if state.closed_count >= config.consec_frames and not blocked:
                state.mode = "drowsy"
                onset = True
            else:
                state.mode = "closing"
    else:
        if was_closed:
            run = state.closed_count
            if state.mode == "drowsy":
                state.refractory_remaining = config.refractory_frames
                reopen_event = EyeEvent("drowsy_end", ts, ear=eff, closed_frames=run)
            elif config.blink_min_frames <= run <= config.blink_max_frames:
                reopen_event = EyeEvent("blink", ts, ear=eff, closed_frames=run)
            else:
                reopen_event = EyeEvent("closure", ts, ear=eff, closed_frames=run)
        state.mode = "open"
        state.closed_count = 0

    # rolling windows ingest this frame before any perclos is read
    win = state._win
    horizon = ts - config.perclos_window_ms
    while win and win[0][0] <= horizon:
        state._win_closed -= win.popleft()[1]
    blinks = state._blink_ts
    while blinks and blinks[0] <= horizon:
        blinks.popleft()
    win.append((ts, now_closed))
    state._win_closed += now_closed
    if state.first_valid_ts is None:
        state.first_valid_ts = ts

    if reopen_event is not None:
        if reopen_event.kind == "blink":
            blinks.append(ts)
        elif reopen_event.kind == "drowsy_end":
            reopen_event = EyeEvent(
                "drowsy_end", ts, ear=eff,
                closed_frames=reopen_event.closed_frames,
                perclos=perclos(state),
            )
        events.append(reopen_event)
    if onset:
        events.append(EyeEvent(
            "drowsy_onset", ts, ear=eff,
            closed_frames=state.closed_count,
            perclos=perclos(state),
        ))

    if ts - state.first_valid_ts >= config.perclos_window_ms:
        rate = blink_rate(state)
        if rate < config.min_blinks_per_min and (
            state.last_low_blink_ts is None
            or ts - state.last_low_blink_ts >= config.perclos_window_ms
        ):
            state.last_low_blink_ts = ts
            events.append(EyeEvent("low_blink_rate", ts, ear=eff))

    return state, events


def finalize(state: DetectorState) -> list[EyeEvent]:
    """Close the stream: balance event pairs and flush any pending run.

    Idempotent: the state is left open with no pending run.
    """
    events: list[EyeEvent] = []
    if state.last_ts is None:
        return events
    if state.mode == "drowsy":
        events.append(EyeEvent(
            "drowsy_end", state.last_ts, ear=state.last_valid_ear,
            closed_frames=state.closed_count,
            perclos=_perclos_or_none(state),
        ))
    elif state.closed_count > 0:
        events.append(EyeEvent(
            "closure", state.last_ts, ear=state.last_valid_ear,
            closed_frames=state.closed_count,
        ))
    state.mode = "open" if state.mode != "no_face" else "no_face"
    state.closed_count = 0
    return events
