"""Offline re-derivation of the event rules, used as a test oracle.

Works in whole-timeline passes over a completed sample list instead of
a per-frame state machine: effective-EAR series, face-visibility
timeline, open/closed classification, then one chronological sweep that
extracts closure runs and recomputes every window value from scratch by
slicing. Intentionally a second implementation of the documented rules;
any divergence from the streaming detector is a bug in one of them.
"""

from __future__ import annotations

from drowsyguard.detector import DetectorConfig, EyeEvent
from drowsyguard.ear import EarSample


def _effective_series(samples: list[EarSample], config: DetectorConfig) -> list:
    eff = []
    prev = None
    for s in samples:
        if s.valid:
            if config.smoothing_alpha == 0.0 or prev is None:
                prev = s.mean_ear
            else:
                prev = (config.smoothing_alpha * s.mean_ear
                        + (1.0 - config.smoothing_alpha) * prev)
            eff.append(prev)
        else:
            eff.append(None)
    return eff


def _visibility(samples: list[EarSample], config: DetectorConfig):
    """Per-index visibility after the frame, plus loss/found indices."""
    visible = [True] * len(samples)
    lost_at, found_at = set(), set()
    vis = True
    invalid_run = 0
    for i, s in enumerate(samples):
        if s.valid:
            if not vis:
                found_at.add(i)
                vis = True
            invalid_run = 0
        else:
            invalid_run += 1
            if vis and invalid_run >= config.face_lost_grace_frames:
                lost_at.add(i)
                vis = False
        visible[i] = vis
    return visible, lost_at, found_at


def _classify(samples, eff, lost_at, config) -> list:
    """closed flag per valid frame (None for invalid), with hysteresis.

    The previous classification carries across short invalid gaps but
    resets to open once the face is declared lost.
    """
    closed = [None] * len(samples)
    prev_closed = False
    for i, s in enumerate(samples):
        if i in lost_at:
            prev_closed = False
        if not s.valid:
            continue
        if prev_closed:
            now = not eff[i] > config.ear_open_threshold
        else:
            now = eff[i] < config.ear_close_threshold
        closed[i] = now
        prev_closed = now
    return closed


def _window_pairs(samples, closed, upto: int, window_ms: int):
    """(ts, closed) over valid frames in the window as of index upto.

    Eviction happens only when a valid frame is ingested, so the window
    is anchored at the last valid frame at or before upto; during an
    invalid gap it holds still.
    """
    anchor = None
    for j in range(upto, -1, -1):
        if closed[j] is not None:
            anchor = samples[j].ts_ms
            break
    if anchor is None:
        return []
    return [
        (samples[j].ts_ms, closed[j])
        for j in range(upto + 1)
        if closed[j] is not None and samples[j].ts_ms > anchor - window_ms
    ]


def reference_events(samples: list[EarSample], config: DetectorConfig) -> list[EyeEvent]:
    """All events for a complete session, including the end-of-stream flush."""
    n = len(samples)
    if n == 0:
        return []
    eff = _effective_series(samples, config)
    visible, lost_at, found_at = _visibility(samples, config)
    closed = _classify(samples, eff, lost_at, config)

    events: list[EyeEvent] = []
    count = 0  # closed frames in the current run
    drowsy = False
    refractory = 0  # valid frames still blocked
    blink_reopens: list[int] = []  # ts of blink events
    first_valid_ts = None
    last_valid_ear = None
    last_low_ts = None

    def perclos_at(i: int) -> float | None:
        pairs = _window_pairs(samples, closed, i, config.perclos_window_ms)
        if not pairs:
            return None
        return sum(1 for _, c in pairs if c) / len(pairs)

    for i, s in enumerate(samples):
        ts = s.ts_ms
        if not s.valid:
            if i in lost_at:
                events.append(EyeEvent("face_lost", ts))
                if drowsy:
                    events.append(EyeEvent(
                        "drowsy_end", ts, ear=None,
                        closed_frames=count, perclos=perclos_at(i),
                    ))
                drowsy = False
                count = 0
            continue

        if i in found_at:
            events.append(EyeEvent("face_found", ts))
        if first_valid_ts is None:
            first_valid_ts = ts
        last_valid_ear = eff[i]

        blocked = refractory > 0
        if blocked:
            refractory -= 1

        if closed[i]:
            count += 1
            if not drowsy and count >= config.consec_frames and not blocked:
                drowsy = True
                events.append(EyeEvent(
                    "drowsy_onset", ts, ear=eff[i],
                    closed_frames=count, perclos=perclos_at(i),
                ))
        else:
            if count > 0:
                if drowsy:
                    events.append(EyeEvent(
                        "drowsy_end", ts, ear=eff[i],
                        closed_frames=count, perclos=perclos_at(i),
                    ))
                    refractory = config.refractory_frames
                elif config.blink_min_frames <= count <= config.blink_max_frames:
                    events.append(EyeEvent("blink", ts, ear=eff[i], closed_frames=count))
                    blink_reopens.append(ts)
                else:
                    events.append(EyeEvent("closure", ts, ear=eff[i], closed_frames=count))
                drowsy = False
                count = 0

        # onset events above already include the current frame in their
        # window because classification, not emission order, feeds it
        if ts - first_valid_ts >= config.perclos_window_ms:
            window = config.perclos_window_ms
            blinks = [b for b in blink_reopens if b > ts - window]
            coverage = min(ts - first_valid_ts, window)
            rate = len(blinks) / (coverage / 60_000.0) if coverage > 0 else 0.0
            if rate < config.min_blinks_per_min and (
                last_low_ts is None or ts - last_low_ts >= window
            ):
                last_low_ts = ts
                events.append(EyeEvent("low_blink_rate", ts, ear=eff[i]))

    last_ts = samples[-1].ts_ms
    if drowsy:
        events.append(EyeEvent(
            "drowsy_end", last_ts, ear=last_valid_ear,
            closed_frames=count, perclos=perclos_at(n - 1),
        ))
    elif count > 0:
        events.append(EyeEvent(
            "closure", last_ts, ear=last_valid_ear, closed_frames=count,
        ))
    return events
