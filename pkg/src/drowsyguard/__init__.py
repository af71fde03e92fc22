"""Drowsiness detection over streamed face-mesh landmarks.

The engine consumes newline-delimited landmark frames, computes the eye
aspect ratio per frame and runs a hysteresis state machine that emits
blink, closure, drowsiness, blink-rate and face-visibility events.
"""

from .detector import (
    ALERT_KINDS,
    DetectorConfig,
    DetectorState,
    EVENT_KINDS,
    EyeEvent,
    blink_rate,
    detector_step,
    finalize,
    perclos,
)
from .ear import EarSample, eye_aspect_ratio, frame_ear, smooth_ear
from .errors import DrowsyguardError
from .mesh import (
    DEFAULT_EYES,
    LANDMARK_COUNT,
    EyeIndexMap,
    MeshFrame,
    parse_frame,
    read_session,
    serialize_frame,
    to_pixels,
)
from .pipeline import (
    AlertPolicy,
    LatencyStats,
    RunSummary,
    SourceSpec,
    event_to_json,
    line_sink,
    measure_latency,
    run_pipeline,
)
from .synth_eval import (
    EvalReport,
    Scenario,
    Segment,
    SessionLabels,
    evaluate,
    evaluate_corpus,
    gen_scenario,
    make_eye_frame,
)

__version__ = "0.1.0"

__all__ = [
    "ALERT_KINDS",
    "AlertPolicy",
    "DEFAULT_EYES",
    "DetectorConfig",
    "DetectorState",
    "DrowsyguardError",
    "EVENT_KINDS",
    "EarSample",
    "EvalReport",
    "EyeEvent",
    "EyeIndexMap",
    "LANDMARK_COUNT",
    "LatencyStats",
    "MeshFrame",
    "RunSummary",
    "Scenario",
    "Segment",
    "SessionLabels",
    "SourceSpec",
    "blink_rate",
    "detector_step",
    "evaluate",
    "evaluate_corpus",
    "event_to_json",
    "eye_aspect_ratio",
    "finalize",
    "frame_ear",
    "gen_scenario",
    "line_sink",
    "make_eye_frame",
    "measure_latency",
    "parse_frame",
    "perclos",
    "read_session",
    "run_pipeline",
    "serialize_frame",
    "smooth_ear",
    "to_pixels",
]
