"""Eye Aspect Ratio geometry.

EAR for one eye, from six landmarks (p1..p6, corners first):

    EAR = (|p2 - p6| + |p3 - p5|) / (2 * |p1 - p4|)

The ratio stays roughly constant while the eye is open and collapses
toward zero as the lids close. All distances are computed in pixel
space (normalized coordinates scaled by image dimensions) so the value
is unbiased by image aspect ratio, and the measure is invariant under
similarity transforms of the landmark set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateEye
from .mesh import DEFAULT_EYES, EyeIndexMap, MeshFrame

#: Horizontal widths at or below this (in px) signal corrupt landmarks,
#: not closure: closing shrinks vertical distances, never the corners.
EPS_WIDTH = 1e-9

Point = tuple[float, float]


@dataclass(frozen=True)
class EarSample:
    """Per-frame EAR signal: both eyes, their mean, and a validity flag.

    ``valid`` is false when the frame has no face or either eye was
    degenerate; in that case all three ratios are None.
    """

    ts_ms: int
    left_ear: float | None
    right_ear: float | None
    mean_ear: float | None
    valid: bool

    def __post_init__(self):
        present = (self.left_ear, self.right_ear, self.mean_ear)
        if self.valid:
            if any(v is None for v in present):
                raise ValueError("valid sample must carry both eye EARs and their mean")
            for v in present:
                if not math.isfinite(v) or v < 0:
                    raise ValueError(f"EAR values must be finite and >= 0, got {v}")
            if self.mean_ear != (self.left_ear + self.right_ear) / 2.0:
                raise ValueError("mean_ear must equal (left_ear + right_ear) / 2")
        elif any(v is not None for v in present):
            raise ValueError("invalid sample must carry no EAR values")

    @classmethod
    def invalid(cls, ts_ms: int) -> "EarSample":
        return cls(ts_ms=ts_ms, left_ear=None, right_ear=None, mean_ear=None, valid=False)

    @classmethod
    def of(cls, ts_ms: int, left_ear: float, right_ear: float) -> "EarSample":
        return cls(
            ts_ms=ts_ms,
            left_ear=left_ear,
            right_ear=right_ear,
            mean_ear=(left_ear + right_ear) / 2.0,
            valid=True,
        )


def dist(p: Point, q: Point) -> float:
    """Euclidean distance between two pixel-space points."""
    return math.hypot(p[0] - q[0], p[1] - q[1])


def eye_aspect_ratio(
    p1: Point, p2: Point, p3: Point, p4: Point, p5: Point, p6: Point,
    eps_width: float = EPS_WIDTH,
) -> float:
    """EAR of one eye from its six pixel-space landmarks.

    Raises DegenerateEye when the horizontal corner distance |p1 - p4|
    is at or below ``eps_width``.
    """
    width = dist(p1, p4)
    if width <= eps_width:
        raise DegenerateEye(f"horizontal eye width {width} <= {eps_width}")
    return (dist(p2, p6) + dist(p3, p5)) / (2.0 * width)


def _eye_ratio(lm: tuple, idx: tuple, w: int, h: int) -> float:
    """Fused form of eye_aspect_ratio over to_pixels, one eye.

    Algebraically identical (scaling distributes over the differences);
    kept separate from eye_aspect_ratio only to avoid twelve point
    conversions per frame on the hot path.
    """
    i1, i2, i3, i4, i5, i6 = idx
    p1, p2, p3, p4, p5, p6 = lm[i1], lm[i2], lm[i3], lm[i4], lm[i5], lm[i6]
    width = math.hypot((p1[0] - p4[0]) * w, (p1[1] - p4[1]) * h)
    if width <= EPS_WIDTH:
        raise DegenerateEye(f"horizontal eye width {width} <= {EPS_WIDTH}")
    v1 = math.hypot((p2[0] - p6[0]) * w, (p2[1] - p6[1]) * h)
    v2 = math.hypot((p3[0] - p5[0]) * w, (p3[1] - p5[1]) * h)
    return (v1 + v2) / (2.0 * width)


def frame_ear(frame: MeshFrame, eyes: EyeIndexMap = DEFAULT_EYES) -> EarSample:
    """Per-frame EAR sample from a mesh frame.

    No face, or a degenerate eye on either side, yields an invalid
    sample rather than an exception: transient landmark corruption must
    not kill a live monitor, and the detector treats invalid samples as
    face loss.
    """
    if not frame.face_present:
        return EarSample.invalid(frame.ts_ms)
    lm = frame.landmarks
    try:
        left = _eye_ratio(lm, eyes.left, frame.width, frame.height)
        right = _eye_ratio(lm, eyes.right, frame.width, frame.height)
    except DegenerateEye:
        return EarSample.invalid(frame.ts_ms)
    return EarSample.of(frame.ts_ms, left, right)


def smooth_ear(prev_smoothed: float | None, sample: EarSample, alpha: float) -> float | None:
    """Exponential moving average of the mean EAR.

    alpha = 0 disables smoothing (returns the raw mean). Invalid samples
    pass the previous smoothed value through unchanged; staleness is the
    caller's to track via ``sample.valid``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not sample.valid:
        return prev_smoothed
    if alpha == 0.0 or prev_smoothed is None:
        return sample.mean_ear
    return alpha * sample.mean_ear + (1.0 - alpha) * prev_smoothed
