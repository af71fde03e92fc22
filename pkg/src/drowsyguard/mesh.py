"""Face-mesh frame model and the newline-delimited session wire format.

One session = one stream of UTF-8 lines, one frame per line:

    {"ts_ms":<int>,"w":<int>,"h":<int>,"face":<bool>,"lm":[[<x>,<y>,<z>],...]}

``lm`` carries exactly 468 normalized landmark triples when ``face`` is
true and exactly 0 when false. The schema is strict: unknown fields,
wrong types, and non-finite numbers are all rejected. Serialization uses
shortest round-trip float formatting, so parse(serialize(f)) == f exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import msgspec

from .errors import IndexOutOfRange, NoFace, OutOfOrder, ParseError, SchemaError

LANDMARK_COUNT = 468

Point3 = tuple[float, float, float]


class MeshFrame(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """One timestamped landmark frame.

    Coordinates are normalized (x, y in ~[0, 1], z is a unitless relative
    depth); ``width``/``height`` carry the source image size so geometry
    can be computed in pixel space. Immutable and safe to share between
    threads.
    """

    ts_ms: int
    width: int = msgspec.field(name="w")
    height: int = msgspec.field(name="h")
    face_present: bool = msgspec.field(name="face")
    landmarks: tuple[Point3, ...] = msgspec.field(name="lm")

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise SchemaError(
                f"image dimensions must be positive, got {self.width}x{self.height}"
            )
        n = len(self.landmarks)
        if self.face_present:
            if n != LANDMARK_COUNT:
                raise SchemaError(
                    f"face_present frame must carry exactly {LANDMARK_COUNT} landmarks, got {n}"
                )
        elif n != 0:
            raise SchemaError(f"no-face frame must carry 0 landmarks, got {n}")


@dataclass(frozen=True)
class EyeIndexMap:
    """Six landmark indices per eye, in EAR order.

    Convention: p1 and p4 are the horizontal corner pair; (p2, p6) and
    (p3, p5) are the upper/lower lid vertical pairs. All twelve indices
    must be distinct and within [0, 468).
    """

    left: tuple[int, int, int, int, int, int]
    right: tuple[int, int, int, int, int, int]

    def __post_init__(self):
        if len(self.left) != 6 or len(self.right) != 6:
            raise ValueError("each eye needs exactly 6 landmark indices")
        indices = self.left + self.right
        if len(set(indices)) != 12:
            raise ValueError("eye landmark indices must be distinct")
        for i in indices:
            if not 0 <= i < LANDMARK_COUNT:
                raise ValueError(f"landmark index {i} outside [0, {LANDMARK_COUNT})")


# Conventional 6-point eye contours of the 468-point mesh. Configurable;
# EAR is symmetric in the corner pair so corner order does not affect
# the value.
DEFAULT_EYES = EyeIndexMap(
    left=(33, 160, 158, 133, 153, 144),
    right=(362, 385, 387, 263, 373, 380),
)

_decoder = msgspec.json.Decoder(MeshFrame)
_encoder = msgspec.json.Encoder()

#: Frame -> compact wire bytes (no newline); hot-path alias for writers.
encode_frame = _encoder.encode


def parse_frame(line: str | bytes, line_no: int | None = None) -> MeshFrame:
    """Parse one wire-format line into a validated MeshFrame.

    Raises ParseError for malformed records (bad JSON, missing fields,
    non-object payloads) and SchemaError for records that parse but
    violate the frame schema (wrong landmark count, bad dimensions,
    wrong field types, unknown fields). ``line_no``, when given, is
    attached to the error message.
    """
    try:
        return _decoder.decode(line)
    except SchemaError as exc:
        if line_no is None:
            raise
        raise SchemaError(exc.args[0], line_no=line_no) from None
    except msgspec.ValidationError as exc:
        msg = str(exc)
        if "missing required field" in msg or msg.startswith("Expected `object`"):
            raise ParseError(msg, line_no=line_no) from None
        raise SchemaError(msg, line_no=line_no) from None
    except msgspec.DecodeError as exc:
        raise ParseError(str(exc), line_no=line_no) from None


def serialize_frame(frame: MeshFrame) -> str:
    """Serialize a frame to one wire-format line (no trailing newline).

    Floats use shortest round-trip formatting: re-parsing reproduces
    every numeric field exactly.
    """
    return _encoder.encode(frame).decode("utf-8")


def to_pixels(frame: MeshFrame, index: int) -> tuple[float, float]:
    """Landmark position in pixel units: (x * width, y * height)."""
    if not frame.face_present:
        raise NoFace("frame has no face; landmarks are empty")
    if not 0 <= index < LANDMARK_COUNT:
        raise IndexOutOfRange(f"landmark index {index} outside [0, {LANDMARK_COUNT})")
    p = frame.landmarks[index]
    return (p[0] * frame.width, p[1] * frame.height)


def read_session(lines: Iterable[str | bytes]) -> Iterator[MeshFrame]:
    """Parse a line stream into frames, enforcing strictly increasing ts_ms.

    Raises OutOfOrder as soon as a timestamp fails to advance. For the
    skip-and-count policy used by the live pipeline see pipeline.run_pipeline.
    """
    last_ts = None
    for line_no, line in enumerate(lines, start=1):
        frame = parse_frame(line, line_no=line_no)
        if last_ts is not None and frame.ts_ms <= last_ts:
            raise OutOfOrder(
                f"line {line_no}: ts_ms {frame.ts_ms} does not advance past {last_ts}"
            )
        last_ts = frame.ts_ms
        yield frame
