import json

import numpy as np
import pytest

from drowsyguard.ear import EarSample
from drowsyguard.mesh import LANDMARK_COUNT, MeshFrame, serialize_frame


@pytest.fixture
def rng():
    return np.random.default_rng(0xD0E5)


def random_eye(rng, min_width=0.5):
    """Six pixel-space points with a non-degenerate horizontal pair."""
    pts = [tuple(rng.uniform(-50.0, 50.0, 2)) for _ in range(6)]
    p1, p4 = pts[0], pts[3]
    while abs(p1[0] - p4[0]) + abs(p1[1] - p4[1]) < min_width:
        p4 = tuple(rng.uniform(-50.0, 50.0, 2))
        pts[3] = p4
    return pts


def flat_face(value_x=0.5, value_y=0.5):
    """468 identical landmarks; eyes are degenerate by construction."""
    return tuple((value_x, value_y, 0.0) for _ in range(LANDMARK_COUNT))


def frame_line(ts_ms=0, w=640, h=480, face=True, lm=None, **extra):
    """Hand-rolled wire line so tests do not depend on the serializer."""
    if lm is None:
        lm = [[0.5, 0.5, 0.0]] * (LANDMARK_COUNT if face else 0)
    doc = {"ts_ms": ts_ms, "w": w, "h": h, "face": face, "lm": lm}
    doc.update(extra)
    return json.dumps(doc, separators=(",", ":"))


def valid_sample(ts_ms, ear):
    return EarSample.of(ts_ms, ear, ear)


def invalid_sample(ts_ms):
    return EarSample.invalid(ts_ms)


def seq_samples(ears, period_ms=40, start_ms=0):
    """EarSample list from a list of mean EARs; None means no face."""
    out = []
    for i, e in enumerate(ears):
        ts = start_ms + i * period_ms
        out.append(invalid_sample(ts) if e is None else valid_sample(ts, e))
    return out


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def session_file(tmp_path, frames, name="session.jsonl"):
    path = tmp_path / name
    write_lines(path, [serialize_frame(f) for f in frames])
    return path
