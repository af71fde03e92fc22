import { describe, expect, it } from "vitest";

import { FrameRecord, LANDMARK_COUNT, formatLine, validateLine } from "../src/wire.js";

function faceRecord(ts = 0): FrameRecord {
  const lm = Array.from({ length: LANDMARK_COUNT }, (_, i) => {
    const t = i / LANDMARK_COUNT;
    return [t, 1 - t, 0.01 * t] as [number, number, number];
  });
  return { ts_ms: ts, w: 640, h: 480, face: true, lm };
}

describe("formatLine", () => {
  it("emits keys in the fixed wire order", () => {
    const line = formatLine({ ts_ms: 40, w: 640, h: 480, face: false, lm: [] });
    expect(line).toBe('{"ts_ms":40,"w":640,"h":480,"face":false,"lm":[]}');
  });

  it("round-trips through JSON.parse", () => {
    const rec = faceRecord(120);
    const back = JSON.parse(formatLine(rec));
    expect(back).toEqual(rec);
  });
});

describe("validateLine", () => {
  it("accepts a full face frame", () => {
    expect(validateLine(formatLine(faceRecord()))).toBeNull();
  });

  it("accepts a no-face frame", () => {
    expect(validateLine('{"ts_ms":0,"w":640,"h":480,"face":false,"lm":[]}')).toBeNull();
  });

  it.each([
    ["not json at all", "garbage"],
    ["non-object", "[1,2]"],
    ["missing field", '{"ts_ms":0,"w":640,"h":480,"face":false}'],
    ["unknown field", '{"ts_ms":0,"w":640,"h":480,"face":false,"lm":[],"extra":1}'],
    ["float ts", '{"ts_ms":0.5,"w":640,"h":480,"face":false,"lm":[]}'],
    ["string width", '{"ts_ms":0,"w":"640","h":480,"face":false,"lm":[]}'],
    ["face not boolean", '{"ts_ms":0,"w":640,"h":480,"face":1,"lm":[]}'],
    ["landmarks with no face", '{"ts_ms":0,"w":640,"h":480,"face":false,"lm":[[0,0,0]]}'],
  ])("rejects %s", (_label, line) => {
    expect(validateLine(line)).not.toBeNull();
  });

  it("rejects a face frame with the wrong landmark count", () => {
    const rec = faceRecord();
    rec.lm = rec.lm.slice(0, 100);
    expect(validateLine(formatLine(rec))).toMatch(/468/);
  });

  it("rejects non-finite coordinates", () => {
    const rec = faceRecord();
    const mangled = formatLine(rec).replace(/\[0,1,0\]/, "[0,null,0]");
    expect(validateLine(mangled)).not.toBeNull();
  });

  it("names the offending field in the diagnostic", () => {
    const msg = validateLine('{"ts_ms":-1.5,"w":640,"h":480,"face":false,"lm":[]}');
    expect(msg).toMatch(/ts_ms/);
  });
});
