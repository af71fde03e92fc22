// Engine wire format: one JSON frame per line. The engine rejects
// unknown fields and enforces the landmark arity, so the adapter
// validates the same way before anything leaves the process.

export const LANDMARK_COUNT = 468;

export type Landmark = [number, number, number];

export interface FrameRecord {
  ts_ms: number;
  w: number;
  h: number;
  face: boolean;
  lm: Landmark[];
}

const FIELDS = ["ts_ms", "w", "h", "face", "lm"];

export function formatLine(frame: FrameRecord): string {
  // key order is fixed so recorded sessions diff cleanly
  return JSON.stringify({
    ts_ms: frame.ts_ms,
    w: frame.w,
    h: frame.h,
    face: frame.face,
    lm: frame.lm,
  });
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Returns null when the line is a valid wire frame, else a diagnostic. */
export function validateLine(line: string): string | null {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (err) {
    return `not JSON: ${(err as Error).message}`;
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    return "not an object";
  }
  const rec = doc as Record<string, unknown>;
  for (const key of Object.keys(rec)) {
    if (!FIELDS.includes(key)) return `unknown field "${key}"`;
  }
  for (const key of FIELDS) {
    if (!(key in rec)) return `missing field "${key}"`;
  }
  if (!Number.isInteger(rec.ts_ms)) return "ts_ms must be an integer";
  if (!Number.isInteger(rec.w) || (rec.w as number) <= 0) return "w must be > 0";
  if (!Number.isInteger(rec.h) || (rec.h as number) <= 0) return "h must be > 0";
  if (typeof rec.face !== "boolean") return "face must be a boolean";
  if (!Array.isArray(rec.lm)) return "lm must be an array";
  const want = rec.face ? LANDMARK_COUNT : 0;
  if (rec.lm.length !== want) {
    return `expected ${want} landmarks, got ${rec.lm.length}`;
  }
  for (const p of rec.lm as unknown[]) {
    if (!Array.isArray(p) || p.length !== 3 || !p.every(isFiniteNumber)) {
      return "each landmark must be three finite numbers";
    }
  }
  return null;
}
