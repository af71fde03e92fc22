import { createConnection, Socket } from "node:net";
import { once } from "node:events";
import { performance } from "node:perf_hooks";
import { Writable } from "node:stream";

import { FrameRecord, formatLine } from "./wire.js";
import { MeshProvider } from "./providers.js";

export interface CaptureConfig {
  fps: number;
  width: number;
  height: number;
  durationMs?: number; // absent = run until the provider is exhausted
  maxFrames?: number;
}

export interface CaptureStats {
  frames: number;
  durationMs: number;
  fps: number;
  drainWaits: number;
}

export class SinkSpecError extends Error {}

/** "stdout" or "tcp:HOST:PORT" -> a writable plus its close step. */
export async function openSink(
  spec: string,
): Promise<{ stream: Writable; close: () => Promise<void> }> {
  if (spec === "stdout") {
    return { stream: process.stdout, close: async () => {} };
  }
  if (spec.startsWith("tcp:")) {
    const rest = spec.slice(4);
    const sep = rest.lastIndexOf(":");
    if (sep <= 0) throw new SinkSpecError(`expected tcp:HOST:PORT, got ${spec}`);
    const host = rest.slice(0, sep);
    const port = Number(rest.slice(sep + 1));
    if (!Number.isInteger(port) || port < 1 || port > 65535) {
      throw new SinkSpecError(`bad port in ${spec}`);
    }
    const sock: Socket = createConnection({ host, port });
    await once(sock, "connect");
    return {
      stream: sock,
      close: () =>
        new Promise<void>((resolve) => {
          sock.end(resolve);
        }),
    };
  }
  throw new SinkSpecError(`unknown sink ${spec} (use stdout or tcp:HOST:PORT)`);
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Pull samples from the provider at the requested rate and write wire
 * lines to the sink. Pacing is drift-free (each deadline advances by the
 * frame period, late frames are not doubled up) and timestamps are
 * strictly increasing even if the clock stalls within one millisecond.
 */
export async function captureLoop(
  provider: MeshProvider,
  sink: Writable,
  cfg: CaptureConfig,
  onLine?: (line: string) => void,
): Promise<CaptureStats> {
  if (!(cfg.fps > 0)) throw new RangeError("fps must be > 0");
  const periodMs = 1000 / cfg.fps;
  const start = performance.now();
  let nextAt = start;
  let prevTs = -1;
  let frames = 0;
  let drainWaits = 0;

  for (;;) {
    const now = performance.now();
    if (now < nextAt) await sleep(nextAt - now);
    nextAt += periodMs;

    const elapsed = performance.now() - start;
    if (cfg.durationMs !== undefined && elapsed >= cfg.durationMs) break;
    if (cfg.maxFrames !== undefined && frames >= cfg.maxFrames) break;

    const sample = await provider.next(elapsed);
    if (sample === null) break;

    const ts = Math.max(prevTs + 1, Math.round(elapsed));
    prevTs = ts;
    const record: FrameRecord = {
      ts_ms: ts,
      w: cfg.width,
      h: cfg.height,
      face: sample.face,
      lm: sample.face ? sample.lm : [],
    };
    const line = formatLine(record) + "\n";
    onLine?.(line);
    if (!sink.write(line)) {
      // receiver is slower than the camera: block the loop, drop nothing
      drainWaits++;
      await once(sink, "drain");
    }
    frames++;
  }

  const durationMs = performance.now() - start;
  return {
    frames,
    durationMs,
    fps: durationMs > 0 ? (frames * 1000) / durationMs : 0,
    drainWaits,
  };
}
