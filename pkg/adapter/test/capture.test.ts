import { once } from "node:events";
import { createServer } from "node:net";
import { Writable } from "node:stream";
import { describe, expect, it } from "vitest";

import { CaptureStats, SinkSpecError, captureLoop, openSink } from "../src/capture.js";
import { ClipProvider, SyntheticProvider } from "../src/providers.js";
import { validateLine } from "../src/wire.js";

const CLIP = new URL("../fixtures/clip.jsonl", import.meta.url).pathname;

class Collector extends Writable {
  text = "";
  _write(chunk: Buffer, _enc: string, cb: () => void): void {
    this.text += chunk.toString();
    cb();
  }
  lines(): string[] {
    return this.text.split("\n").filter((l) => l.length > 0);
  }
}

class SlowSink extends Writable {
  text = "";
  constructor() {
    super({ highWaterMark: 64 });
  }
  _write(chunk: Buffer, _enc: string, cb: () => void): void {
    this.text += chunk.toString();
    setTimeout(cb, 4);
  }
  lines(): string[] {
    return this.text.split("\n").filter((l) => l.length > 0);
  }
}

async function run(
  provider: SyntheticProvider | ClipProvider,
  cfg: Parameters<typeof captureLoop>[2],
  sink: Collector | SlowSink = new Collector(),
): Promise<{ stats: CaptureStats; lines: string[] }> {
  await provider.init();
  const stats = await captureLoop(provider, sink, cfg);
  provider.close();
  return { stats, lines: sink.lines() };
}

function tsOf(line: string): number {
  return (JSON.parse(line) as { ts_ms: number }).ts_ms;
}

const LEFT_EYE = [33, 160, 158, 133, 153, 144];

function leftEar(line: string): number {
  const rec = JSON.parse(line) as { w: number; h: number; lm: number[][] };
  const px = LEFT_EYE.map((i) => [rec.lm[i][0] * rec.w, rec.lm[i][1] * rec.h]);
  const d = (a: number[], b: number[]) => Math.hypot(a[0] - b[0], a[1] - b[1]);
  return (d(px[1], px[5]) + d(px[2], px[4])) / (2 * d(px[0], px[3]));
}

describe("captureLoop with the synthetic provider", () => {
  it("emits only valid wire lines", async () => {
    const { lines } = await run(new SyntheticProvider({ seed: 3 }), {
      fps: 200,
      width: 640,
      height: 480,
      maxFrames: 60,
    });
    expect(lines).toHaveLength(60);
    for (const line of lines) expect(validateLine(line)).toBeNull();
  });

  it("timestamps increase strictly even at high frame rates", async () => {
    const { lines } = await run(new SyntheticProvider(), {
      fps: 1000,
      width: 640,
      height: 480,
      maxFrames: 120,
    });
    const ts = lines.map(tsOf);
    for (let i = 1; i < ts.length; i++) expect(ts[i]).toBeGreaterThan(ts[i - 1]);
  });

  it("sustains at least 15 fps under real pacing", async () => {
    const { stats, lines } = await run(new SyntheticProvider(), {
      fps: 30,
      width: 640,
      height: 480,
      durationMs: 700,
    });
    expect(stats.fps).toBeGreaterThanOrEqual(15);
    expect(stats.frames).toBeGreaterThanOrEqual(11);
    const ts = lines.map(tsOf);
    for (let i = 1; i < ts.length; i++) expect(ts[i]).toBeGreaterThan(ts[i - 1]);
  });

  it("encodes the target eye ratio in the emitted geometry", async () => {
    const { lines } = await run(
      new SyntheticProvider({ blinkEveryMs: 200, blinkMs: 50, noiseSigma: 0 }),
      { fps: 100, width: 640, height: 480, maxFrames: 40 },
    );
    const ears = lines.map(leftEar);
    const open = ears.filter((e) => e > 0.25);
    const closed = ears.filter((e) => e <= 0.25);
    expect(open.length).toBeGreaterThan(0);
    expect(closed.length).toBeGreaterThan(0);
    for (const e of open) expect(e).toBeCloseTo(0.32, 2);
    for (const e of closed) expect(e).toBeCloseTo(0.12, 2);
  });

  it("marks occluded spans as no-face frames", async () => {
    const { lines } = await run(
      new SyntheticProvider({ occlusions: [[0, 50]] }),
      { fps: 100, width: 640, height: 480, maxFrames: 20 },
    );
    const faces = lines.map((l) => (JSON.parse(l) as { face: boolean }).face);
    expect(faces[0]).toBe(false);
    expect(faces[faces.length - 1]).toBe(true);
    expect(faces.filter((f) => !f).length).toBeGreaterThan(0);
  });

  it("honors configured frame dimensions", async () => {
    const { lines } = await run(new SyntheticProvider({ width: 1280, height: 720 }), {
      fps: 500,
      width: 1280,
      height: 720,
      maxFrames: 3,
    });
    const rec = JSON.parse(lines[0]) as { w: number; h: number };
    expect(rec.w).toBe(1280);
    expect(rec.h).toBe(720);
  });
});

describe("captureLoop with the clip provider", () => {
  it("stops when the clip runs out", async () => {
    const { stats, lines } = await run(new ClipProvider(CLIP), {
      fps: 500,
      width: 640,
      height: 480,
    });
    expect(stats.frames).toBe(50);
    expect(lines).toHaveLength(50);
    const faces = lines.map((l) => (JSON.parse(l) as { face: boolean }).face);
    expect(faces.filter((f) => !f)).toHaveLength(7);
    for (const line of lines) expect(validateLine(line)).toBeNull();
  });

  it("loops the clip when asked", async () => {
    const { stats } = await run(new ClipProvider(CLIP, true), {
      fps: 1000,
      width: 640,
      height: 480,
      maxFrames: 75,
    });
    expect(stats.frames).toBe(75);
  });
});

describe("backpressure", () => {
  it("waits for drain instead of dropping frames", async () => {
    const sink = new SlowSink();
    const { stats, lines } = await run(
      new SyntheticProvider(),
      { fps: 2000, width: 640, height: 480, maxFrames: 30 },
      sink,
    );
    expect(stats.drainWaits).toBeGreaterThan(0);
    expect(lines).toHaveLength(30);
  });
});

describe("tcp sink", () => {
  it("delivers every frame over a socket", async () => {
    let received = "";
    const server = createServer((conn) => {
      conn.on("data", (chunk) => {
        received += chunk.toString();
      });
    });
    server.listen(0, "127.0.0.1");
    await once(server, "listening");
    const port = (server.address() as { port: number }).port;

    const provider = new SyntheticProvider();
    await provider.init();
    const sink = await openSink(`tcp:127.0.0.1:${port}`);
    const stats = await captureLoop(provider, sink.stream, {
      fps: 500,
      width: 640,
      height: 480,
      maxFrames: 25,
    });
    await sink.close();
    provider.close();
    await new Promise((resolve) => setTimeout(resolve, 50));
    server.close();

    expect(stats.frames).toBe(25);
    const lines = received.split("\n").filter((l) => l.length > 0);
    expect(lines).toHaveLength(25);
    for (const line of lines) expect(validateLine(line)).toBeNull();
  });

  it.each(["tcp:nohost", "tcp:127.0.0.1:notaport", "udp:127.0.0.1:99"])(
    "rejects sink spec %s",
    async (spec) => {
      await expect(openSink(spec)).rejects.toBeInstanceOf(SinkSpecError);
    },
  );
});
