#!/usr/bin/env node
import { parseArgs } from "node:util";

import { CaptureConfig, SinkSpecError, captureLoop, openSink } from "./capture.js";
import {
  CameraProvider,
  CameraUnavailable,
  ClipError,
  ClipProvider,
  DetectorInitFailure,
  MeshProvider,
  SyntheticProvider,
} from "./providers.js";
import { formatSelftest, selftest } from "./selftest.js";

const USAGE = `usage:
  mesh-camera-adapter capture [--provider synthetic|clip|camera] [--clip PATH]
      [--camera-index N] [--fps N] [--duration-ms N] [--max-frames N]
      [--out stdout|tcp:HOST:PORT] [--seed N] [--width N] [--height N] [--loop]
  mesh-camera-adapter selftest CLIP_PATH

Streams face-mesh frames as one JSON record per line. Pipe capture output
into a detector, for example:
  mesh-camera-adapter capture --provider clip --clip fixtures/clip.jsonl \\
    | drowsyguard run --source stdin --alert none`;

function intFlag(
  raw: string | undefined,
  name: string,
  fallback: number,
  min = 1,
): number {
  if (raw === undefined) return fallback;
  const v = Number(raw);
  if (!Number.isInteger(v) || v < min) {
    throw new UsageError(`--${name} wants an integer >= ${min}, got ${raw}`);
  }
  return v;
}

class UsageError extends Error {}

async function cmdCapture(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      provider: { type: "string", default: "synthetic" },
      clip: { type: "string" },
      "camera-index": { type: "string" },
      fps: { type: "string" },
      "duration-ms": { type: "string" },
      "max-frames": { type: "string" },
      out: { type: "string", default: "stdout" },
      seed: { type: "string" },
      width: { type: "string" },
      height: { type: "string" },
      loop: { type: "boolean", default: false },
    },
    allowPositionals: false,
  });

  const width = intFlag(values.width, "width", 640);
  const height = intFlag(values.height, "height", 480);
  const cfg: CaptureConfig = {
    fps: intFlag(values.fps, "fps", 25),
    width,
    height,
  };
  if (values["duration-ms"] !== undefined) {
    cfg.durationMs = intFlag(values["duration-ms"], "duration-ms", 0);
  }
  if (values["max-frames"] !== undefined) {
    cfg.maxFrames = intFlag(values["max-frames"], "max-frames", 0);
  }

  let provider: MeshProvider;
  switch (values.provider) {
    case "synthetic":
      provider = new SyntheticProvider({
        seed: intFlag(values.seed, "seed", 1),
        width,
        height,
      });
      break;
    case "clip":
      if (values.clip === undefined) throw new UsageError("--provider clip wants --clip PATH");
      provider = new ClipProvider(values.clip, values.loop);
      break;
    case "camera":
      provider = new CameraProvider(intFlag(values["camera-index"], "camera-index", 0, 0));
      break;
    default:
      throw new UsageError(`unknown provider ${values.provider}`);
  }

  await provider.init();
  const sink = await openSink(values.out as string);
  try {
    const stats = await captureLoop(provider, sink.stream, cfg);
    process.stderr.write(
      `captured ${stats.frames} frames in ${stats.durationMs.toFixed(0)} ms ` +
        `(${stats.fps.toFixed(1)} fps, ${stats.drainWaits} drain waits)\n`,
    );
  } finally {
    provider.close();
    await sink.close();
  }
  return 0;
}

async function cmdSelftest(argv: string[]): Promise<number> {
  const { positionals } = parseArgs({ args: argv, options: {}, allowPositionals: true });
  if (positionals.length !== 1) throw new UsageError("selftest wants exactly one clip path");
  const report = await selftest(positionals[0]);
  process.stderr.write(formatSelftest(report) + "\n");
  return report.ok ? 0 : 1;
}

export async function main(argv: string[]): Promise<number> {
  const [cmd, ...rest] = argv;
  try {
    if (cmd === "capture") return await cmdCapture(rest);
    if (cmd === "selftest") return await cmdSelftest(rest);
    process.stderr.write(USAGE + "\n");
    return 2;
  } catch (err) {
    if (err instanceof UsageError || err instanceof SinkSpecError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 2;
    }
    if (
      err instanceof CameraUnavailable ||
      err instanceof DetectorInitFailure ||
      err instanceof ClipError
    ) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    // parseArgs raises plain TypeError-ish codes for unknown flags
    if (err instanceof TypeError) {
      process.stderr.write(`error: ${err.message}\n${USAGE}\n`);
      return 2;
    }
    throw err;
  }
}

const entryName = process.argv[1]?.split("/").pop() ?? "";
const invokedDirectly = entryName === "cli.js" || entryName === "mesh-camera-adapter";
if (invokedDirectly) {
  main(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (err) => {
      process.stderr.write(`fatal: ${(err as Error).stack ?? err}\n`);
      process.exit(1);
    },
  );
}
