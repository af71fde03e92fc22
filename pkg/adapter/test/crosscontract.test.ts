import { spawnSync } from "node:child_process";
import { mkdtemp, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

const ROOT = new URL("..", import.meta.url).pathname;

interface ReplaySummary {
  frames: number;
  invalid_frames: number;
  skipped_lines: number;
  events: Record<string, number>;
}

function lastJsonLine(text: string): ReplaySummary {
  const lines = text.split("\n").filter((l) => l.startsWith("{"));
  expect(lines.length).toBeGreaterThan(0);
  return JSON.parse(lines[lines.length - 1]) as ReplaySummary;
}

function capture(...extra: string[]): ReturnType<typeof spawnSync> {
  return spawnSync(
    "node",
    [
      "dist/cli.js",
      "capture",
      "--provider",
      "clip",
      "--clip",
      "fixtures/clip.jsonl",
      "--fps",
      "250",
      ...extra,
    ],
    { cwd: ROOT, encoding: "utf-8", timeout: 30000, maxBuffer: 64 * 1024 * 1024 },
  );
}

describe("adapter output feeds the detector engine", () => {
  it("replays a captured session with zero skipped lines", async () => {
    const cap = capture();
    expect(cap.status).toBe(0);
    const sessionLines = (cap.stdout as string).split("\n").filter((l) => l.length > 0);
    expect(sessionLines).toHaveLength(50);

    const dir = await mkdtemp(join(tmpdir(), "crosscontract-"));
    const session = join(dir, "capture.jsonl");
    await writeFile(session, sessionLines.join("\n") + "\n");

    const replay = spawnSync(
      "drowsyguard",
      ["replay", session, "--fast", "--alert", "none"],
      { encoding: "utf-8", timeout: 30000 },
    );
    expect(replay.status).toBe(0);
    const summary = lastJsonLine(replay.stderr as string);
    expect(summary.skipped_lines).toBe(0);
    expect(summary.frames).toBe(50);
    expect(summary.invalid_frames).toBe(7);
    expect(summary.events.blink).toBeGreaterThanOrEqual(1);
  }, 30000);

  it("streams straight into the engine over a pipe", () => {
    const cmd =
      "node dist/cli.js capture --provider clip --clip fixtures/clip.jsonl --fps 250" +
      " | drowsyguard run --source stdin --alert none";
    const result = spawnSync("sh", ["-c", cmd], {
      cwd: ROOT,
      encoding: "utf-8",
      timeout: 30000,
      maxBuffer: 64 * 1024 * 1024,
    });
    expect(result.status).toBe(0);
    const summary = lastJsonLine(result.stderr as string);
    expect(summary.skipped_lines).toBe(0);
    expect(summary.frames).toBe(50);
    expect(summary.events.blink).toBeGreaterThanOrEqual(1);
  }, 30000);

  it("synthetic capture is accepted end to end", async () => {
    const cap = spawnSync(
      "node",
      [
        "dist/cli.js",
        "capture",
        "--provider",
        "synthetic",
        "--fps",
        "200",
        "--max-frames",
        "80",
        "--seed",
        "9",
      ],
      { cwd: ROOT, encoding: "utf-8", timeout: 30000, maxBuffer: 64 * 1024 * 1024 },
    );
    expect(cap.status).toBe(0);

    const dir = await mkdtemp(join(tmpdir(), "crosscontract-"));
    const session = join(dir, "synthetic.jsonl");
    await writeFile(session, cap.stdout as string);

    const replay = spawnSync(
      "drowsyguard",
      ["replay", session, "--fast", "--alert", "none"],
      { encoding: "utf-8", timeout: 30000 },
    );
    expect(replay.status).toBe(0);
    const summary = lastJsonLine(replay.stderr as string);
    expect(summary.skipped_lines).toBe(0);
    expect(summary.frames).toBe(80);
  }, 30000);
});
