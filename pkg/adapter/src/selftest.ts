import { performance } from "node:perf_hooks";

import { ClipProvider } from "./providers.js";
import { formatLine, validateLine } from "./wire.js";

export interface SelftestReport {
  ok: boolean;
  lines: number;
  faceLines: number;
  fps: number; // offline processing rate, not capture pacing
  errors: string[];
}

/**
 * Offline health check: replay a clip through the same record-building
 * path capture uses and validate every emitted line against the wire
 * contract. No sockets, no pacing, no camera.
 */
export async function selftest(
  clipPath: string,
  width = 640,
  height = 480,
): Promise<SelftestReport> {
  const report: SelftestReport = { ok: false, lines: 0, faceLines: 0, fps: 0, errors: [] };
  const provider = new ClipProvider(clipPath);
  try {
    await provider.init();
  } catch (err) {
    report.errors.push((err as Error).message);
    return report;
  }

  const started = performance.now();
  let ts = 0;
  for (;;) {
    const sample = provider.next();
    if (sample === null) break;
    const line = formatLine({
      ts_ms: ts,
      w: width,
      h: height,
      face: sample.face,
      lm: sample.face ? sample.lm : [],
    });
    const problem = validateLine(line);
    if (problem !== null) {
      report.errors.push(`frame ${report.lines + 1}: ${problem}`);
      if (report.errors.length >= 5) break;
    }
    report.lines++;
    if (sample.face) report.faceLines++;
    ts += 40;
  }
  provider.close();

  const elapsedMs = performance.now() - started;
  report.fps = elapsedMs > 0 ? (report.lines * 1000) / elapsedMs : 0;
  report.ok = report.errors.length === 0 && report.lines > 0;
  return report;
}

export function formatSelftest(report: SelftestReport): string {
  const lines = [
    `lines checked: ${report.lines}`,
    `face frames: ${report.faceLines}`,
    `no-face frames: ${report.lines - report.faceLines}`,
    `achieved fps: ${report.fps.toFixed(0)}`,
  ];
  for (const err of report.errors) lines.push(`error: ${err}`);
  lines.push(report.ok ? "selftest: ok" : "selftest: FAILED");
  return lines.join("\n");
}
