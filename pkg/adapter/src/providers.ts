import { readFile, access } from "node:fs/promises";

import { LANDMARK_COUNT, Landmark } from "./wire.js";
import { Rand, gaussian, mulberry32 } from "./prng.js";

export class CameraUnavailable extends Error {}
export class DetectorInitFailure extends Error {}

export class ClipError extends Error {
  constructor(message: string, readonly lineNo: number) {
    super(`line ${lineNo}: ${message}`);
  }
}

export interface MeshSample {
  face: boolean;
  lm: Landmark[];
}

/**
 * A landmark source. The capture loop owns timing; a provider only maps
 * "elapsed ms since capture start" to a mesh sample. null means the
 * source is exhausted (finite clips).
 */
export interface MeshProvider {
  init(): Promise<void>;
  next(elapsedMs: number): MeshSample | null | Promise<MeshSample | null>;
  close(): void;
}

// Eye contour indices the engine reads, in p1..p6 order.
const LEFT_EYE = [33, 160, 158, 133, 153, 144];
const RIGHT_EYE = [362, 385, 387, 263, 373, 380];
const X_OFF = [-0.5, -1 / 6, 1 / 6, 0.5, 1 / 6, -1 / 6];
const Y_SIGN = [0, -0.5, -0.5, 0, 0.5, 0.5];
const EYE_WIDTH_FRAC = 0.12;

export interface SyntheticOptions {
  seed?: number;
  openEar?: number;
  closedEar?: number;
  blinkEveryMs?: number;
  blinkMs?: number;
  noiseSigma?: number; // landmark-coordinate units, roughly EAR units
  occlusions?: Array<[number, number]>; // [startMs, endMs) spans, face=false
  width?: number;
  height?: number;
}

/**
 * Deterministic stand-in for a camera: a neutral face blinking on a
 * fixed cadence. Exists so the full adapter path runs on headless
 * machines and in CI.
 */
export class SyntheticProvider implements MeshProvider {
  private rand: Rand;
  private base: Landmark[] = [];
  private readonly opts: Required<SyntheticOptions>;

  constructor(options: SyntheticOptions = {}) {
    this.opts = {
      seed: options.seed ?? 1,
      openEar: options.openEar ?? 0.32,
      closedEar: options.closedEar ?? 0.12,
      blinkEveryMs: options.blinkEveryMs ?? 3800,
      blinkMs: options.blinkMs ?? 120,
      noiseSigma: options.noiseSigma ?? 0.004,
      occlusions: options.occlusions ?? [],
      width: options.width ?? 640,
      height: options.height ?? 480,
    };
    this.rand = mulberry32(this.opts.seed);
  }

  async init(): Promise<void> {
    this.rand = mulberry32(this.opts.seed);
    this.base = [];
    for (let i = 0; i < LANDMARK_COUNT; i++) {
      this.base.push([
        0.25 + 0.5 * this.rand(),
        0.25 + 0.5 * this.rand(),
        0.04 * (this.rand() - 0.5),
      ]);
    }
  }

  next(elapsedMs: number): MeshSample | null {
    for (const [start, end] of this.opts.occlusions) {
      if (elapsedMs >= start && elapsedMs < end) return { face: false, lm: [] };
    }
    const phase = elapsedMs % this.opts.blinkEveryMs;
    const ear = phase < this.opts.blinkMs ? this.opts.closedEar : this.opts.openEar;
    const lm = this.base.map(
      (p) =>
        [
          p[0] + this.opts.noiseSigma * gaussian(this.rand),
          p[1] + this.opts.noiseSigma * gaussian(this.rand),
          p[2],
        ] as Landmark,
    );
    this.placeEye(lm, LEFT_EYE, 0.35, 0.45, ear);
    this.placeEye(lm, RIGHT_EYE, 0.65, 0.45, ear);
    return { face: true, lm };
  }

  close(): void {}

  private placeEye(
    lm: Landmark[],
    idx: number[],
    cx: number,
    cy: number,
    ear: number,
  ): void {
    // the engine measures in pixel space, so the vertical offset is
    // scaled by w/h to make the pixel-space ratio equal the target
    const wNorm = EYE_WIDTH_FRAC;
    const aspect = this.opts.width / this.opts.height;
    for (let k = 0; k < 6; k++) {
      const jx = this.opts.noiseSigma * gaussian(this.rand);
      const jy = this.opts.noiseSigma * gaussian(this.rand);
      lm[idx[k]] = [
        cx + X_OFF[k] * wNorm + jx,
        cy + Y_SIGN[k] * ear * wNorm * aspect + jy,
        0,
      ];
    }
  }
}

/**
 * Replays a recorded landmark clip (wire-format lines; ts re-stamped by
 * the capture clock). The offline stand-in for "point the camera at a
 * face".
 */
export class ClipProvider implements MeshProvider {
  private frames: MeshSample[] = [];
  private cursor = 0;

  constructor(
    private readonly path: string,
    private readonly loop = false,
  ) {}

  async init(): Promise<void> {
    let text: string;
    try {
      text = await readFile(this.path, "utf-8");
    } catch (err) {
      throw new ClipError(`cannot read clip ${this.path}: ${(err as Error).message}`, 0);
    }
    const lines = text.split("\n").filter((l) => l.trim().length > 0);
    if (lines.length === 0) throw new ClipError("clip holds no frames", 0);
    this.frames = lines.map((line, i) => {
      let doc: unknown;
      try {
        doc = JSON.parse(line);
      } catch {
        throw new ClipError("truncated or corrupt record", i + 1);
      }
      const rec = doc as { face?: unknown; lm?: unknown };
      if (typeof rec.face !== "boolean" || !Array.isArray(rec.lm)) {
        throw new ClipError("record lacks face/lm fields", i + 1);
      }
      if (rec.face && rec.lm.length !== LANDMARK_COUNT) {
        throw new ClipError(`expected ${LANDMARK_COUNT} landmarks`, i + 1);
      }
      return { face: rec.face, lm: rec.lm as Landmark[] };
    });
    this.cursor = 0;
  }

  next(): MeshSample | null {
    if (this.cursor >= this.frames.length) {
      if (!this.loop) return null;
      this.cursor = 0;
    }
    return this.frames[this.cursor++];
  }

  close(): void {}
}

/**
 * Live camera through an optional mesh runtime. Init fails honestly on
 * machines without a video device or without the runtime installed;
 * detection logic stays in the engine either way.
 */
export class CameraProvider implements MeshProvider {
  constructor(private readonly cameraIndex: number) {}

  async init(): Promise<void> {
    const device = `/dev/video${this.cameraIndex}`;
    try {
      await access(device);
    } catch {
      throw new CameraUnavailable(`no camera at ${device}`);
    }
    try {
      await import("@mediapipe/tasks-vision" as string);
    } catch {
      throw new DetectorInitFailure(
        "mesh runtime not installed (npm install @mediapipe/tasks-vision)",
      );
    }
    throw new DetectorInitFailure(
      "no frame grabber wired for this platform; use --provider clip or synthetic",
    );
  }

  next(): MeshSample | null {
    throw new DetectorInitFailure("camera provider failed to initialize");
  }

  close(): void {}
}
