// Deterministic PRNG so synthetic captures replay byte-identically.
// mulberry32: tiny, fast, plenty for jitter and noise.

export type Rand = () => number;

export function mulberry32(seed: number): Rand {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Standard normal via Box-Muller. */
export function gaussian(rand: Rand): number {
  let u = 0;
  while (u === 0) u = rand(); // log(0) guard
  return Math.sqrt(-2.0 * Math.log(u)) * Math.cos(2.0 * Math.PI * rand());
}
