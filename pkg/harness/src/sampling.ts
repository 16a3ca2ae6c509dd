import type { ProblemFile } from "./mpqp.js";

/** mulberry32 — tiny deterministic PRNG, plenty for spreading test points. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface Box {
  lo: number[];
  hi: number[];
}

function isIdentity(C: number[][], c: number[]): boolean {
  if (C.length === 0 || C.length !== C[0].length) return false;
  if (c.some((v) => v !== 0)) return false;
  return C.every((row, i) => row.every((v, j) => v === (i === j ? 1 : 0)));
}

/** Sampling range in user-parameter coordinates. Benchmark problems carry
 * identity parameter maps, so the stored box transfers directly; anything
 * fancier falls back to a unit cube (the solver clamps either way). */
export function userBox(problem: ProblemFile): Box {
  const maps = problem.user_maps;
  if (isIdentity(maps.C, maps.c)) {
    return { lo: [...problem.theta_box_lo], hi: [...problem.theta_box_hi] };
  }
  const pUser = maps.C[0]?.length ?? problem.p;
  return { lo: Array(pUser).fill(-1), hi: Array(pUser).fill(1) };
}

/** Uniform rows over the box stretched by `margin` (fraction of each span;
 * negative shrinks strictly inside, positive spills outside on purpose so
 * the clamping path gets exercised). */
export function sampleRows(
  box: Box,
  count: number,
  seed: number,
  margin = 0,
): number[][] {
  const rand = mulberry32(seed);
  const rows: number[][] = [];
  for (let k = 0; k < count; k++) {
    const row = box.lo.map((lo, j) => {
      const span = box.hi[j] - lo;
      const a = lo - margin * span;
      const b = box.hi[j] + margin * span;
      return a + (b - a) * rand();
    });
    rows.push(row);
  }
  return rows;
}
