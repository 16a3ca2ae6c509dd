import type { EvalRow } from "./mpqp.js";
import type { ParityVector } from "./driver.js";

export interface RowDiff {
  index: number;
  worst: number;
  statusMismatch: boolean;
}

function concatOutputs(x: number[], duals: number[], objective: number | null): number[] {
  return [...x, ...duals, ...(objective === null ? [] : [objective])];
}

/** Worst per-row deviation between driver answers and evaluator answers.
 * mode "abs": plain |a - b|.  mode "rel": |a - b| / max(1, |b|), the usual
 * floor so near-zero entries are judged absolutely. */
export function worstDeviation(
  got: ParityVector[],
  want: EvalRow[],
  mode: "abs" | "rel",
): RowDiff {
  if (got.length !== want.length) {
    throw new Error(`row count mismatch: ${got.length} vs ${want.length}`);
  }
  let out: RowDiff = { index: -1, worst: 0, statusMismatch: false };
  for (let i = 0; i < got.length; i++) {
    const g = got[i];
    const w = want[i];
    const gInfeasible = g.status === 1;
    const wInfeasible = w.status === "infeasible";
    if (gInfeasible !== wInfeasible) {
      return { index: i, worst: Infinity, statusMismatch: true };
    }
    if (gInfeasible) continue;
    const a = concatOutputs(g.x, g.duals, g.objective);
    const b = concatOutputs(w.x, w.duals, w.objective);
    if (a.length !== b.length) {
      throw new Error(`field count mismatch on row ${i}: ${a.length} vs ${b.length}`);
    }
    for (let j = 0; j < a.length; j++) {
      const d = Math.abs(a[j] - b[j]);
      const err = mode === "abs" ? d : d / Math.max(1, Math.abs(b[j]));
      if (err > out.worst) out = { index: i, worst: err, statusMismatch: false };
    }
  }
  return out;
}
