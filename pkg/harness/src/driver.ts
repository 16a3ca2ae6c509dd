import { execFileSync, spawnSync } from "node:child_process";
import path from "node:path";
import type { Manifest } from "./mpqp.js";

/** One driver answer: the theta row sent in and the numbers printed back. */
export interface ParityVector {
  theta: number[];
  status: 0 | 1; // 0 = optimal, 1 = infeasible
  x: number[];
  duals: number[];
  objective: number | null;
}

/** Compile the emitted sources with exactly the invocation the manifest
 * records (warnings are errors there, so any diagnostic fails the build).
 * Returns the path of the produced binary. */
export function compileGenerated(dir: string, manifest: Manifest): string {
  const argv = manifest.compile;
  execFileSync(argv[0], argv.slice(1), { cwd: dir, stdio: "pipe" });
  const out = argv[argv.indexOf("-o") + 1];
  return path.join(dir, out);
}

export function formatThetaRows(rows: number[][]): string {
  return rows.map((r) => r.map((v) => v.toString()).join(" ")).join("\n") + "\n";
}

/** Stream theta rows through the demo driver over stdin and parse its
 * fixed-format answers: "1" per infeasible row, otherwise
 * "0 <x_user...> <duals...> <objective>". */
export function runParity(
  binary: string,
  rows: number[][],
  dims: { nUser: number; m: number },
): ParityVector[] {
  const proc = spawnSync(binary, [], {
    input: formatThetaRows(rows),
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.status !== 0) {
    throw new Error(`driver exited ${proc.status}: ${proc.stderr}`);
  }
  const lines = proc.stdout.trim().split("\n");
  if (lines.length !== rows.length) {
    throw new Error(`driver printed ${lines.length} lines for ${rows.length} rows`);
  }
  return lines.map((line, i) => {
    const tok = line.trim().split(/\s+/).map(Number);
    if (tok.some(Number.isNaN)) throw new Error(`malformed driver line: ${line}`);
    if (tok[0] === 1) {
      if (tok.length !== 1) throw new Error(`infeasible line carries values: ${line}`);
      return { theta: rows[i], status: 1 as const, x: [], duals: [], objective: null };
    }
    if (tok[0] !== 0 || tok.length !== 1 + dims.nUser + dims.m + 1) {
      throw new Error(`bad field count on driver line: ${line}`);
    }
    return {
      theta: rows[i],
      status: 0 as const,
      x: tok.slice(1, 1 + dims.nUser),
      duals: tok.slice(1 + dims.nUser, 1 + dims.nUser + dims.m),
      objective: tok[tok.length - 1],
    };
  });
}
