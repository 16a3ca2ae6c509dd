import { afterAll, beforeAll, describe, expect, it } from "vitest";
import path from "node:path";
import { evalSingle, evalThetaFile, generateSources } from "../src/mpqp.js";
import { compileGenerated, runParity, type ParityVector } from "../src/driver.js";
import { worstDeviation } from "../src/compare.js";
import { buildBench, makeWorkspace, removeWorkspace, type BuiltBench } from "../src/fixtures.js";
import fs from "node:fs";

// Scalar box-constrained least squares: x*(θ) = median(0, θ, 1). Small
// enough to pin exact values instead of tolerances.

let work: string;
let bench: BuiltBench;
let binary: string;
let dims: { nUser: number; m: number };

function drive(thetas: number[][]): ParityVector[] {
  return runParity(binary, thetas, dims);
}

beforeAll(() => {
  work = makeWorkspace("cpg-clamp-");
  bench = buildBench("clamp", work);
  const dir = path.join(work, "gen");
  const manifest = generateSources(bench.solutionFile, dir, "fp64");
  binary = compileGenerated(dir, manifest);
  dims = { nUser: manifest.problem.n_user, m: manifest.problem.m };
});

afterAll(() => removeWorkspace(work));

describe("demo driver", () => {
  it("returns x = 0.5 exactly at theta = 0.5", () => {
    const [row] = drive([[0.5]]);
    expect(row.status).toBe(0);
    expect(row.x).toEqual([0.5]);
    expect(row.duals).toEqual([0, 0]);
  });

  it("clamps an out-of-range theta onto the box and matches the evaluator at the edge", () => {
    // parameter box is [-5, 5], so 7 lands on the upper edge
    const [row] = drive([[7]]);
    const edge = evalSingle(bench.solutionFile, [5.0]);
    expect(row.status).toBe(0);
    expect(row.x).toEqual(edge.x);
    expect(row.duals).toEqual(edge.duals);
    expect(Math.abs((row.objective ?? NaN) - (edge.objective ?? NaN))).toBeLessThanOrEqual(1e-15);
  });

  it("clamps a parameter with box hi 1 fed 1.2 to the same answer as 1", () => {
    const power = buildBench("power", work);
    const dir = path.join(work, "power_gen");
    const manifest = generateSources(power.solutionFile, dir, "fp64");
    const bin = compileGenerated(dir, manifest);
    const pdims = { nUser: manifest.problem.n_user, m: manifest.problem.m };
    const inside = [0.25, 1.5, 0.5]; // remaining coordinates, all interior
    const [row] = runParity(bin, [[1.2, ...inside]], pdims);
    const edge = evalSingle(power.solutionFile, [1.0, ...inside]);
    expect(row.status).toBe(0);
    expect(edge.status).toBe("optimal");
    const diff = worstDeviation([row], [edge], "abs");
    expect(diff.worst).toBeLessThanOrEqual(1e-13);
  });

  it("answers one line per input row in order", () => {
    const thetas = [[-7], [0.25], [3], [0.75]];
    const rows = drive(thetas);
    expect(rows).toHaveLength(4);
    const thetaFile = path.join(work, "rows.txt");
    fs.writeFileSync(thetaFile, thetas.map((t) => t.join(" ")).join("\n") + "\n");
    const want = evalThetaFile(bench.solutionFile, thetaFile);
    const diff = worstDeviation(rows, want, "abs");
    expect(diff.statusMismatch).toBe(false);
    expect(diff.worst).toBeLessThanOrEqual(1e-12);
  });
});
