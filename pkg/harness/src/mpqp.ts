import { execFileSync } from "node:child_process";
import fs from "node:fs";
import path from "node:path";

// Everything here talks to the solver toolkit strictly through its public
// surface: the `mpqp` command line, the problem/solution files it reads and
// writes, and the generated-C manifest.

const MPQP_BIN = process.env.MPQP_BIN ?? "mpqp";

export interface UserMaps {
  C: number[][];
  c: number[];
  R: number[][];
  r: number[];
  param_names: string[];
  var_names: string[];
  dual_names: string[];
}

export interface ProblemFile {
  n: number;
  m: number;
  me: number;
  p: number;
  theta_box_lo: number[];
  theta_box_hi: number[];
  user_maps: UserMaps;
}

export interface EvalRow {
  status: "optimal" | "infeasible";
  region: number | null;
  x: number[];
  duals: number[];
  objective: number | null;
}

export interface ManifestApi {
  solve: string;
  objective: string;
  result: string;
  updates: string[];
}

export interface Manifest {
  files: Record<string, number>; // source name -> byte size
  compile: string[];
  precision: "fp64" | "fp32";
  point_location: string;
  flop_bound: number;
  coefficient_count: number;
  coefficient_estimate: number;
  data_bytes: number;
  problem: Record<string, number>;
  api: ManifestApi;
}

export function runMpqp(args: string[]): string {
  return execFileSync(MPQP_BIN, args, {
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
}

/** Construct a named benchmark problem and write it as a problem file. */
export function writeBenchProblem(
  name: string,
  file: string,
  opts: { seed?: number; samples?: number } = {},
): void {
  const args = ["bench", name, "--write-problem", file];
  if (opts.seed !== undefined) args.push("--seed", String(opts.seed));
  // Oracle profiling is not what we are after; keep the sweep short.
  args.push("--samples", String(opts.samples ?? 10));
  runMpqp(args);
  if (!fs.existsSync(file)) throw new Error(`bench did not write ${file}`);
}

/** Run the offline phase and save the solution container (with tree). */
export function buildSolution(problemFile: string, solutionFile: string): void {
  runMpqp(["build", problemFile, "--out", solutionFile]);
}

/** Emit the C sources for a saved solution and return the parsed manifest. */
export function generateSources(
  solutionFile: string,
  outDir: string,
  precision: "fp64" | "fp32",
): Manifest {
  runMpqp(["codegen", solutionFile, "--out", outDir, "--precision", precision]);
  return loadManifest(outDir);
}

/** Evaluate a whitespace-separated theta file through the CLI evaluator. */
export function evalThetaFile(solutionFile: string, thetaFile: string): EvalRow[] {
  const out = runMpqp(["eval", solutionFile, "--file", thetaFile, "--json"]);
  return (JSON.parse(out) as { results: EvalRow[] }).results;
}

/** Evaluate a single theta row (values must precede flags in this CLI). */
export function evalSingle(solutionFile: string, theta: number[]): EvalRow {
  const args = ["eval", solutionFile, ...theta.map(String), "--json"];
  const out = runMpqp(args);
  return (JSON.parse(out) as { results: EvalRow[] }).results[0];
}

export function loadProblem(file: string): ProblemFile {
  return JSON.parse(fs.readFileSync(file, "utf8")) as ProblemFile;
}

export function loadManifest(dir: string): Manifest {
  const file = path.join(dir, "cpg_manifest.json");
  return JSON.parse(fs.readFileSync(file, "utf8")) as Manifest;
}

export function readSource(dir: string, name: string): string {
  return fs.readFileSync(path.join(dir, name), "utf8");
}
