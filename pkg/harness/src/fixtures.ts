import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import {
  buildSolution,
  loadProblem,
  writeBenchProblem,
  type ProblemFile,
} from "./mpqp.js";

export interface BuiltBench {
  name: string;
  dir: string;
  problemFile: string;
  solutionFile: string;
  problem: ProblemFile;
}

export function makeWorkspace(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

export function removeWorkspace(dir: string): void {
  fs.rmSync(dir, { recursive: true, force: true });
}

/** Problem file + offline solve for one named benchmark, all via the CLI. */
export function buildBench(name: string, dir: string): BuiltBench {
  const problemFile = path.join(dir, `${name}.json`);
  const solutionFile = path.join(dir, `${name}.sol`);
  writeBenchProblem(name, problemFile);
  buildSolution(problemFile, solutionFile);
  return { name, dir, problemFile, solutionFile, problem: loadProblem(problemFile) };
}
