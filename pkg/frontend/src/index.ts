/**
 * Bindings for the qispline fitting tool.
 *
 * The wrapper drives the command line interface: build() writes the
 * sample buffers to a grid file, runs `fit` and keeps the resulting
 * spline JSON behind an opaque handle; evaluate() runs `eval` and parses
 * the CSV back into a Float64Array. All numeric data crosses the boundary
 * as float64 buffers (copied on build; fitting cost dominates), and tool
 * failures surface as QisplineError carrying the tool's message and exit
 * code. Handles stay valid until release().
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { writeGridFile, type GridData } from "./gridfile.js";

const PYTHON = process.env.QISPLINE_PYTHON ?? "python3";

export class QisplineError extends Error {
  constructor(message: string, readonly exitCode: number | null) {
    super(message);
    this.name = "QisplineError";
  }
}

function runTool(args: string[]): string {
  try {
    return execFileSync(PYTHON, ["-m", "qispline", ...args], {
      encoding: "utf-8",
      maxBuffer: 1 << 28,
    });
  } catch (err) {
    const e = err as { status?: number | null; stderr?: string | Buffer };
    const msg = (e.stderr ?? "").toString().trim() || String(err);
    throw new QisplineError(msg.replace(/^error:\s*/, ""), e.status ?? null);
  }
}

export type FloatData = Float64Array | number[];

export interface BuildOptions {
  /** One to three strictly increasing axis node arrays. */
  nodes: FloatData[];
  /** Samples, x index fastest (matching the grid file payload order). */
  values: FloatData;
  /** Exact derivatives: [fp] in 1D, [fx, fy, fxy] in 2D. Omit to use differences. */
  derivatives?: FloatData[];
  /** Spline degree per axis (a single number is broadcast). */
  degrees: number | number[];
  /** Difference order per axis for the approximate variant. */
  fdOrders?: number | number[];
  /** Periodic flag per axis; periodic axes also need a period. */
  periodic?: boolean[];
  periods?: (number | null)[];
}

function asF64(data: FloatData): Float64Array {
  return data instanceof Float64Array ? Float64Array.from(data) : new Float64Array(data);
}

function broadcast(v: number | number[] | undefined, dim: number): number[] | undefined {
  if (v === undefined) return undefined;
  const list = typeof v === "number" ? [v] : v;
  return list.length === 1 ? new Array(dim).fill(list[0]) : list;
}

/** Opaque reference to a fitted spline, evaluation-only after build. */
export class SplineHandle {
  readonly dim: number;
  private dir: string | null;
  private splinePath: string;
  private json: string;

  private constructor(dir: string, splinePath: string, json: string, dim: number) {
    this.dir = dir;
    this.splinePath = splinePath;
    this.json = json;
    this.dim = dim;
  }

  static fromBuild(dir: string, splinePath: string): SplineHandle {
    const json = readFileSync(splinePath, "utf-8");
    const dim = (JSON.parse(json).degrees as number[]).length;
    return new SplineHandle(dir, splinePath, json, dim);
  }

  /** Adopt an already-serialized spline (no fitting run). */
  static fromJSON(json: string): SplineHandle {
    const dim = (JSON.parse(json).degrees as number[]).length;
    const dir = mkdtempSync(join(tmpdir(), "qispline-"));
    const splinePath = join(dir, "spline.json");
    writeFileSync(splinePath, json);
    return new SplineHandle(dir, splinePath, json, dim);
  }

  private assertAlive(): void {
    if (this.dir === null) {
      throw new QisplineError("handle already released", null);
    }
  }

  /** The spline's JSON serialization, byte-identical to the tool's output. */
  serialize(): string {
    this.assertAlive();
    return this.json;
  }

  /**
   * Evaluate at points (row-flattened, dim columns per point). Returns one
   * float64 per point; out-of-domain points raise.
   */
  evaluate(points: FloatData, derivOrders?: number | number[]): Float64Array {
    this.assertAlive();
    const pts = asF64(points);
    if (pts.length === 0 || pts.length % this.dim !== 0) {
      throw new QisplineError(
        `point buffer length ${pts.length} is not a multiple of dim ${this.dim}`,
        null,
      );
    }
    const rows: string[] = [];
    for (let i = 0; i < pts.length; i += this.dim) {
      rows.push(Array.from(pts.subarray(i, i + this.dim), String).join(","));
    }
    const ptsPath = join(this.dir as string, "points.csv");
    writeFileSync(ptsPath, rows.join("\n") + "\n");
    const args = ["eval", this.splinePath, "--points", ptsPath];
    const orders = broadcast(derivOrders, this.dim);
    if (orders) args.push("--deriv", orders.join(","));
    const out = runTool(args);
    const lines = out.trim().split("\n");
    const values = new Float64Array(lines.length);
    for (let i = 0; i < lines.length; i++) {
      const cols = lines[i].split(",");
      values[i] = Number(cols[cols.length - 1]);
    }
    return values;
  }

  /** Free the handle's files; the handle becomes unusable. Idempotent. */
  release(): void {
    if (this.dir !== null) {
      rmSync(this.dir, { recursive: true, force: true });
      this.dir = null;
      this.json = "";
    }
  }
}

/** Fit a spline to gridded samples and return a handle to it. */
export function build(options: BuildOptions): SplineHandle {
  const dim = options.nodes.length;
  if (dim < 1 || dim > 3) {
    throw new QisplineError(`need 1 to 3 axes, got ${dim}`, null);
  }
  const degrees = broadcast(options.degrees, dim) as number[];
  if (degrees.length !== dim) {
    throw new QisplineError(`got ${degrees.length} degrees for ${dim} axes`, null);
  }
  const fdOrders = broadcast(options.fdOrders, dim);
  const hermite = options.derivatives !== undefined;

  const grid: GridData = {
    axes: options.nodes.map(asF64),
    periodic: options.periodic ?? new Array(dim).fill(false),
    periods: options.periods ?? new Array(dim).fill(null),
    fields: [{ name: "f", data: asF64(options.values) }],
  };
  if (hermite) {
    const names = dim === 1 ? ["fp"] : ["fx", "fy", "fxy"];
    const given = options.derivatives as FloatData[];
    if (given.length !== names.length) {
      throw new QisplineError(
        `expected ${names.length} derivative buffers for ${dim}D, got ${given.length}`,
        null,
      );
    }
    names.forEach((name, i) => grid.fields.push({ name, data: asF64(given[i]) }));
  }

  const dir = mkdtempSync(join(tmpdir(), "qispline-"));
  try {
    const gridPath = join(dir, "grid.csv");
    writeGridFile(gridPath, grid);
    const splinePath = join(dir, "spline.json");
    const args = ["fit", gridPath, "-o", splinePath, "--degree", degrees.join(",")];
    if (fdOrders) args.push("--fd-order", fdOrders.join(","));
    if (hermite) args.push("--hermite");
    const periodicIdx = grid.periodic
      .map((flag, i) => (flag ? i : -1))
      .filter((i) => i >= 0);
    if (periodicIdx.length > 0) args.push("--periodic", periodicIdx.join(","));
    runTool(args);
    return SplineHandle.fromBuild(dir, splinePath);
  } catch (err) {
    rmSync(dir, { recursive: true, force: true });
    throw err;
  }
}

/** One-call convenience: build, evaluate, release. */
export function fitEval(
  options: BuildOptions,
  points: FloatData,
  derivOrders?: number | number[],
): Float64Array {
  const handle = build(options);
  try {
    return handle.evaluate(points, derivOrders);
  } finally {
    handle.release();
  }
}
