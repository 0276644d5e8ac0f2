/**
 * Writer for the tool's grid file format: one '#'-prefixed JSON header
 * line, then one sample per line in x-fastest order, field blocks
 * concatenated in header order. JS number-to-string conversion emits
 * shortest round-trip decimals, so doubles survive the text layer.
 */

import { writeFileSync } from "node:fs";

export interface GridField {
  name: string;
  /** Samples flattened with the x index fastest. */
  data: Float64Array;
}

export interface GridData {
  axes: Float64Array[];
  periodic: boolean[];
  periods: (number | null)[];
  fields: GridField[];
}

export function writeGridFile(path: string, grid: GridData): void {
  const dim = grid.axes.length;
  const npoints = grid.axes.reduce((acc, a) => acc * a.length, 1);
  for (const f of grid.fields) {
    if (f.data.length !== npoints) {
      throw new Error(
        `field ${f.name} has ${f.data.length} samples, grid has ${npoints} points`,
      );
    }
  }
  const header = {
    dim,
    axes: grid.axes.map((a) => ({ nodes: Array.from(a) })),
    periodic: grid.periodic,
    period: grid.periods,
    fields: grid.fields.map((f) => f.name),
    components: 1,
    encoding: "csv",
  };
  const chunks: string[] = ["#" + JSON.stringify(header)];
  for (const f of grid.fields) {
    for (let i = 0; i < f.data.length; i++) {
      chunks.push(String(f.data[i]));
    }
  }
  writeFileSync(path, chunks.join("\n") + "\n");
}
