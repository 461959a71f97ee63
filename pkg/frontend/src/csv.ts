/**
 * Strict reader for the solver's numeric CSV artifacts.
 *
 * The trace and summary schemas are fixed by the producer; any deviation
 * (missing column, ragged row, non-numeric cell) is a hard error with a
 * message naming the file and the offending column or row.
 */

import { readFileSync } from "fs";

export class CsvSchemaError extends Error {}

export interface Table {
  path: string;
  header: string[];
  /** column name -> numeric values (empty cells become NaN) */
  columns: Map<string, number[]>;
  rows: number;
}

/** Split one CSV line; supports double-quoted fields (error column). */
function splitLine(line: string): string[] {
  const out: string[] = [];
  let cur = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"' && line[i + 1] === '"') {
        cur += '"';
        i++;
      } else if (ch === '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      out.push(cur);
      cur = "";
    } else {
      cur += ch;
    }
  }
  out.push(cur);
  return out;
}

export function readTable(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new CsvSchemaError(`${path}: cannot read file (${(err as Error).message})`);
  }
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new CsvSchemaError(`${path}: file is empty`);
  }
  const header = splitLine(lines[0]);
  const columns = new Map<string, number[]>(header.map((name) => [name, []]));
  for (let r = 1; r < lines.length; r++) {
    const cells = splitLine(lines[r]);
    if (cells.length !== header.length) {
      throw new CsvSchemaError(
        `${path}: row ${r} has ${cells.length} cells, header has ${header.length}`,
      );
    }
    for (let c = 0; c < header.length; c++) {
      const cell = cells[c];
      if (cell === "") {
        columns.get(header[c])!.push(NaN);
        continue;
      }
      const value = Number(cell);
      if (Number.isNaN(value) && !/^nan$/i.test(cell)) {
        // non-numeric text is only legal in the summary's error column
        if (header[c] === "error") {
          columns.get(header[c])!.push(NaN);
          continue;
        }
        throw new CsvSchemaError(
          `${path}: row ${r}, column '${header[c]}' is not numeric: '${cell}'`,
        );
      }
      columns.get(header[c])!.push(value);
    }
  }
  return { path, header, columns, rows: lines.length - 1 };
}

/** Fetch a required column, with a schema error naming what is missing. */
export function requireColumn(table: Table, name: string): number[] {
  const col = table.columns.get(name);
  if (col === undefined) {
    throw new CsvSchemaError(
      `${table.path}: expected column '${name}', header is [${table.header.join(", ")}]`,
    );
  }
  return col;
}

/** All columns matching a prefix_i family, in index order (1-based). */
export function familyColumns(table: Table, prefix: string): number[][] {
  const out: number[][] = [];
  for (let i = 1; ; i++) {
    const col = table.columns.get(`${prefix}${i}`);
    if (col === undefined) break;
    out.push(col);
  }
  return out;
}
