import { readFileSync } from "fs";
import Papa from "papaparse";

export type Row = Record<string, string>;

/** Parse a CSV file into header-keyed string rows, rejecting empty inputs. */
export function readCsv(path: string): Row[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Row>(text.trim(), { header: true, skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: CSV parse error: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new Error(`${path}: CSV has no data rows`);
  }
  return rows;
}

/** Assert the named columns exist; error names every missing one. */
export function requireColumns(rows: Row[], columns: string[], path: string): void {
  const present = new Set(Object.keys(rows[0]));
  const missing = columns.filter((c) => !present.has(c));
  if (missing.length > 0) {
    throw new Error(`${path}: missing required columns: ${missing.join(", ")}`);
  }
}

export function num(row: Row, column: string): number {
  const raw = row[column];
  if (raw === undefined || raw === "") return NaN;
  const value = Number(raw);
  if (Number.isNaN(value)) {
    throw new Error(`non-numeric value ${JSON.stringify(raw)} in column ${column}`);
  }
  return value;
}
