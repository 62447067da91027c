import Papa from "papaparse";

export const EXPECTED_HEADER = [
  "sweep_param",
  "sweep_value",
  "algorithm",
  "nmse_linear",
  "nmse_db",
  "trials",
  "stderr_db",
  "failed_trials",
] as const;

export type SweepKind = "snr" | "pilot";

export interface SweepRow {
  sweepParam: string;
  sweepValue: number;
  algorithm: string;
  nmseLinear: number;
  nmseDb: number;
  trials: number;
  stderrDb: number;
  failedTrials: number;
}

export class SchemaError extends Error {}

const NUMERIC_COLUMNS: [keyof SweepRow, string][] = [
  ["sweepValue", "sweep_value"],
  ["nmseLinear", "nmse_linear"],
  ["nmseDb", "nmse_db"],
  ["trials", "trials"],
  ["stderrDb", "stderr_db"],
  ["failedTrials", "failed_trials"],
];

/** Parse harness sweep CSV, enforcing the exact column contract. */
export function parseSweepCsv(text: string): SweepRow[] {
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse failure: ${parsed.errors[0].message}`);
  }
  const data = parsed.data;
  if (data.length === 0) {
    throw new SchemaError("CSV is empty");
  }
  const header = data[0];
  for (let i = 0; i < EXPECTED_HEADER.length; i++) {
    if (header[i] !== EXPECTED_HEADER[i]) {
      throw new SchemaError(
        `column ${i + 1} must be '${EXPECTED_HEADER[i]}', found '${header[i] ?? "<missing>"}'`
      );
    }
  }
  if (header.length !== EXPECTED_HEADER.length) {
    throw new SchemaError(`unexpected extra column '${header[EXPECTED_HEADER.length]}'`);
  }
  if (data.length === 1) {
    throw new SchemaError("CSV has a header but no data rows");
  }

  const rows: SweepRow[] = [];
  for (let line = 1; line < data.length; line++) {
    const cells = data[line];
    if (cells.length !== EXPECTED_HEADER.length) {
      throw new SchemaError(
        `row ${line + 1} has ${cells.length} cells, expected ${EXPECTED_HEADER.length}`
      );
    }
    const row: SweepRow = {
      sweepParam: cells[0],
      sweepValue: parseNumber(cells[1], "sweep_value", line),
      algorithm: cells[2],
      nmseLinear: parseNumber(cells[3], "nmse_linear", line),
      nmseDb: parseNumber(cells[4], "nmse_db", line),
      trials: parseNumber(cells[5], "trials", line),
      stderrDb: parseNumber(cells[6], "stderr_db", line),
      failedTrials: parseNumber(cells[7], "failed_trials", line),
    };
    rows.push(row);
  }
  return rows;
}

function parseNumber(cell: string, column: string, line: number): number {
  // The harness prints nan / inf / -inf for degenerate aggregates.
  if (cell === "nan") return NaN;
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  const value = Number(cell);
  if (cell.trim() === "" || Number.isNaN(value)) {
    throw new SchemaError(`column '${column}' on row ${line + 1} is not numeric: '${cell}'`);
  }
  return value;
}

/** Check that every row's sweep_param matches the requested figure kind. */
export function checkKind(rows: SweepRow[], kind: SweepKind): void {
  for (const row of rows) {
    if (row.sweepParam !== kind) {
      throw new SchemaError(
        `sweep_param '${row.sweepParam}' does not match requested kind '${kind}'`
      );
    }
  }
}
