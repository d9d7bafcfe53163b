// ── strict CSV reading for the harness file contracts ──
//
// The benchmark harness writes plain comma-separated files: a single header
// line followed by numeric (or bare-identifier) fields, no quoting and no
// embedded commas.  Parsing is deliberately strict — a malformed file should
// fail loudly with the offending location rather than produce a silent,
// wrong figure.

export class DataError extends Error {}

export interface CsvTable {
  /** Column names from the header line, in file order. */
  header: string[];
  /** Data rows; every row has exactly `header.length` fields. */
  rows: string[][];
  /** Where the table came from, for error messages. */
  source: string;
}

export function parseCsv(text: string, source: string): CsvTable {
  const lines = text.split(/\r?\n/);
  while (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new DataError(`${source}: file is empty`);
  }
  const header = (lines[0] as string).split(",").map((name) => name.trim());
  if (header.some((name) => name === "")) {
    throw new DataError(`${source}: header has an empty column name`);
  }
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i] as string;
    if (line === "") {
      throw new DataError(`${source}: blank line ${i + 1} inside data`);
    }
    const fields = line.split(",").map((field) => field.trim());
    if (fields.length !== header.length) {
      throw new DataError(
        `${source}: line ${i + 1} has ${fields.length} fields, expected ${header.length}`,
      );
    }
    rows.push(fields);
  }
  if (rows.length === 0) {
    throw new DataError(`${source}: no data rows`);
  }
  return { header, rows, source };
}

/**
 * Map required column names to their indices, failing with the name of the
 * first missing column.
 */
export function requireColumns(
  table: CsvTable,
  required: string[],
): Record<string, number> {
  const indices: Record<string, number> = {};
  for (const name of required) {
    const index = table.header.indexOf(name);
    if (index < 0) {
      throw new DataError(`${table.source}: missing column '${name}'`);
    }
    indices[name] = index;
  }
  return indices;
}

/** Read one column as finite numbers. */
export function numericColumn(table: CsvTable, name: string): number[] {
  const index = requireColumns(table, [name])[name] as number;
  const values: number[] = [];
  for (let i = 0; i < table.rows.length; i++) {
    const raw = (table.rows[i] as string[])[index] as string;
    const value = Number(raw);
    if (raw === "" || !Number.isFinite(value)) {
      throw new DataError(
        `${table.source}: column '${name}' line ${i + 2}: not a finite number: '${raw}'`,
      );
    }
    values.push(value);
  }
  return values;
}

/** Read one column as untouched strings. */
export function stringColumn(table: CsvTable, name: string): string[] {
  const index = requireColumns(table, [name])[name] as number;
  return table.rows.map((row) => row[index] as string);
}
