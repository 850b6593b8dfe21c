/** Minimal CSV reading for the run-artifact contract (no quoting needed). */

export interface CsvTable {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): CsvTable {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { header, rows };
}

/** Index of a required column; throws naming the column when absent. */
export function columnIndex(table: CsvTable, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing column '${name}' (have: ${table.header.join(", ")})`);
  }
  return idx;
}

export function numericColumn(table: CsvTable, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row) => (row[idx] === "" ? NaN : Number(row[idx])));
}
