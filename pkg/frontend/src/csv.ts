/** Minimal RFC-4180 CSV reader: quoted fields, escaped quotes, CRLF. */

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const records: string[][] = [];
  let field = "";
  let record: string[] = [];
  let inQuotes = false;

  const endField = () => {
    record.push(field);
    field = "";
  };
  const endRecord = () => {
    endField();
    records.push(record);
    record = [];
  };

  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          inQuotes = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      inQuotes = true;
    } else if (ch === ",") {
      endField();
    } else if (ch === "\n") {
      endRecord();
    } else if (ch !== "\r") {
      field += ch;
    }
  }
  if (field.length > 0 || record.length > 0) endRecord();

  if (records.length === 0) {
    throw new SchemaError("empty CSV: no header row");
  }
  const columns = records[0]!;
  const rows = records.slice(1).map((rec) => {
    const row: Record<string, string> = {};
    columns.forEach((col, i) => {
      row[col] = rec[i] ?? "";
    });
    return row;
  });
  return { columns, rows };
}

/** Throw a SchemaError naming every required column the table lacks. */
export function requireColumns(table: Table, needed: string[], source: string): void {
  const missing = needed.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`${source}: missing columns: ${missing.join(", ")}`);
  }
}
