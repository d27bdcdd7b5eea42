import * as fs from "node:fs";

export interface JsonlRecord {
  [key: string]: unknown;
}

/** Read newline-delimited JSON, reporting the file and line on bad input. */
export function readJsonl(path: string): JsonlRecord[] {
  const text = fs.readFileSync(path, "utf-8");
  const records: JsonlRecord[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    try {
      records.push(JSON.parse(line) as JsonlRecord);
    } catch (err) {
      throw new Error(`${path}:${i + 1}: invalid JSON: ${(err as Error).message}`);
    }
  }
  return records;
}

export function requireString(
  record: JsonlRecord,
  key: string,
  where: string,
): string {
  const value = record[key];
  if (typeof value !== "string" || value.length === 0) {
    throw new Error(`${where}: missing or empty string field "${key}"`);
  }
  return value;
}

export function appendJsonlLine(path: string, record: unknown): void {
  fs.appendFileSync(path, JSON.stringify(record) + "\n");
}
