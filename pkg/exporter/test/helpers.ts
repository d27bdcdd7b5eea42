import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export const MOCKS = path.join(__dirname, "mocks");

export function tmpDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "avstk-export-"));
}

export function writeJsonl(filePath: string, records: unknown[]): void {
  fs.writeFileSync(
    filePath,
    records.map((record) => JSON.stringify(record)).join("\n") +
      (records.length ? "\n" : ""),
  );
}

/** Run a python snippet against the primary toolkit; returns stdout. */
export function pythonValidate(script: string, ...args: string[]): string {
  const result = spawnSync("python3", ["-c", script, ...args], {
    encoding: "utf-8",
  });
  if (result.status !== 0) {
    throw new Error(`primary validator failed: ${result.stderr}`);
  }
  return result.stdout;
}

export const VALIDATE_TREES = `
import sys
from avstoolkit.treebank import read_trees_jsonl
records = list(read_trees_jsonl(sys.argv[1]))
print(len(records))
`;

export const VALIDATE_DENSE = `
import sys
from avstoolkit.vectors import load_dense_store
store = load_dense_store(sys.argv[1])
print(len(store.ids), store.dim)
`;

export const VALIDATE_FRAMES = `
import json, sys
from avstoolkit.dataset import frame_schedule
videos = {}
for line in open(sys.argv[1]):
    record = json.loads(line)
    videos[record["video_id"]] = record["duration"]
seen = {}
for line in open(sys.argv[2]):
    record = json.loads(line)
    seen.setdefault(record["video_id"], []).append(record["frame_time"])
for video_id, times in seen.items():
    expected = frame_schedule(videos[video_id])
    assert times == expected, (video_id, times, expected)
print(len(seen))
`;
