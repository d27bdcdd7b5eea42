import * as fs from "node:fs";

import { CommandUnreachable, runBatchCommand } from "./command.js";
import {
  Checkpoint,
  fingerprint,
  loadCheckpoint,
  saveCheckpoint,
} from "./checkpoint.js";
import { appendJsonlLine, readJsonl, requireString } from "./jsonl.js";

export interface BatchJobSpec {
  inputPath: string;
  outputPath: string;
  checkpointPath: string;
  modelId: string;
  batchSize: number;
  command: string[];
  /** Render one record for the external tool's stdin. */
  renderInput(record: Record<string, unknown>): string;
  /** Turn the tool's answer into a staged payload, or null to count the
   * record as failed. */
  acceptOutput(id: string, line: string): unknown | null;
  /** Write the final artifact from the deduplicated staged records. */
  finalize(staged: Array<{ id: string; payload: unknown }>, outputPath: string): void;
  maxFailureRate: number;
}

export interface BatchJobResult {
  processed: number;
  skipped: number;
  failed: number;
}

/**
 * Shared engine of the trees and embeddings exporters: stream the input
 * in batches through the external command, stage results with a resume
 * checkpoint, and only finalize the real output file when every record
 * has been visited and the failure budget holds.  Staged results
 * survive crashes; finalization deduplicates by record id, so resuming
 * can never duplicate output records.
 */
export function runBatchJob(spec: BatchJobSpec): BatchJobResult {
  const fp = fingerprint([spec.inputPath, spec.outputPath, spec.modelId]);
  const stagingPath = `${spec.outputPath}.staging.jsonl`;
  let checkpoint: Checkpoint | null = loadCheckpoint(spec.checkpointPath, fp);
  if (checkpoint === null) {
    checkpoint = { fingerprint: fp, modelId: spec.modelId, done: [], failed: [] };
    if (fs.existsSync(stagingPath)) fs.rmSync(stagingPath);
    fs.writeFileSync(stagingPath, "");
  }
  const seen = new Set([...checkpoint.done, ...checkpoint.failed]);

  const records = readJsonl(spec.inputPath);
  const pending: Array<{ id: string; record: Record<string, unknown> }> = [];
  const ids = new Set<string>();
  for (const record of records) {
    const id = requireString(record, "id", spec.inputPath);
    if (ids.has(id)) {
      throw new Error(`${spec.inputPath}: duplicate record id "${id}"`);
    }
    ids.add(id);
    if (!seen.has(id)) pending.push({ id, record });
  }
  const skipped = records.length - pending.length;

  for (let start = 0; start < pending.length; start += spec.batchSize) {
    const batch = pending.slice(start, start + spec.batchSize);
    const inputLines = batch.map(({ record }) => spec.renderInput(record));
    const outputLines = runBatchCommand(spec.command, inputLines);
    for (let i = 0; i < batch.length; i++) {
      const { id } = batch[i];
      const payload = spec.acceptOutput(id, outputLines[i]);
      if (payload === null) {
        process.stderr.write(`record ${id}: rejected tool output, skipping\n`);
        checkpoint.failed.push(id);
      } else {
        appendJsonlLine(stagingPath, { id, payload });
        checkpoint.done.push(id);
      }
    }
    saveCheckpoint(spec.checkpointPath, checkpoint);
  }

  // dedup by id (first staged result wins), drop ids no longer in the input
  const staged: Array<{ id: string; payload: unknown }> = [];
  const taken = new Set<string>();
  for (const entry of readJsonl(stagingPath) as Array<{ id: string; payload: unknown }>) {
    if (!taken.has(entry.id) && ids.has(entry.id)) {
      taken.add(entry.id);
      staged.push(entry);
    }
  }
  spec.finalize(staged, spec.outputPath);

  const failed = checkpoint.failed.filter((id) => ids.has(id)).length;
  const total = records.length;
  if (total > 0 && failed / total > spec.maxFailureRate) {
    throw new Error(
      `${failed}/${total} records failed, over the ` +
        `${(spec.maxFailureRate * 100).toFixed(0)}% budget`,
    );
  }
  return { processed: pending.length, skipped, failed };
}

export { CommandUnreachable };
