import * as fs from "node:fs";

import { runBatchJob, BatchJobResult } from "./batchJob.js";

export interface TreesExportOptions {
  inputPath: string;
  outputPath: string;
  parserCommand: string[];
  modelId: string;
  batchSize: number;
  checkpointPath?: string;
  maxFailureRate?: number;
}

/** Cheap well-formedness gate; the toolkit's own parser stays authoritative. */
export function looksLikeTree(line: string): boolean {
  const text = line.trim();
  if (!text.startsWith("(") || !text.endsWith(")") || text.length <= 2) {
    return false;
  }
  let depth = 0;
  for (let i = 0; i < text.length; i++) {
    const c = text[i];
    if (c === "(") depth++;
    else if (c === ")") {
      depth--;
      if (depth < 0) return false;
      if (depth === 0 && i !== text.length - 1) return false; // second root
    }
  }
  return depth === 0;
}

/**
 * Batch-parse raw captions (`{"id", "text"}` JSONL) into the toolkit's
 * `.trees.jsonl` via an external constituency parser that reads one
 * sentence per stdin line and answers one bracketed tree per line.
 */
export function exportTrees(options: TreesExportOptions): BatchJobResult {
  return runBatchJob({
    inputPath: options.inputPath,
    outputPath: options.outputPath,
    checkpointPath: options.checkpointPath ?? `${options.outputPath}.ckpt`,
    modelId: options.modelId,
    batchSize: options.batchSize,
    command: options.parserCommand,
    maxFailureRate: options.maxFailureRate ?? 0.01,
    renderInput(record) {
      const text = record["text"];
      if (typeof text !== "string") {
        throw new Error(`${options.inputPath}: record without "text" field`);
      }
      // the parser protocol is line-based; flatten any stray newlines
      return text.replace(/\s+/g, " ").trim();
    },
    acceptOutput(_id, line) {
      return looksLikeTree(line) ? line.trim() : null;
    },
    finalize(staged, outputPath) {
      const tmp = `${outputPath}.tmp`;
      const body = staged
        .map((entry) => JSON.stringify({ id: entry.id, tree: entry.payload }))
        .join("\n");
      fs.writeFileSync(tmp, body.length ? body + "\n" : "");
      fs.renameSync(tmp, outputPath);
    },
  });
}
