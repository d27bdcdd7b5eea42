import { runBatchJob, BatchJobResult } from "./batchJob.js";
import { writeAvsv } from "./avsv.js";

export interface EmbeddingsExportOptions {
  inputPath: string;
  outputPath: string;
  encoderCommand: string[];
  modelId: string;
  batchSize: number;
  dim: number;
  checkpointPath?: string;
  maxFailureRate?: number;
}

/**
 * Extract dense vectors from an external encoder into the toolkit's
 * AVSV binary.  The encoder reads `{"id", "text"}` JSON lines on stdin
 * and answers `{"id", "values": [...]}` per line; a record whose answer
 * has the wrong id, dimension, or non-finite entries is skipped and
 * counted against the failure budget.
 */
export function exportEmbeddings(options: EmbeddingsExportOptions): BatchJobResult {
  if (options.dim < 1) throw new Error(`dim must be >= 1, got ${options.dim}`);
  return runBatchJob({
    inputPath: options.inputPath,
    outputPath: options.outputPath,
    checkpointPath: options.checkpointPath ?? `${options.outputPath}.ckpt`,
    modelId: options.modelId,
    batchSize: options.batchSize,
    command: options.encoderCommand,
    maxFailureRate: options.maxFailureRate ?? 0.01,
    renderInput(record) {
      return JSON.stringify(record);
    },
    acceptOutput(id, line) {
      let parsed: { id?: unknown; values?: unknown };
      try {
        parsed = JSON.parse(line) as { id?: unknown; values?: unknown };
      } catch {
        return null;
      }
      if (parsed.id !== id || !Array.isArray(parsed.values)) return null;
      if (parsed.values.length !== options.dim) return null;
      if (!parsed.values.every((v) => typeof v === "number" && Number.isFinite(v))) {
        return null;
      }
      return parsed.values as number[];
    },
    finalize(staged, outputPath) {
      writeAvsv(
        outputPath,
        staged.map((entry) => ({ id: entry.id, values: entry.payload as number[] })),
        options.dim,
      );
    },
  });
}
