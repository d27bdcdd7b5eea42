#!/usr/bin/env node
/**
 * avstk-export: produce toolkit input files from external tools.
 *
 *   avstk-export trees      --input captions.jsonl --output corpus.trees.jsonl
 *                           --parser-cmd "node parser.js" [--model-id ID]
 *                           [--batch-size 64] [--checkpoint PATH]
 *   avstk-export embeddings --input items.jsonl --output store.avsv
 *                           --encoder-cmd "node encoder.js" --dim 512 [...]
 *   avstk-export frames     --input videos.jsonl --output-dir frames/
 *                           --grabber-cmd "ffmpeg -ss {time} -i {input} ... {output}"
 *
 * Exit codes: 0 success, 1 usage error, 2 unreachable tool or bad data,
 * 3 failure budget exceeded (>1% of records skipped).
 */

import { parseArgs } from "node:util";

import { CommandUnreachable } from "./command.js";
import { exportEmbeddings } from "./embeddingsExport.js";
import { exportFrames } from "./framesExport.js";
import { exportTrees } from "./treesExport.js";

class UsageError extends Error {}

function usage(message: string): never {
  throw new UsageError(message);
}

function splitCommand(raw: string | undefined, flag: string): string[] {
  if (!raw || !raw.trim()) usage(`missing required ${flag}`);
  return raw.trim().split(/\s+/);
}

export function main(argv: string[]): number {
  try {
    return run(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      process.stderr.write(`avstk-export: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

function run(argv: string[]): number {
  const [subcommand, ...rest] = argv;
  if (!subcommand) usage("expected a subcommand: trees | embeddings | frames");

  const spec = {
    options: {
      input: { type: "string" as const },
      output: { type: "string" as const },
      "output-dir": { type: "string" as const },
      "parser-cmd": { type: "string" as const },
      "encoder-cmd": { type: "string" as const },
      "grabber-cmd": { type: "string" as const },
      "model-id": { type: "string" as const, default: "unspecified" },
      "batch-size": { type: "string" as const, default: "64" },
      checkpoint: { type: "string" as const },
      dim: { type: "string" as const },
      spacing: { type: "string" as const, default: "3.6" },
      frames: { type: "string" as const, default: "5" },
      "max-failure-rate": { type: "string" as const, default: "0.01" },
    },
  };
  let values: Record<string, string | undefined>;
  try {
    values = parseArgs({ args: rest, ...spec, strict: true }).values as Record<
      string,
      string | undefined
    >;
  } catch (err) {
    usage((err as Error).message);
  }

  const input = values.input ?? usage("missing required --input");
  const batchSize = Number(values["batch-size"]);
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    usage(`--batch-size must be a positive integer`);
  }
  const maxFailureRate = Number(values["max-failure-rate"]);

  try {
    if (subcommand === "trees") {
      const output = values.output ?? usage("missing required --output");
      const result = exportTrees({
        inputPath: input,
        outputPath: output,
        parserCommand: splitCommand(values["parser-cmd"], "--parser-cmd"),
        modelId: values["model-id"] ?? "unspecified",
        batchSize,
        checkpointPath: values.checkpoint,
        maxFailureRate,
      });
      process.stderr.write(
        `trees: ${result.processed} parsed, ${result.skipped} resumed, ` +
          `${result.failed} failed -> ${output}\n`,
      );
    } else if (subcommand === "embeddings") {
      const output = values.output ?? usage("missing required --output");
      const dim = Number(values.dim ?? usage("missing required --dim"));
      const result = exportEmbeddings({
        inputPath: input,
        outputPath: output,
        encoderCommand: splitCommand(values["encoder-cmd"], "--encoder-cmd"),
        modelId: values["model-id"] ?? "unspecified",
        batchSize,
        dim,
        checkpointPath: values.checkpoint,
        maxFailureRate,
      });
      process.stderr.write(
        `embeddings: ${result.processed} encoded, ${result.skipped} resumed, ` +
          `${result.failed} failed -> ${output}\n`,
      );
    } else if (subcommand === "frames") {
      const outputDir = values["output-dir"] ?? usage("missing required --output-dir");
      const result = exportFrames({
        inputPath: input,
        outputDir,
        grabberCommand: splitCommand(values["grabber-cmd"], "--grabber-cmd"),
        modelId: values["model-id"] ?? "unspecified",
        targetSpacing: Number(values.spacing),
        targetFrames: Number(values.frames),
        checkpointPath: values.checkpoint,
        maxFailureRate,
      });
      process.stderr.write(
        `frames: ${result.frames} written over ${result.videos} videos, ` +
          `${result.skipped} resumed, ${result.failed} failed -> ${outputDir}\n`,
      );
    } else {
      usage(`unknown subcommand "${subcommand}"`);
    }
  } catch (err) {
    if (err instanceof UsageError) throw err;
    if (err instanceof CommandUnreachable) {
      process.stderr.write(`avstk-export: external tool unreachable: ${err.message}\n`);
      return 2;
    }
    const message = (err as Error).message ?? String(err);
    if (message.includes("over the")) {
      process.stderr.write(`avstk-export: ${message}\n`);
      return 3;
    }
    process.stderr.write(`avstk-export: ${message}\n`);
    return 2;
  }
  return 0;
}

import { pathToFileURL } from "node:url";

if (
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href
) {
  process.exit(main(process.argv.slice(2)));
}
