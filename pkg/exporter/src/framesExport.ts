import * as fs from "node:fs";
import * as path from "node:path";

import { runFileCommand, substitute } from "./command.js";
import {
  fingerprint,
  loadCheckpoint,
  saveCheckpoint,
  Checkpoint,
} from "./checkpoint.js";
import { appendJsonlLine, readJsonl, requireString } from "./jsonl.js";
import { frameSchedule } from "./schedule.js";

export interface FramesExportOptions {
  inputPath: string;
  outputDir: string;
  grabberCommand: string[];
  modelId: string;
  targetSpacing?: number;
  targetFrames?: number;
  checkpointPath?: string;
  maxFailureRate?: number;
}

export interface FramesExportResult {
  videos: number;
  frames: number;
  skipped: number;
  failed: number;
}

function frameFileName(videoId: string, time: number): string {
  return `${videoId}_${time.toFixed(3)}s.jpg`;
}

/**
 * Emit frame images at the standard schedule timestamps for an external
 * captioner.  Input is `{"video_id", "path", "duration"}` JSONL; the
 * grabber command template is expanded per frame with {input}, {time}
 * and {output}.  Frame filenames are deterministic, so resuming
 * overwrites rather than duplicates; the manifest is rewritten on
 * success from the completed set.
 */
export function exportFrames(options: FramesExportOptions): FramesExportResult {
  const fp = fingerprint([options.inputPath, options.outputDir, options.modelId]);
  const checkpointPath =
    options.checkpointPath ?? path.join(options.outputDir, "frames.ckpt");
  fs.mkdirSync(options.outputDir, { recursive: true });
  let checkpoint: Checkpoint | null = loadCheckpoint(checkpointPath, fp);
  if (checkpoint === null) {
    checkpoint = { fingerprint: fp, modelId: options.modelId, done: [], failed: [] };
  }
  const seen = new Set([...checkpoint.done, ...checkpoint.failed]);

  const records = readJsonl(options.inputPath);
  const videos: Array<{ id: string; path: string; duration: number }> = [];
  const ids = new Set<string>();
  for (const record of records) {
    const id = requireString(record, "video_id", options.inputPath);
    if (ids.has(id)) {
      throw new Error(`${options.inputPath}: duplicate video id "${id}"`);
    }
    ids.add(id);
    const duration = record["duration"];
    if (typeof duration !== "number" || !(duration > 0)) {
      throw new Error(`${options.inputPath}: video ${id} needs duration > 0`);
    }
    videos.push({
      id,
      path: requireString(record, "path", options.inputPath),
      duration,
    });
  }

  let skipped = 0;
  let frames = 0;
  for (const video of videos) {
    if (seen.has(video.id)) {
      skipped++;
      continue;
    }
    const times = frameSchedule(
      video.duration,
      options.targetSpacing ?? 3.6,
      options.targetFrames ?? 5,
    );
    let ok = true;
    for (const time of times) {
      const outFile = path.join(options.outputDir, frameFileName(video.id, time));
      try {
        runFileCommand(
          substitute(options.grabberCommand, {
            input: video.path,
            time: time.toFixed(3),
            output: outFile,
          }),
        );
        frames++;
      } catch (err) {
        process.stderr.write(`video ${video.id} @ ${time.toFixed(3)}s: ${err}\n`);
        ok = false;
        break;
      }
    }
    (ok ? checkpoint.done : checkpoint.failed).push(video.id);
    saveCheckpoint(checkpointPath, checkpoint);
  }

  const doneSet = new Set(checkpoint.done.filter((id) => ids.has(id)));
  const manifestTmp = path.join(options.outputDir, "frames.jsonl.tmp");
  fs.writeFileSync(manifestTmp, "");
  for (const video of videos) {
    if (!doneSet.has(video.id)) continue;
    for (const time of frameSchedule(
      video.duration,
      options.targetSpacing ?? 3.6,
      options.targetFrames ?? 5,
    )) {
      appendJsonlLine(manifestTmp, {
        video_id: video.id,
        frame_time: time,
        path: frameFileName(video.id, time),
      });
    }
  }
  fs.renameSync(manifestTmp, path.join(options.outputDir, "frames.jsonl"));

  const failed = checkpoint.failed.filter((id) => ids.has(id)).length;
  if (records.length > 0 && failed / records.length > (options.maxFailureRate ?? 0.01)) {
    throw new Error(
      `${failed}/${records.length} videos failed, over the failure budget`,
    );
  }
  return { videos: videos.length, frames, skipped, failed };
}
