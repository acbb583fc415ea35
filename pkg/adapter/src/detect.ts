/**
 * Detector output to detection files.
 *
 * The adapter is detector-agnostic: any command that accepts an image
 * path as its final argument and prints one JSON document on stdout can
 * serve as the detector. Expected output shape:
 *
 *   {
 *     "width": 640, "height": 480,
 *     "detections": [{"category": "cat", "score": 0.93, "bbox": [x, y, w, h]}]
 *   }
 *
 * The adapter applies the score floor and the category-to-label map and
 * emits one schema file per image. Unreadable images are skipped with a
 * warning; a missing detector command is a hard, actionable error.
 */

import { spawnSync } from "node:child_process";
import { accessSync, constants, mkdirSync, writeFileSync } from "node:fs";
import { basename, extname, join } from "node:path";

import { LabelMap, mapLabel } from "./labels.js";
import {
  AdapterError,
  Detection,
  DetectionFile,
  SCHEMA_VERSION,
  serializeDetectionFile,
} from "./schema.js";

export interface AdapterConfig {
  /** Detector command; the image path is appended as the final argument. */
  detectorCmd: string[];
  /** Detections below this score are dropped before emission. */
  scoreFloor: number;
  /** Detector category to puzzle label; empty means identity. */
  labelMap: LabelMap;
}

export interface DetectResult {
  written: string[];
  skipped: string[];
}

interface DetectorOutput {
  width: number;
  height: number;
  detections: { category: string; score: number; bbox: number[] }[];
}

function runDetector(cmd: string[], imagePath: string): DetectorOutput {
  const proc = spawnSync(cmd[0], [...cmd.slice(1), imagePath], {
    encoding: "utf-8",
  });
  if (proc.error && (proc.error as NodeJS.ErrnoException).code === "ENOENT") {
    throw new AdapterError(
      `detector command ${JSON.stringify(cmd[0])} not found; ` +
        "install it or pass a different --detector",
    );
  }
  if (proc.status !== 0) {
    throw new AdapterError(
      `detector failed on ${imagePath} (exit ${proc.status}): ${proc.stderr.slice(0, 200)}`,
    );
  }
  let doc: unknown;
  try {
    doc = JSON.parse(proc.stdout);
  } catch (e) {
    throw new AdapterError(
      `detector printed invalid JSON for ${imagePath}: ${(e as Error).message}`,
    );
  }
  const record = doc as Record<string, unknown>;
  if (
    typeof record !== "object" ||
    record === null ||
    typeof record.width !== "number" ||
    typeof record.height !== "number" ||
    !Array.isArray(record.detections)
  ) {
    throw new AdapterError(
      `detector output for ${imagePath} must carry width, height and a detections list`,
    );
  }
  return record as unknown as DetectorOutput;
}

export function imageIdFor(imagePath: string): string {
  return basename(imagePath, extname(imagePath));
}

/**
 * Run the detector on each image and write one schema file per readable
 * image into outDir. Returns the written paths and the skipped images.
 */
export function detectToSchema(
  imagePaths: string[],
  cfg: AdapterConfig,
  outDir: string,
  warn: (message: string) => void = (m) => console.warn(m),
): DetectResult {
  if (cfg.detectorCmd.length === 0) {
    throw new AdapterError("detector command must be nonempty");
  }
  if (!(cfg.scoreFloor >= 0 && cfg.scoreFloor <= 1)) {
    throw new AdapterError("score floor must be in [0, 1]");
  }
  mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  const skipped: string[] = [];
  for (const imagePath of imagePaths) {
    try {
      accessSync(imagePath, constants.R_OK);
    } catch {
      warn(`skipping unreadable image ${imagePath}`);
      skipped.push(imagePath);
      continue;
    }
    const output = runDetector(cfg.detectorCmd, imagePath);
    const detections: Detection[] = [];
    for (const raw of output.detections) {
      if (typeof raw.score !== "number" || raw.score < cfg.scoreFloor) {
        continue;
      }
      if (
        !Array.isArray(raw.bbox) ||
        raw.bbox.length !== 4 ||
        raw.bbox.some((v) => typeof v !== "number")
      ) {
        throw new AdapterError(`detector emitted a malformed bbox for ${imagePath}`);
      }
      detections.push({
        label: mapLabel(cfg.labelMap, raw.category),
        score: raw.score,
        bbox: raw.bbox as [number, number, number, number],
      });
    }
    const file: DetectionFile = {
      schema_version: SCHEMA_VERSION,
      image_id: imageIdFor(imagePath),
      width: output.width,
      height: output.height,
      detections,
    };
    const outPath = join(outDir, `${imageIdFor(imagePath)}.json`);
    writeFileSync(outPath, serializeDetectionFile(file));
    written.push(outPath);
  }
  return { written, skipped };
}
