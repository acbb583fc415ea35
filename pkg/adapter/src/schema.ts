/**
 * Detection file schema 1.0, mirrored from the consumer's contract.
 *
 * One JSON document per image: image identity, pixel dimensions, and a
 * flat list of labeled, scored bounding boxes in top-left (x, y, w, h)
 * pixel coordinates. The consumer re-validates on load; this module
 * validates on emit so broken files never leave the adapter.
 */

export const SCHEMA_VERSION = "1.0";

export interface Detection {
  label: string;
  score: number;
  bbox: [number, number, number, number];
  box_id?: string;
}

export interface DetectionFile {
  schema_version: string;
  image_id: string;
  width: number;
  height: number;
  detections: Detection[];
}

export class AdapterError extends Error {}

const FILE_FIELDS = new Set([
  "schema_version",
  "image_id",
  "width",
  "height",
  "detections",
]);
const DETECTION_FIELDS = new Set(["label", "score", "bbox", "box_id"]);

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

/** Schema violations in the document, as human-readable strings. */
export function validateDetectionFile(doc: unknown): string[] {
  const errors: string[] = [];
  if (!isRecord(doc)) {
    return ["top level must be an object"];
  }
  for (const key of Object.keys(doc)) {
    if (!FILE_FIELDS.has(key)) {
      errors.push(`unknown field ${key}`);
    }
  }
  for (const key of FILE_FIELDS) {
    if (!(key in doc)) {
      errors.push(`missing field ${key}`);
    }
  }
  if ("schema_version" in doc && doc.schema_version !== SCHEMA_VERSION) {
    errors.push(`schema_version must be ${SCHEMA_VERSION}`);
  }
  if ("image_id" in doc && (typeof doc.image_id !== "string" || !doc.image_id)) {
    errors.push("image_id must be a nonempty string");
  }
  for (const key of ["width", "height"] as const) {
    const value = doc[key];
    if (key in doc && (typeof value !== "number" || !Number.isFinite(value) || value <= 0)) {
      errors.push(`${key} must be a positive number`);
    }
  }
  if ("detections" in doc) {
    if (!Array.isArray(doc.detections)) {
      errors.push("detections must be a list");
    } else {
      doc.detections.forEach((det, i) => {
        errors.push(...validateDetection(det).map((e) => `detections[${i}]: ${e}`));
      });
    }
  }
  return errors;
}

function validateDetection(det: unknown): string[] {
  const errors: string[] = [];
  if (!isRecord(det)) {
    return ["must be an object"];
  }
  for (const key of Object.keys(det)) {
    if (!DETECTION_FIELDS.has(key)) {
      errors.push(`unknown field ${key}`);
    }
  }
  for (const key of ["label", "score", "bbox"]) {
    if (!(key in det)) {
      errors.push(`missing field ${key}`);
    }
  }
  if ("label" in det && (typeof det.label !== "string" || !det.label)) {
    errors.push("label must be a nonempty string");
  }
  if (
    "score" in det &&
    (typeof det.score !== "number" || !(det.score >= 0 && det.score <= 1))
  ) {
    errors.push("score must be in [0, 1]");
  }
  if ("bbox" in det) {
    const bbox = det.bbox;
    if (
      !Array.isArray(bbox) ||
      bbox.length !== 4 ||
      bbox.some((v) => typeof v !== "number" || !Number.isFinite(v))
    ) {
      errors.push("bbox must be four finite numbers [x, y, w, h]");
    } else if (bbox[2] <= 0 || bbox[3] <= 0) {
      errors.push("bbox extent must be positive");
    }
  }
  if ("box_id" in det && typeof det.box_id !== "string") {
    errors.push("box_id must be a string");
  }
  return errors;
}

/** Stable text form: sorted keys, two-space indent, trailing newline. */
export function serializeDetectionFile(file: DetectionFile): string {
  const errors = validateDetectionFile(file);
  if (errors.length > 0) {
    throw new AdapterError(`refusing to emit an invalid file: ${errors.join("; ")}`);
  }
  return stableStringify(file) + "\n";
}

function stableStringify(value: unknown): string {
  return JSON.stringify(sortKeys(value), null, 2);
}

function sortKeys(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortKeys);
  }
  if (isRecord(value)) {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value).sort()) {
      out[key] = sortKeys(value[key]);
    }
    return out;
  }
  return value;
}
