/**
 * COCO ground-truth annotations to detection files.
 *
 * Every annotation box becomes a detection with score 1.0: ground truth
 * carries no confidence, and 1.0 passes any downstream score threshold.
 * COCO bboxes are already top-left (x, y, w, h) in pixels, so only the
 * category name mapping is applied. The conversion is deterministic.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { LabelMap, mapLabel } from "./labels.js";
import {
  AdapterError,
  DetectionFile,
  SCHEMA_VERSION,
  serializeDetectionFile,
} from "./schema.js";

export interface CocoImage {
  id: number;
  file_name: string;
  width: number;
  height: number;
}

export interface CocoAnnotation {
  id: number;
  image_id: number;
  category_id: number;
  bbox: [number, number, number, number];
}

export interface CocoCategory {
  id: number;
  name: string;
}

export interface CocoDoc {
  images: CocoImage[];
  annotations: CocoAnnotation[];
  categories: CocoCategory[];
}

export function parseCoco(text: string): CocoDoc {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new AdapterError(`annotation file is not JSON: ${(e as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new AdapterError("annotation file must be a JSON object");
  }
  const record = doc as Record<string, unknown>;
  for (const key of ["images", "annotations", "categories"]) {
    if (!Array.isArray(record[key])) {
      throw new AdapterError(`annotation file is missing the ${key} list`);
    }
  }
  const images = (record.images as unknown[]).map(parseImage);
  const categories = (record.categories as unknown[]).map(parseCategory);
  const annotations = (record.annotations as unknown[]).map(parseAnnotation);
  return { images, annotations, categories };
}

function field(entry: Record<string, unknown>, key: string, where: string): unknown {
  if (!(key in entry)) {
    throw new AdapterError(`${where} entry is missing ${key}`);
  }
  return entry[key];
}

function parseImage(raw: unknown, i: number): CocoImage {
  const entry = asRecord(raw, `images[${i}]`);
  const id = asNumber(field(entry, "id", `images[${i}]`), `images[${i}].id`);
  const width = asNumber(field(entry, "width", `images[${i}]`), `images[${i}].width`);
  const height = asNumber(field(entry, "height", `images[${i}]`), `images[${i}].height`);
  const file_name = String(entry.file_name ?? "");
  if (width <= 0 || height <= 0) {
    throw new AdapterError(`images[${i}]: non-positive dimensions`);
  }
  return { id, file_name, width, height };
}

function parseCategory(raw: unknown, i: number): CocoCategory {
  const entry = asRecord(raw, `categories[${i}]`);
  const id = asNumber(field(entry, "id", `categories[${i}]`), `categories[${i}].id`);
  const name = field(entry, "name", `categories[${i}]`);
  if (typeof name !== "string" || !name) {
    throw new AdapterError(`categories[${i}]: name must be a nonempty string`);
  }
  return { id, name };
}

function parseAnnotation(raw: unknown, i: number): CocoAnnotation {
  const entry = asRecord(raw, `annotations[${i}]`);
  const id = asNumber(field(entry, "id", `annotations[${i}]`), `annotations[${i}].id`);
  const image_id = asNumber(
    field(entry, "image_id", `annotations[${i}]`),
    `annotations[${i}].image_id`,
  );
  const category_id = asNumber(
    field(entry, "category_id", `annotations[${i}]`),
    `annotations[${i}].category_id`,
  );
  const bbox = field(entry, "bbox", `annotations[${i}]`);
  if (
    !Array.isArray(bbox) ||
    bbox.length !== 4 ||
    bbox.some((v) => typeof v !== "number" || !Number.isFinite(v))
  ) {
    throw new AdapterError(`annotations[${i}]: bbox must be four numbers`);
  }
  return { id, image_id, category_id, bbox: bbox as [number, number, number, number] };
}

function asRecord(value: unknown, where: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new AdapterError(`${where} must be an object`);
  }
  return value as Record<string, unknown>;
}

function asNumber(value: unknown, where: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new AdapterError(`${where} must be a number`);
  }
  return value;
}

/**
 * Detection files for the requested image ids, keyed by image id.
 * Zero-annotation images yield valid files with empty detection lists.
 */
export function cocoToSchema(
  doc: CocoDoc,
  imageIds: number[],
  labelMap: LabelMap = {},
): Map<number, DetectionFile> {
  const imagesById = new Map(doc.images.map((img) => [img.id, img]));
  const categoriesById = new Map(doc.categories.map((cat) => [cat.id, cat.name]));
  const byImage = new Map<number, CocoAnnotation[]>();
  for (const ann of doc.annotations) {
    const group = byImage.get(ann.image_id);
    if (group) {
      group.push(ann);
    } else {
      byImage.set(ann.image_id, [ann]);
    }
  }

  const out = new Map<number, DetectionFile>();
  for (const imageId of imageIds) {
    const image = imagesById.get(imageId);
    if (image === undefined) {
      throw new AdapterError(`unknown image id ${imageId}`);
    }
    const annotations = (byImage.get(imageId) ?? []).slice();
    annotations.sort((a, b) => a.id - b.id);
    const detections = annotations.map((ann) => {
      const category = categoriesById.get(ann.category_id);
      if (category === undefined) {
        throw new AdapterError(
          `annotation ${ann.id} references unknown category id ${ann.category_id}`,
        );
      }
      return {
        label: mapLabel(labelMap, category),
        score: 1.0,
        bbox: ann.bbox,
      };
    });
    out.set(imageId, {
      schema_version: SCHEMA_VERSION,
      image_id: String(imageId),
      width: image.width,
      height: image.height,
      detections,
    });
  }
  return out;
}

/** Convert and write one file per image id; returns the written paths. */
export function writeCocoFiles(
  annotationPath: string,
  imageIds: number[],
  outDir: string,
  labelMap: LabelMap = {},
): string[] {
  const doc = parseCoco(readFileSync(annotationPath, "utf-8"));
  const files = cocoToSchema(doc, imageIds, labelMap);
  mkdirSync(outDir, { recursive: true });
  const paths: string[] = [];
  for (const [imageId, file] of files) {
    const path = join(outDir, `${imageId}.json`);
    writeFileSync(path, serializeDetectionFile(file));
    paths.push(path);
  }
  return paths;
}
