/**
 * Category-to-label mapping shared by both adapter sources.
 *
 * An empty map means identity: category names become labels unchanged.
 * A non-empty map must cover every category the input mentions; an
 * unmapped category is a configuration error, not something to guess at.
 */

import { readFileSync } from "node:fs";

import { AdapterError } from "./schema.js";

export type LabelMap = Record<string, string>;

export function mapLabel(map: LabelMap, category: string): string {
  if (Object.keys(map).length === 0) {
    return category;
  }
  const label = map[category];
  if (label === undefined) {
    throw new AdapterError(
      `category ${JSON.stringify(category)} has no entry in the label map`,
    );
  }
  return label;
}

/** Load a {"category": "label", ...} JSON file. */
export function loadLabelMap(path: string): LabelMap {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf-8"));
  } catch (e) {
    throw new AdapterError(`label map ${path}: ${(e as Error).message}`);
  }
  if (
    typeof doc !== "object" ||
    doc === null ||
    Array.isArray(doc) ||
    Object.values(doc).some((v) => typeof v !== "string")
  ) {
    throw new AdapterError(`label map ${path}: must map category strings to label strings`);
  }
  return doc as LabelMap;
}
