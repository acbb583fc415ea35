/**
 * Command line:
 *   adapter detect --images DIR --out DIR [--detector "CMD"] [--score-floor F] [--label-map FILE]
 *   adapter coco   --ann FILE --ids 1,2,3 --out DIR [--label-map FILE]
 *
 * Exit codes: 0 success, 1 adapter error, 2 usage error.
 */

import { readdirSync } from "node:fs";
import { join } from "node:path";
import { parseArgs } from "node:util";

import { writeCocoFiles } from "./coco.js";
import { detectToSchema } from "./detect.js";
import { LabelMap, loadLabelMap } from "./labels.js";
import { AdapterError } from "./schema.js";

const IMAGE_EXTENSIONS = new Set([".jpg", ".jpeg", ".png", ".bmp", ".webp"]);

function usage(): never {
  console.error(
    "usage: adapter detect --images DIR --out DIR [--detector CMD] " +
      "[--score-floor F] [--label-map FILE]\n" +
      "       adapter coco --ann FILE --ids 1,2,3 --out DIR [--label-map FILE]",
  );
  process.exit(2);
}

function labelMapFrom(path: string | undefined): LabelMap {
  return path === undefined ? {} : loadLabelMap(path);
}

function cmdDetect(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      images: { type: "string" },
      out: { type: "string" },
      detector: { type: "string" },
      "score-floor": { type: "string", default: "0" },
      "label-map": { type: "string" },
    },
  });
  if (!values.images || !values.out || !values.detector) {
    usage();
  }
  const images = readdirSync(values.images)
    .filter((name) => IMAGE_EXTENSIONS.has(name.slice(name.lastIndexOf("."))))
    .sort()
    .map((name) => join(values.images as string, name));
  const result = detectToSchema(
    images,
    {
      detectorCmd: (values.detector as string).split(/\s+/),
      scoreFloor: Number(values["score-floor"]),
      labelMap: labelMapFrom(values["label-map"]),
    },
    values.out,
  );
  for (const path of result.written) {
    console.log(path);
  }
  return 0;
}

function cmdCoco(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      ann: { type: "string" },
      ids: { type: "string" },
      out: { type: "string" },
      "label-map": { type: "string" },
    },
  });
  if (!values.ann || !values.ids || !values.out) {
    usage();
  }
  const ids = (values.ids as string).split(",").map((part) => {
    const id = Number(part.trim());
    if (!Number.isInteger(id)) {
      throw new AdapterError(`image ids must be integers, got ${JSON.stringify(part)}`);
    }
    return id;
  });
  const paths = writeCocoFiles(
    values.ann,
    ids,
    values.out,
    labelMapFrom(values["label-map"]),
  );
  for (const path of paths) {
    console.log(path);
  }
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "detect") {
      return cmdDetect(rest);
    }
    if (command === "coco") {
      return cmdCoco(rest);
    }
    usage();
  } catch (e) {
    if (e instanceof AdapterError) {
      console.error(`error: ${e.message}`);
      return 1;
    }
    const code = (e as NodeJS.ErrnoException).code ?? "";
    if (code.startsWith("ERR_PARSE_ARGS")) {
      usage();
    }
    throw e;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
